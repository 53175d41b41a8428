"""Experiment configuration files.

A configuration is an INI document.  ``[experiment]`` names the command
and the seed; the other sections describe the model and the checks.
Parsing resolves every default, so :meth:`ExperimentConfig.to_text`
writes a fully explicit document which parses back to the same
configuration.

Example::

    [experiment]
    command = acf
    seed = 7
    lambda = 1.0

    [noise]
    kind = fbm
    H = 0.7
"""

import configparser
from dataclasses import dataclass

import numpy as np

from .drivers import LevyTriplet, VolatilitySpec
from .exceptions import ConfigError, QouError
from .grid import TimeGrid
from .kernels import Indicator, Power, Tabulated, TruncPower, fractional_kernel, unit_bump
from .noise import DriftNoise, FBMNoise, PMANoise, SVNoise

COMMANDS = ("simulate", "acf", "kernel", "verify-asymptotics", "stability", "fubini-check", "moments")

_REQUIRED = object()
_NONE = ""


def _floats(text):
    text = text.strip()
    if not text:
        return None
    return tuple(float(x) for x in text.replace(";", ",").split(","))


def _opt_float(text):
    text = text.strip()
    return None if text.lower() in ("", "none") else float(text)


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# (parser, default); defaults of None mean "derived after parsing"
SCHEMA = {
    "experiment": {
        "command": (str, _REQUIRED),
        "seed": (int, _REQUIRED),
        "lambda": (float, 1.0),
        "n_paths": (int, 200),
        "threads": (int, 1),
        "format": (str, "csv"),
    },
    "noise": {
        "kind": (str, "fbm"),
        "H": (float, 0.5),
        "sigma": (float, 1.0),
        "drift": (float, 0.0),
        "vol": (str, "constant"),
        "level": (float, 1.0),
        "kappa": (float, 1.0),
        "v": (float, 0.0),
        "mean_square": (float, 1.0),
    },
    "kernel": {
        "kind": (str, "fractional"),
        "H": (float, 0.5),
        "c": (float, 1.0),
        "beta": (float, 0.0),
        "r0": (float, 1.0),
        "delta": (float, 0.0),
        "knots": (_floats, None),
        "values": (_floats, None),
        "tail_exponent": (_opt_float, None),
    },
    "driver": {
        "kind": (str, "brownian"),
        "variance": (float, 1.0),
        "alpha": (float, 2.0),
        "scale": (float, 1.0),
        "rate": (float, 1.0),
        "jump_mean": (float, 0.0),
        "jump_sd": (float, 1.0),
    },
    "grid": {
        "start": (float, 0.0),
        "stop": (float, 4.0),
        "step": (float, 0.01),
    },
    "simulation": {
        "route": (str, "explicit"),
        "rule": (str, "cell-average"),
        "trunc": (_opt_float, None),
        "burn_in": (_opt_float, None),
        "tol": (float, 1e-6),
        "far_field": (_bool, False),
    },
    "windows": {
        "tail": (_floats, None),
        "short": (_floats, (1e-4, 1e-2)),
        "n_lags": (int, 11),
        "lags": (_floats, (0.0, 0.5, 1.0, 2.0)),
    },
    "tolerances": {
        "exponent": (float, 0.05),
        "constant": (float, 0.05),
        "se_multiple": (float, 4.0),
        "kernel": (float, 1e-10),
        "slope": (float, 0.4),
        "moments": (float, 1e-8),
    },
    "stability": {
        "H": (float, 0.3),
        "bump_a": (float, 0.0),
        "bump_b": (float, 1.0),
        "bump_height": (float, 1.0),
        "window": (_floats, None),
        "exponent": (float, 0.08),
    },
    "fubini": {
        "kernel": (str, "exp_triangle"),
        "halvings": (int, 3),
        "x_hi": (float, 1.0),
    },
}


def _render(value):
    if value is None:
        return _NONE
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class ExperimentConfig:
    """Resolved configuration: ``values[section][key]`` with every default filled in."""

    values: dict

    @property
    def command(self):
        return self.values["experiment"]["command"]

    @property
    def seed(self):
        return self.values["experiment"]["seed"]

    @property
    def lam(self):
        return self.values["experiment"]["lambda"]

    def __getitem__(self, section):
        return self.values[section]

    def to_text(self):
        out = []
        for sec, keys in SCHEMA.items():
            out.append(f"[{sec}]")
            for k in keys:
                out.append(f"{k} = {_render(self.values[sec][k])}".rstrip())
            out.append("")
        return "\n".join(out)

    def with_overrides(self, **experiment):
        vals = {s: dict(v) for s, v in self.values.items()}
        vals["experiment"].update({k: v for k, v in experiment.items() if v is not None})
        return validate(ExperimentConfig(vals))

    # model objects ------------------------------------------------------
    def driver(self):
        d = self["driver"]
        return _build("driver", lambda: _driver(d))

    def kernel(self):
        k = self["kernel"]
        alpha = self.driver().stable_alpha
        return _build("kernel", lambda: _kernel(k, alpha))

    def noise(self):
        n = self["noise"]
        kind = n["kind"]
        if kind == "fbm":
            base = _build("noise", lambda: FBMNoise(n["H"], n["sigma"]))
        elif kind == "pma":
            base = _build("noise", lambda: PMANoise(self.kernel(), self.driver()))
        elif kind == "sv":
            base = _build("noise", lambda: SVNoise(VolatilitySpec(n["vol"], n["level"], n["kappa"], n["v"],
                                                                  n["mean_square"])))
        else:
            raise ConfigError(f"[noise] kind: unknown noise kind {kind!r} (fbm, pma, sv)")
        if n["drift"] != 0:
            return _build("noise", lambda: DriftNoise(base, n["drift"]))
        return base

    def grid(self):
        g = self["grid"]
        return _build("grid", lambda: TimeGrid.span(g["start"], g["stop"], g["step"]))

    def bump(self):
        s = self["stability"]
        if s["bump_height"] == 0:
            return Tabulated([s["bump_a"], s["bump_b"]], [0.0, 0.0])
        return _build("stability", lambda: unit_bump(s["bump_a"], s["bump_b"], s["bump_height"]))


def _build(section, make):
    try:
        return make()
    except ConfigError:
        raise
    except QouError as exc:
        raise ConfigError(f"[{section}] {exc.args[0] if exc.args else exc}") from None


def _driver(d):
    kind = d["kind"]
    if kind == "brownian":
        return LevyTriplet.brownian(d["variance"])
    if kind == "stable":
        return LevyTriplet.stable(d["alpha"], d["scale"])
    if kind == "compound_poisson":
        return LevyTriplet.compound_poisson(d["rate"], d["jump_mean"], d["jump_sd"])
    raise ConfigError(f"[driver] kind: unknown driver kind {kind!r} (brownian, stable, compound_poisson)")


def _kernel(k, alpha):
    kind = k["kind"]
    if kind == "fractional":
        return fractional_kernel(k["H"], alpha)
    if kind == "indicator":
        return Indicator()
    if kind == "power":
        return Power(k["c"], k["beta"])
    if kind == "trunc_power":
        return TruncPower(k["r0"], k["delta"], k["H"])
    if kind == "tabulated":
        if k["knots"] is None or k["values"] is None:
            raise ConfigError("[kernel] a tabulated kernel needs knots and values")
        return Tabulated(k["knots"], k["values"], k["tail_exponent"])
    raise ConfigError(f"[kernel] kind: unknown kernel kind {kind!r}")


def parse_config(text, *, source="<config>"):
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigError
        Syntax errors, unknown sections or keys (with their location),
        bad values, a missing seed, or model parameters out of range.
    """
    cp = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{sec}]")
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{source}: unknown key {key!r} in section [{sec}]")
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (conv, default) in keys.items():
            if cp.has_option(sec, key):
                raw = cp.get(sec, key)
                try:
                    values[sec][key] = conv(raw)
                except ValueError as exc:
                    raise ConfigError(f"{source}: [{sec}] {key} = {raw!r}: {exc}") from None
            elif default is _REQUIRED:
                what = "seed (wall-clock seeding is not allowed)" if key == "seed" else key
                raise ConfigError(f"{source}: [{sec}] missing required {what}")
            else:
                values[sec][key] = default
    return validate(ExperimentConfig(values))


def validate(cfg):
    """Resolve derived defaults and check the blocks the command needs."""
    v = cfg.values
    e = v["experiment"]
    if e["command"] not in COMMANDS:
        raise ConfigError(f"[experiment] command: unknown command {e['command']!r}; use one of {COMMANDS}")
    if not e["seed"] >= 0:
        raise ConfigError("[experiment] seed must be a nonnegative integer")
    if not e["lambda"] > 0:
        raise ConfigError("[experiment] lambda must be positive")
    if e["n_paths"] < 1 or e["threads"] < 1:
        raise ConfigError("[experiment] n_paths and threads must be positive")
    if e["format"] not in ("csv", "json"):
        raise ConfigError("[experiment] format must be csv or json")
    lam = e["lambda"]
    if v["windows"]["tail"] is None:
        v["windows"]["tail"] = (50.0 / lam, 500.0 / lam)
    if v["stability"]["window"] is None:
        v["stability"]["window"] = (1e4 / lam, 1e5 / lam)
    for sec, key in (("windows", "tail"), ("windows", "short"), ("stability", "window")):
        w = v[sec][key]
        if len(w) != 2 or not 0 < w[0] < w[1]:
            raise ConfigError(f"[{sec}] {key} must be two increasing positive numbers")
    for key, tol in v["tolerances"].items():
        if not tol > 0:
            raise ConfigError(f"[tolerances] {key} must be positive")
    if not v["stability"]["exponent"] > 0:
        raise ConfigError("[stability] exponent tolerance must be positive")
    if v["simulation"]["route"] not in ("explicit", "moving-average"):
        raise ConfigError("[simulation] route must be explicit or moving-average")
    if v["simulation"]["rule"] not in ("cell-average", "left-point"):
        raise ConfigError("[simulation] rule must be cell-average or left-point")
    if v["fubini"]["kernel"] not in ("unit_step", "exp_triangle"):
        raise ConfigError("[fubini] kernel must be unit_step or exp_triangle")
    cmd = e["command"]
    if cmd in ("simulate", "acf", "verify-asymptotics", "moments"):
        cfg.noise()
    if cmd == "kernel":
        cfg.kernel()
    if cmd in ("simulate", "kernel", "fubini-check"):
        cfg.grid()
    if cmd == "fubini-check":
        cfg.driver()
    if cmd == "stability":
        H = v["stability"]["H"]
        if not 0 < H < 1 or H == 0.5:
            raise ConfigError(f"[stability] H must lie in (0, 1) and differ from 1/2, got {H}")
        cfg.bump()
    return cfg


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read(), source=str(path))

"""Counter-based random substreams.

Each stream is a Philox generator keyed by ``(seed, path, tag)``. Streams
for different paths or sub-processes never overlap, and a path's draws do
not depend on how many other paths exist or in which order (or on which
worker) they are generated.
"""

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def tag_code(tag):
    """Stable 32-bit code for a stream tag name."""
    return zlib.crc32(tag.encode("ascii"))


def substream(seed, path=0, tag="main"):
    """Return an independent ``numpy.random.Generator`` for one stream.

    Parameters
    ----------
    seed : int
        Master seed (interpreted modulo 2**64).
    path : int
        Path index within an ensemble.
    tag : str
        Sub-process name, e.g. ``"driver"``, ``"vol"``, ``"far"``.
    """
    seed = int(seed) & _MASK64
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(int(path), tag_code(tag)))
    return np.random.Generator(np.random.Philox(ss))

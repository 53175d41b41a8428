"""Quasi Ornstein-Uhlenbeck processes: simulation, kernels and asymptotic analytics.

Stationary solutions of ``dX = -lam X dt + dN`` for noise ``N`` with
stationary increments: fractional Brownian motion, pseudo-moving averages
of Levy drivers, and volatility-modulated Brownian motion.
"""

__version__ = "0.1.0"

from .analytics import (AsymptoticFit, CovarianceCurve, Prediction, acf_short_lag_prediction,
                        acf_tail_prediction, asymptotic_constants, complementary_acf, empirical_acf,
                        fit_power_law, j_alpha, k_alpha, noise_acf, stability_experiment,
                        stationary_moments, theoretical_acf)
from .config import ExperimentConfig, parse_config
from .drivers import (CompoundPoisson, LevyTriplet, StableJumps, VolatilitySpec, sample_levy_increments,
                      sample_sv_increments)
from .exceptions import *  # noqa: F401,F403
from .grid import TimeGrid
from .integrability import (ModularSpec, WeightedBivariateKernel, fubini_check, lp_growth_check, lphi_norm,
                            pma_admissibility, phi_value)
from .kernels import (Indicator, MovingAverageKernel, Perturbed, Power, Tabulated, TruncPower,
                      cancellation_integral, fractional_kernel, psi_tail_asymptote, psi_transform,
                      unit_bump)
from .langevin import PathEnsemble, QouConfig, langevin_residual, qou_from_noise, qou_ma_path, simulate_qou
from .noise import (DriftNoise, FBMNoise, PMANoise, Path, SVNoise, simulate_fbm, simulate_noise, simulate_pma,
                    variance_function)

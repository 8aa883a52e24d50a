"""Balanced multi-draw urn schemes: expansion, spectra, exact moments and simulation."""

from .catalog import EXAMPLES, get_example
from .combinatorics import (Composition, composition_rank, count_compositions,
                            enumerate_compositions, falling_factorial, iter_compositions,
                            multinomial)
from .errors import InvalidArgument, ModelError, NumericError, TenabilityViolation, UrnError
from .model import (Mode, ReplacementMatrix, UrnSpec, ValidationReport,
                    build_replacement_matrix, check_irreducible, validate)
from .moments import (AsymptoticSummary, MomentTrajectory, b_matrix, clt_params, exact_cov,
                      exact_mean, exact_moments_rational, moment_trajectory, qcal_conditional,
                      qcal_limit, sigma_critical, sigma_small)
from .simulator import (MonteCarloSummary, Thresholds, Trajectory, UrnState, compare,
                        draw_sample, monte_carlo, sample_many, simulate_one, step)
from .spectral import (EigenGroup, Regime, SpectralDecomposition, classify, decompose,
                       f_gamma_ratio, f_product, f_scalar, matrix_power_x, principal_pair)

__version__ = "0.1.0"

"""Polynomial closed-form GN model for fiber nonlinear interference."""

from .geometry import (Channel, FrequencyRectangle, Island, IslandKind, WdmComb,
                       dispersion_scale, enumerate_islands, frequency_rectangle,
                       lambda_coefficients)
from .islands import (FallbackRequired, InternalConsistencyError, ModelConfig, NliResult, Span,
                      SpanParams, f_kernel, g_nli_island, i_nm, k_x_cancellation, k_x_closed,
                      nli_psd_total)
from .oracle import (OracleNonConvergence, QuadratureConfig, f_kernel_quadrature,
                     i_nm_quadrature, k_x_quadrature)
from .special_functions import (SpecialFnConfig, beta_integer, script_i, si_over_t_primitive,
                                sine_moment)
from .spp import PolynomialSpp, PowerProfile, compose_island_profile, fit_polynomial

__version__ = "0.1.0"

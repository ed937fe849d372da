"""Super-resolution of nonnegative measures under tensor-product PSFs."""

from .measure import (AtomicMeasure, GridMeasure, NeighborhoodSpec, SeparationError,
                      SignedMeasure, approximate_residual, region_mass, separation,
                      support, tv_norm)
from .psf import (ComponentPSF, GaussianKernel, ObservationTensor, TableKernel, TensorPSF,
                  add_noise, eval_column, forward, lipschitz_estimate, misfit)
from .metrics import (bound_constants, d_gw, evaluate_bound, g_bar,
                      generalized_wasserstein, wasserstein)
from .solver import Dictionary, SolveResult, extract_support, solve_feasibility
from .certificates import (Certificate, CertificateError, HypothesisError, TargetFunction,
                           build_away_Q, build_near_family, build_near_Q0,
                           build_noiseless_Q, enumerate_partitions,
                           partition_inequality_oracle, positivity_report,
                           t_star_conditions, verify_certificate)
from .chebyshev import (FunctionFamily, check_t_star, check_t_system,
                        fit_majorant_polynomial, fit_vanishing_polynomial)

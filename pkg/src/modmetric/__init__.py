"""Metric modulars, modular contractions and initial-value problems in phi-variation spaces."""
from .extreal import INFINITY, ExtReal
from .fixed_point import (ContractionSpec, FixedPointTrace, InfiniteGap, InfiniteSeed, MaxIter,
                          check_modular_contraction, check_strong_contraction,
                          chain_inequality_sides, limsup_ratio_probe,
                          lipschitz_equivalence_check, picard_solve)
from .gv_modular import (ACFunction, closed_w_alpha, closed_w_beta_bound, displacement_bound,
                         example_x_alpha, example_x_beta, gv_integral, gv_modular, gv_partition)
from .modular_core import (AxiomReport, CapExceeded, ModularError, ModularEvaluator, Verdict,
                           canonical_modular, check_axioms, convexify, euclidean, hat,
                           in_modular_space, metric_dw, metric_dw_star, metric_kappa, regularize)
from .ode import (CaratheodoryProblem, integral_operator, make_problem, seed_bound, solve_ivp,
                  verify_contraction_factor)
from .phi_functions import EXP_MINUS_ONE, LINEAR, PhiFunction, get_phi, power
from .sequences import (delta2_probe, lambda_profile, metric_vs_modular_convergence,
                        modular_cauchy_verdict)

__all__ = [name for name in dir() if not name.startswith("_")]

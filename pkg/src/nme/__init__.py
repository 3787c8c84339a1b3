"""Continuation solver for ``f(x) = y`` on truncated graded spaces of
trigonometric polynomials, with tame-bound certification."""
from nme.compactness import (ExtractionResult, SequenceSource, extract_convergent,
                             membership_via_distances, sup_norms)
from nme.continuation import (BoundReport, ContinuationConfig, ContinuationTrace,
                              SolveOutcome, StepRecord, dense_newton_oracle, solve,
                              step_acceptable, verify_theorem_bounds)
from nme.errors import (GuardExit, MaxSteps, NMEError, SolverError, StepUnderflow,
                        TameViolation)
from nme.graded_space import (BoundSeq, GradedElement, GradingSpec, bound_product,
                              box_contains, derivative, distance_n, metric,
                              metric_slack, norm, random_element, shift_levels,
                              unit_ball)
from nme.kernels import BACKEND
from nme.tame_problems import (CATALOG, TameCheckReport, TameProblem, check_tame_at,
                               directional_derivative_fd, estimate_constants,
                               identity_problem, nonlinear_smoothing_problem,
                               problem_from_config, quadratic_problem,
                               sampled_box_inclusion, scaled_identity_problem,
                               smoothing_problem)

__version__ = "0.1.0"

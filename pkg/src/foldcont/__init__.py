"""Numerical continuation of solution branches of -Lap v = mu f(v)
with fold detection and domain-variation diagnostics."""

from .errors import (BlowupError, BracketError, ConfigError,
                     DegenerateMapError, DegeneratePoint, DomainError,
                     EigSolverFailure, FoldcontError, InsufficientSamples,
                     NewtonFailure, NoConvergence, NotAFold, SingularBordered,
                     SingularJacobian, StepFailure)
from .nonlinearity import (GrowthReport, NonlinearitySpec, check_growth,
                           check_h1, custom, eval_f, exponential, power,
                           spec_from_key)
from .mesh import Mesh, ReferenceDomain, build_mesh, domain_from_key
from .diffeo import (ConstantField, Diffeomorphism, DiskRadialField,
                     IntervalEndField, LinearField, RectBoundaryField,
                     collar_basis, identity_diffeo, random_diffeo)
from .assemble import (DiscreteOperator, PullbackCoefficients,
                       assemble_elliptic, normal_derivative,
                       physical_gradient, pullback_fields)
from .solver import (LinearizedOperator, StateVector, bordered_solve,
                     linearize, newton_correct, residual)
from .spectral import (CRDiagnostics, EigenPair, FoldRecord,
                       cr_expansion_check, eigenpairs, morse_index,
                       near_zero_eigenpairs, track_sigma1, transversality)
from .continuation import (Branch, BranchEvent, BranchPoint,
                           ContinuationConfig, Problem, check_simple_curve,
                           make_problem, refine_fold, step_pseudoarclength,
                           trace_continuum, trace_minimal_branch)
from .shape import (ExperimentReport, PerturbationField,
                    ShapeDerivativeReport, fd_domain_derivative,
                    genericity_experiment, hadamard_pairing,
                    shape_derivative_report, transport_term)
from .oracles import (RadialFamilyPoint, fold_1d_shooting, integrate_ivp,
                      interval_family_mu, interval_family_sup,
                      interval_fold_exact, multistart_enumerate,
                      radial_branch, radial_family_point, radial_profile,
                      shoot_boundary_value, solutions_1d)
from .config import RunConfig, atomic_write, json_dumps_17

__version__ = "0.1.0"

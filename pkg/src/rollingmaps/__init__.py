"""Intrinsic rolling of Riemannian manifolds along curves, numerically."""
from .curves import SampledCurve, builtin_curve, from_function, from_samples
from .existence import (ExistenceVerdict, LoopReport, exists_by_curvature, exists_general,
                        extract_euclidean_isometry, junction_compatibility, loop_check, loop_in_Q,
                        minimal_parallel_rank)
from .frenet import (FrenetData, covariant_derivative, frenet_apparatus, geodesic_curvature,
                     regularity_order, reparametrize_arclength)
from .geometry import ManifoldModel, builtin_manifold, check_model, inner_product
from .numerics import ChartDomainError, RegularityError, RollingError, StepUnderflowError
from .rolling import RollingReport, RollingTrajectory, compose_rollings, roll_along, verify_rolling
from .synthesis import (CurvatureProfile, backend_euclidean, backend_sphere, backend_su2,
                        synthesize_curve, synthesize_rolling)
from .transport import antidevelop, develop, holonomy, parallel_frame, parallel_transport

__version__ = "0.1.0"

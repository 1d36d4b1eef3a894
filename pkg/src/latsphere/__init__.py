"""Uniform homeomorphisms between unit spheres of finite Banach lattices."""

__version__ = "0.1.0"

from .convexity import (ConstantEstimate, ModulusCurve, convexify, estimate_concavity,
                        estimate_convexity, estimate_smoothness_modulus,
                        estimate_ucx_modulus, renorm_unit_concavity)
from .duality import (SupportingFunctional, claim1_certificate, inverse_entropy_map,
                      supporting_functional)
from .entropy import (NEG_INF, EntropySolution, entropy_eval, entropy_max,
                      entropy_max_signed, midpoint_check)
from .errors import (ConfigurationError, DomainError, LatsphereError, NonSmoothError,
                     SamplingError, SizeError, SolverError, UnsupportedReportError)
from .homeo import (ModulusProfile, SphereMapPipeline, build_direct_smooth,
                    build_l1_to_X, build_X_to_Y, linf_degeneracy_probe, profile_modulus)
from .lattice import (Convexified, FiniteProbabilitySpace, LatticeFunction, LatticeNorm,
                      LInfinity, Lorentz, Renormed, Scaled, WeightedLp, dual_norm_eval,
                      norm_eval, normalize)
from .mazur import (MazurBoundReport, mazur_inverse, mazur_lower_bound, mazur_map,
                    mazur_upper_bound, verify_mazur_sandwich)

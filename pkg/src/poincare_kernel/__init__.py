"""Quotient Bergman kernels of line-bundle powers built by summing cover kernels over the deck group.

Two homogeneous models are provided: a flat torus C / (Z + tau Z) with theta
functions as the independent basis, and a genus-2 surface uniformized by the
regular hyperbolic octagon with relative Poincare series of pluricanonical
forms as the basis.
"""

from .cover_kernels import KernelValue, LiftedPoint, cover_kernel, lift_kernel
from .errors import CacheIntegrityError, ConfigError, DomainError, PreconditionError, ResourceError
from .geometry import FlatTorus, GenusTwoSurface, LatticeTranslation, MobiusElement, group_stats
from .quadrature import QuadratureSpec, octagon_rule, torus_rule
from .quotient import PoincareFamily, SectionBasis, ThetaFamily, build_basis, quotient_kernel
from .summation import TruncationCertificate, certify_tail, gamma_sum_kernel, minimal_radius, poincare_map
from .verification import VerificationReport

__version__ = "0.1.0"

"""Sharp positive cones of finite-dimensional von Neumann algebras."""

from .errors import SharpConeError
from .linalg import DEFAULT_TOL, TolerancePolicy, make_rng
from .algebra import Algebra, OperatorSubspace
from .modular import ModularData, standard_form
from .cone import ConeContext

__version__ = "0.1.0"

__all__ = [
    "Algebra",
    "ConeContext",
    "DEFAULT_TOL",
    "ModularData",
    "OperatorSubspace",
    "SharpConeError",
    "TolerancePolicy",
    "make_rng",
    "standard_form",
]

"""Lattice-quotient CCR flows on grids: P-spaces, shift representations, Fock checks, index and classification."""

__version__ = "0.1.0"

from .cone_lattice import Cone, Functional, Lattice, QuotientChart, dual_cone, dual_lattice, orthant  # noqa: F401
from .classify import Scenario, equivalent, generate_family, pullback_obstruction, spectrum_type  # noqa: F401
from .errors import CCRLabError  # noqa: F401
from .pspace import PSpace, boundary_compact, member  # noqa: F401

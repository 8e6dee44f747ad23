"""Basic and antibasic cohomology of foliations on finite lattice and Peter-Weyl models."""

from .catalog import CASES, get_case, list_cases
from .cohomology import CohomologyEngine, HodgeMismatch, NotAntibasic
from .expr import ExprError, evaluate, parse
from .foliation import (
    BasicStructure,
    Calculus,
    MissingBasis,
    UnsupportedConfiguration,
    basic_basis,
    basic_constraint,
    named_operator,
)
from .forms import (
    DegreeError,
    Foliated,
    FormField,
    build_grid,
    build_su2,
    codifferential,
    derive_foliation_package,
    exterior_derivative,
    hodge_star,
    inner_product,
    interior_product,
    metric_change_map,
    wedge,
)
from .grid import GridComplex, GridSpecError
from .linalg import IllConditionedError
from .properties import chi_wedge_harmonic, invariant_reduction, property_checks, quadratic_form_check
from .su2 import Su2Complex, Su2Error

__version__ = "0.1.0"

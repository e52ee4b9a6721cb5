"""Transfer matrices, squeezing limits and resonance equations for layered 1-D potentials."""

from .errors import *  # noqa: F401,F403
from .expansion import TrigData, dyad, element_via_series, q_series, series_matrix, term_count, triad
from .model import (
    Layer,
    PathSpec,
    PencilKind,
    PencilTag,
    Region,
    StrengthClass,
    StrengthKind,
    StructureSpec,
    check_squeeze_admissibility,
    classify_region,
    classify_strength,
    classify_structure,
    pencil_membership,
)
from .resonance import ResonanceEquation, build_equation, cross_validate, residual, solve, verify_equivalence
from .squeeze import (
    LimitEstimate,
    LimitParameters,
    PointInteractionClass,
    classify_limit,
    limit_matrix,
    limit_parameters,
    realize,
)
from .transfer import TransferMatrix, bound_states, full_matrix, layer_matrix, scattering, wavenumber

__version__ = "0.1.0"

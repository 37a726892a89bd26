"""Charts and the exterior / multivector calculus used by the field theory."""

from .chart import (
    ROLE_AFFINE,
    ROLE_BASE,
    ROLE_FIBER,
    ROLE_MOMENTUM,
    ROLE_PARAM,
    ROLE_VELOCITY,
    Chart,
    base_chart,
    extended_momentum_chart,
    jet_chart,
    restricted_momentum_chart,
)
from .forms import (
    ChartMismatch,
    DiffForm,
    InvolutivityReport,
    MultiVec,
    TransversalityReport,
    VectorFieldExpr,
    check_involutive,
    check_transverse,
    dcoord,
    exterior_derivative,
    interior,
    interior_mv,
    lie_bracket,
    scalar_form,
    vector_field,
    volume_form,
    wedge,
    wedge_all,
    zero_form,
)
from .maps import (
    CoordMap,
    MapError,
    MapForm,
    MapMultiVec,
    MapVector,
    base_projection,
    identity_map,
    map_vector,
    pullback,
)
from .sections import JetSectionContext, MomentumSectionContext

__all__ = [
    "ROLE_AFFINE",
    "ROLE_BASE",
    "ROLE_FIBER",
    "ROLE_MOMENTUM",
    "ROLE_PARAM",
    "ROLE_VELOCITY",
    "Chart",
    "ChartMismatch",
    "CoordMap",
    "DiffForm",
    "InvolutivityReport",
    "JetSectionContext",
    "MapError",
    "MapForm",
    "MapMultiVec",
    "MapVector",
    "MomentumSectionContext",
    "MultiVec",
    "TransversalityReport",
    "VectorFieldExpr",
    "base_chart",
    "base_projection",
    "check_involutive",
    "check_transverse",
    "dcoord",
    "exterior_derivative",
    "extended_momentum_chart",
    "identity_map",
    "interior",
    "interior_mv",
    "jet_chart",
    "lie_bracket",
    "map_vector",
    "pullback",
    "restricted_momentum_chart",
    "scalar_form",
    "vector_field",
    "volume_form",
    "wedge",
    "wedge_all",
    "zero_form",
]

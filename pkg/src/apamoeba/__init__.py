"""Amoebas, Jessen functions and mean motions of finite exponential sums."""
from ._kernels import BACKEND
from .amoeba import (
    AmoebaConfig,
    AmoebaRaster,
    Cell,
    ComponentRecord,
    FiberConfig,
    OrderConfig,
    classify_point,
    components,
    fiber_min_modulus,
    laurent_winding_order,
    rasterize_amoeba,
)
from .errors import (
    AmbiguousMatchError,
    ApamoebaError,
    NoMatchError,
    NonConvergedError,
    NonIntegerError,
    SumSpecError,
    ZeroOnPathError,
)
from .expsum import (
    BaseIrrationals,
    DomainTooDeepError,
    ExponentialSum,
    FrequencyVector,
    GroupBasis,
    evaluate,
    express_in_basis,
    group_basis,
    spectrum,
)
from .jessen import (
    ArgumentConfig,
    QuadratureConfig,
    check_linearity,
    estimate_jessen,
    mean_motion_argument,
    mean_motion_gradient,
)
from .kronecker import Exhausted, KroneckerSolution, kronecker_approximate, return_gap_scan
from .lattice import hermite_normal_form
from .relations import SnapConfig, VerifyConfig, component_relations, snap_to_group, verify_theorem
from .specfile import dump_sum_spec, parse_sum_spec

__version__ = "0.1.0"

"""Cauchy-data spaces, projectors and Grassmannian comparison for
constant-coefficient elliptic operators on flat model geometries."""

from . import errors
from ._kernels import active_backend, warmup
from .contour import (
    Contour,
    SpectralSplit,
    characteristic_roots,
    contour_quadrature,
    enclosing_circle,
    matrix_power,
    riesz_projector,
    spectral_split,
)
from .grassmann import (
    CompareReport,
    GrassmannPoint,
    IndexReport,
    SchattenReport,
    assemble_point,
    chiral_point,
    compare_points,
    fredholm_index,
    krichever_reference,
    outer_shell_max,
    schatten_fit,
)
from .projector import (
    BlockProjector,
    CauchyFrame,
    SobolevWeight,
    calderon_projector,
    cauchy_frame_oracle,
    companion_matrix,
    entry_growth_fit,
    invert_jump_operator,
    jump_operator,
    layer_potential_blocks,
    orthogonal_projector,
    principal_angles,
    range_basis,
    sobolev_weights,
)
from .symbols import (
    AgmonRay,
    EllipticityReport,
    ModeSymbol,
    OperatorSpec,
    agree_up_to_order,
    build_gallery,
    check_ellipticity,
    dump_spec,
    find_agmon_ray,
    from_document,
    homogeneous_component,
    load_spec,
    mode_symbol,
    principal_symbol,
    read_spec,
    save_spec,
    selfadjoint_double,
    to_document,
)

__version__ = "0.1.0"

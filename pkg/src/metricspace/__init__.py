"""Geometry of discretized Riemannian metric fields.

Inner products, volumes, closed-form exponential maps on the
volume/shape factors, determinant-weighted pointwise distances and
their integrals, and discrete path-energy minimization, all over
quadrature charts with deterministic reductions.
"""

from .errors import (
    BoundaryError,
    DomainError,
    MetricSpaceError,
    OptimizerStallError,
    PreconditionError,
    StructuralError,
)
from .field_geometry import (
    CheckReport,
    DiscretePath,
    MetricField,
    QuadChart,
    TangentField,
    check_lipschitz_sqrtvol,
    check_theta_bound,
    check_theta_reference_independence,
    eps_disc,
    l2_inner,
    l2_norm,
    path_energy,
    path_length,
    theta_Y,
    theta_Y_details,
    volume,
)
from .path_optimizer import (
    Diagnostics,
    FieldSetting,
    GeodesicSetting,
    MinimizeResult,
    OptimizerOptions,
    PointConeSetting,
    discrete_energy,
    discrete_length,
    gradient,
    minimize,
)
from .pointwise_geometry import (
    PointPath,
    chord_lower_bound,
    conformal_theta_oracle,
    inner0_point,
    inner_point,
    point_path_length,
    theta_distance,
)
from .product_structure import (
    DensityTangent,
    VolumeDensity,
    density_path_length,
    i_mu,
    induced_density,
    mu_exp,
    mu_exp_path,
    mu_log,
    product_path,
    split,
    vol_exp,
    vol_exp_path,
    vol_inner,
    vol_log,
)
from .tensor_core import (
    SpdMatrix,
    SymMatrix,
    spd,
    spd_exp_from,
    spd_log_from,
    sqrt_det,
    sym,
    trace_pair,
    traceless_part,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

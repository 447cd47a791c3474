"""Elastic shape analysis for discrete curves on Riemannian manifolds:
a reparameterization-invariant metric built through the square root velocity
transform, with geodesics by a discrete exponential map and shooting."""

__version__ = "0.1.0"

from .errors import (
    BaseMismatch,
    CutLocus,
    DegenerateInput,
    DegenerateSpeed,
    ElasticaError,
    NoConvergence,
    StepCollapse,
    WrongManifold,
)
from .manifold import Euclidean, Manifold, Sphere, Tangent, inner
from .dcurve import (
    CellField,
    DiscreteCurve,
    Reparam,
    SrvCurve,
    TangentField,
    covariant_derivative,
    merge_to_common_grid,
    reparameterize,
    resample,
    srvf,
    transport_along,
    velocity,
)
from .elastic_metric import (
    BundleVector,
    CurvePath,
    metric_G,
    nabla_s_q,
    omega,
    path_energy,
    path_length,
    path_length_raised,
    path_velocity,
    raise_q,
    srv_differential,
    srv_lift,
    tilde_G,
    zhang_path_length,
)
from .geodesic_engine import (
    BvpReport,
    BvpResult,
    GeodesicState,
    ShootingConfig,
    distance,
    equation_residuals,
    exp_step,
    exponential_map,
    geodesic_accelerations,
    geodesic_bvp,
    propagate_cs_acc,
    second_derivative_ct,
    shape_distance,
    slice_energy,
    source_r,
)
from .oracles import (
    OracleReport,
    fd_srv_differential,
    flat_closed_form_distance,
    holonomy_probe,
    run_validation,
    transport_ode_oracle,
)

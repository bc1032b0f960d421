"""Central-path diagnostics for semidefinite feasibility problems.

Follow the perturbed log-det central path of a spectrahedron, read off
eigenvalue-ratio diagnostics bounding the maximum solution rank, the forward
error, and the singularity degree, and run facial reduction from dual path
limits. Estimator-style entry points (`CentralPathFollower`,
`PathDiagnostics`, `FacialReduction`) compose with scikit-learn tooling;
the underlying operations are plain functions.
"""
from . import exceptions
from .diagnostics import (
    DiagnosticsReport,
    PathDiagnostics,
    RatioCurves,
    count_rates,
    diagnose,
    ferror_lower_bound,
    max_rank_bound,
    ratios,
    sd_lower_bound,
    sturm_exponent,
)
from .facial import (
    FacialReduction,
    FRResult,
    FRStep,
    exposing_vector,
    facial_reduction,
    singularity_degree,
    slater_check,
)
from .generators import (
    InstanceSpec,
    cexample_trace,
    from_spec,
    gen_direct_sum,
    gen_rank_r_sd1,
    gen_slater,
    gen_worst_case,
)
from .pathfollow import (
    ALPHA_FLOOR,
    CentralPathFollower,
    PathPoint,
    PathTrace,
    center,
    dual_limit,
    follow,
)
from .spectrahedron import (
    Certificate,
    FaceRep,
    LinearMapA,
    Spectrahedron,
    backward_error,
    forward_error,
    is_exposing,
    reduce_map,
)
from .symmetric import (
    Spectrum,
    dist_psd,
    eig_desc,
    inner,
    proj_psd,
    smat,
    svec,
    symmetrize,
)

__version__ = "0.1.0"

__all__ = [
    "ALPHA_FLOOR",
    "Certificate",
    "CentralPathFollower",
    "DiagnosticsReport",
    "FRResult",
    "FRStep",
    "FaceRep",
    "FacialReduction",
    "InstanceSpec",
    "LinearMapA",
    "PathDiagnostics",
    "PathPoint",
    "PathTrace",
    "RatioCurves",
    "Spectrahedron",
    "Spectrum",
    "backward_error",
    "cexample_trace",
    "center",
    "count_rates",
    "diagnose",
    "dist_psd",
    "dual_limit",
    "eig_desc",
    "exceptions",
    "exposing_vector",
    "facial_reduction",
    "ferror_lower_bound",
    "follow",
    "forward_error",
    "from_spec",
    "gen_direct_sum",
    "gen_rank_r_sd1",
    "gen_slater",
    "gen_worst_case",
    "inner",
    "is_exposing",
    "max_rank_bound",
    "proj_psd",
    "ratios",
    "reduce_map",
    "sd_lower_bound",
    "singularity_degree",
    "slater_check",
    "smat",
    "sturm_exponent",
    "svec",
    "symmetrize",
]

"""confconv: a numerical laboratory for sequences of conformal metrics.

Computes distances, volumes, diameters, and L^p functionals for metrics
``f**2 g0`` on flat tori and round spheres, and judges sequences of them
against claimed uniform / Gromov-Hausdorff-type / volume limits.
"""

from .errors import (
    BudgetError,
    ConfConvError,
    ConfigError,
    DomainError,
    InvalidMetricError,
    InvalidTensorError,
    MeshMismatchError,
    MissingDistanceFieldError,
    UnsupportedOperationError,
    ValidationError,
)
from .geometry import (
    Background,
    ConstantFactor,
    EigenvalueField,
    LatticeCorridorFactor,
    MetricSpec,
    MultiBumpFactor,
    Piece,
    RadialFactor,
    background_distance,
    canonical_point,
    curve_length,
    eval_factor,
    flat_torus,
    round_sphere,
    spec_from_dict,
    spec_to_dict,
    taxi_distance,
    tensor_norm,
)
from .mesh import MU, GridMesh, build_mesh
from .geodesics import (
    DistanceField,
    SamplePairSet,
    diameter_estimate,
    distance,
    mesh_pair_distances,
    sample_pairs,
    sample_pooled_pairs,
    solve_distance,
)
from .quadrature import (
    RegionSpec,
    ball_volume,
    lp_factor_deviation,
    lp_factor_norm,
    lp_tensor_norm,
    metric_ball,
    radial_diameter,
    unit_ball_volume,
    volume,
    whole_manifold,
)
from .diagnostics import (
    GapStatistic,
    Verdict,
    bilipschitz_envelope,
    det_trace_check,
    flat_bound_proxy,
    gh_bound_from_map,
    pointwise_ae_check,
    uniform_gap,
)
from .families import EXAMPLE_IDS, claims, closed_form_row, make_example
from .runner import ExperimentConfig, load_config, parse_config, run

__version__ = "0.1.0"

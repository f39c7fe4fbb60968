"""Super-directive weight synthesis for compact circular receive arrays."""

from .composite import (
    CompositeArray,
    array_factor,
    composite_metrics,
    flatten,
    load_composite,
    save_composite,
)
from .errors import (
    BracketError,
    ConfigError,
    InfeasibleError,
    NumericalError,
    QuadratureError,
)
from .estimator import SuperdirectiveBeamformer
from .geometry import (
    SPEED_OF_LIGHT,
    CarrierContext,
    Direction,
    SensorArray,
    load_layout,
    make_uca,
    save_layout,
    steering_derivatives,
    steering_matrix,
    steering_vector,
)
from .metrics import (
    DirectivityMatrices,
    PatternGrid,
    QuadratureSpec,
    RatioDB,
    compute_a,
    compute_b,
    directivity,
    directivity_matrices,
    estimate_mainlobe_radius,
    find_sidelobe_peaks,
    from_db,
    pattern_grid_to_csv,
    pattern_response,
    rein,
    sample_pattern,
    to_db,
    worst_sidelobe,
)
from .qpsolver import (
    EqualityConstraints,
    MaxDirectivityResult,
    QPSolution,
    mainlobe_constraints,
    max_directivity,
    min_norm_point,
    solve_equality_qp,
    solve_norm_constrained_qp,
)
from .reallift import lift_matrix, lift_steering, lift_weight, unlift_weight
from .synthesis import (
    DEFAULT_REIN_FLOORS_DB,
    SynthesisConfig,
    SynthesisResult,
    m_max,
    pin_targets,
    radius_for_rein,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "BracketError",
    "CarrierContext",
    "CompositeArray",
    "ConfigError",
    "DEFAULT_REIN_FLOORS_DB",
    "Direction",
    "DirectivityMatrices",
    "EqualityConstraints",
    "InfeasibleError",
    "MaxDirectivityResult",
    "NumericalError",
    "PatternGrid",
    "QPSolution",
    "QuadratureError",
    "QuadratureSpec",
    "RatioDB",
    "SPEED_OF_LIGHT",
    "SensorArray",
    "SuperdirectiveBeamformer",
    "SynthesisConfig",
    "SynthesisResult",
    "array_factor",
    "composite_metrics",
    "compute_a",
    "compute_b",
    "directivity",
    "directivity_matrices",
    "estimate_mainlobe_radius",
    "find_sidelobe_peaks",
    "flatten",
    "from_db",
    "lift_matrix",
    "lift_steering",
    "lift_weight",
    "load_composite",
    "load_layout",
    "m_max",
    "mainlobe_constraints",
    "make_uca",
    "max_directivity",
    "min_norm_point",
    "pattern_grid_to_csv",
    "pattern_response",
    "pin_targets",
    "radius_for_rein",
    "rein",
    "sample_pattern",
    "save_composite",
    "save_layout",
    "solve_equality_qp",
    "solve_norm_constrained_qp",
    "steering_derivatives",
    "steering_matrix",
    "steering_vector",
    "synthesize",
    "to_db",
    "unlift_weight",
    "worst_sidelobe",
]

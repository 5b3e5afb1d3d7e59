"""Numerical solver for integro-differential sweeping processes of Volterra type."""

from .core import (
    FEASIBILITY_TOL,
    Horizon,
    KernelSpec,
    PerturbationSpec,
    ProblemSpec,
    SeparableTerm,
    TimeGrid,
    Trajectory,
    delay_map,
    interpolate,
)
from .errors import (
    ConfigError,
    DataMissingError,
    DegenerateInputError,
    DomainError,
    EvaluationError,
    InvalidCircuitError,
    ProjectionFailureError,
    ReachExceededError,
    StepTooCoarseError,
    VolsweepError,
)
from .sets import (
    BallBase,
    BoxBase,
    HalfSpaceBase,
    MovingSet,
    OrthantBase,
    PolyhedronBase,
    SlaterReport,
    SublevelSet,
    TranslatedFixedSet,
    check_uniform_slater,
    project_sublevel,
    project_translated,
    prox_radius_sublevel,
    sample_feasible,
    static_set,
    variation_sublevel,
)
from .gronwall import (
    BoundsReport,
    GronwallInput,
    GronwallLikeInput,
    affine_state_bound,
    apriori_constants,
    gronwall_bound,
    gronwall_integral_bound,
    gronwall_like_bound,
)
from .solver import (
    RefineOptions,
    SolveOptions,
    SolveReport,
    StabilityReport,
    memory_term,
    solve,
    stability_probe,
    step,
)
from .oracle import fine_grid_oracle, volterra_reference
from .nidcs import MultiplierPath, NidcsSpec, recover_multiplier
from . import nidcs
from .circuits import (
    CircuitMatrices,
    CircuitParams,
    DiodeWaveforms,
    build_circuit_problem,
    circuit_matrices,
    diode_constraint_set,
    diode_waveforms,
)
from .config import LoadedProblem, build_problem, load_config, load_problem

__version__ = "0.1.0"

"""Numerical laboratory for quantum and classical control landscapes.

Kinematic maps (Kraus channels, stochastic matrices) and dynamic
(Lindblad) propagation feed linear and free-energy objectives; multistart
gradient ascent, critical-point classification and oracle optima test
whether a landscape has traps.
"""

__version__ = "0.1.0"

from .channels import (
    ControlField,
    KinematicParams,
    KrausMap,
    LindbladModel,
    StochasticMap,
    apply_kraus,
    apply_stochastic,
    integrate_lindblad,
    jacobian_rank,
    kraus_from_params,
    propagate_lindblad,
    stochastic_from_amplitudes,
    stochastic_from_params,
)
from .classical import (
    Distribution,
    PhaseSpace,
    RandomFunction,
    convex_combine_c,
    distribution,
    entropy_c,
    expectation,
    gibbs_distribution,
    point_mass,
    random_function,
    uniform,
)
from .config import TOL, Tolerances
from .controls import (
    ControlMap,
    FrozenControl,
    FunctionControl,
    KrausControl,
    LindbladControl,
    StochasticControl,
)
from .errors import (
    ConfigInvalid,
    DimensionMismatch,
    EvaluationFailure,
    IntegrationFailure,
    InvalidDistribution,
    InvalidState,
    LambdaOutOfRange,
    LandscapeError,
    NonHermitianObservable,
    NonRealResult,
    NotCritical,
    NotHermitian,
    NotLinearObjective,
    NotPositive,
    NotSameLevel,
    RankDeficientInput,
    RegimeMismatch,
    SingularState,
    SpaceMismatch,
    TraceNotOne,
)
from .landscape import (
    AscentConfig,
    OptimizationRun,
    ascend,
    classify_critical_point,
    concavity_probe,
    level_set_path,
    multistart_ascent,
    oracle_optimum,
    same_level_pair,
    verify_trap_free,
)
from .objectives import ObjectiveSpec, evaluate, gradient_controls, gradient_state
from .quantum import (
    SIGMA_MINUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    Observable,
    convex_combine_q,
    entropy_q,
    free_energy_optimum,
    gibbs_state,
    inner_product,
    make_density,
    maximally_mixed,
    pure_state,
    spectral,
)
from .rng import stream

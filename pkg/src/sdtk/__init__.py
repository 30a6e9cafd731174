"""Linear plants actuated through networks with switching propagation delays."""

from ._kernels import BACKEND
from .controllability import (
    ControllabilityOutcome,
    ControllabilityVerdict,
    Witness,
    algorithm1,
    block_cyclic_test,
    classify_nilpotent,
    controllability_matrix,
    decide,
    fitting_split,
    n_star,
    nilpotent_oracle,
    rank_history,
)
from .errors import (
    BudgetExceededError,
    ConfigurationError,
    HorizonError,
    InvalidDelayError,
    PlanError,
    SdtkError,
)
from .jsr import JsrBounds, Outcome, StabilityVerdict, is_stable, jsr_bounds, linear_rate_floor
from .model import (
    MatrixSet,
    SwitchedDelayPlant,
    build_dd_closed_loop,
    build_di_reduction,
    build_example3_matrices,
    build_extended,
    build_np_gadget,
    simulate,
)
from .signals import NetworkGraph, PeriodicSignal, RandomSignal, RoutingSignal, path_delays
from .synthesis import (
    RotationController,
    deadbeat_plan,
    evaluate_di_gain,
    rotation_linear_floor_check,
    rotation_nonlinear_controller,
    scalar_deadbeat,
)

__version__ = "0.1.0"

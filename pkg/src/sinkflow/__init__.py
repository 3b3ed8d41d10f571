"""Lifespan-maximising slide/eject strategies for sliced sensor networks."""

__version__ = "0.1.0"

from .evaluator import (  # noqa: E402
    Configuration,
    OptimalityReport,
    brute_force_oracle,
    check_tabletop_optimality,
    evaluate_strategy,
    no_win_win_probe,
)
from .model import (  # noqa: E402
    DEFAULT_TOL,
    EnergyProfile,
    EpsilonChain,
    FlowState,
    InvalidSpecError,
    NetworkSpec,
    Strategy,
    epsilon_chain,
    is_energy_balanced,
    slice_energy,
    unit_slide_increments,
)
from .optimizer import compute_optimal, run_optimizer, strategy_from_flow  # noqa: E402
from .simulator import SimConfig, SimResult, compare, simulate  # noqa: E402

__all__ = [
    "DEFAULT_TOL",
    "Configuration",
    "EnergyProfile",
    "EpsilonChain",
    "FlowState",
    "InvalidSpecError",
    "NetworkSpec",
    "OptimalityReport",
    "SimConfig",
    "SimResult",
    "Strategy",
    "brute_force_oracle",
    "check_tabletop_optimality",
    "compare",
    "compute_optimal",
    "epsilon_chain",
    "evaluate_strategy",
    "is_energy_balanced",
    "no_win_win_probe",
    "run_optimizer",
    "simulate",
    "slice_energy",
    "strategy_from_flow",
    "unit_slide_increments",
]

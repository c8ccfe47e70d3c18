from .config import ExperimentConfig, load_config
from .metrics import links_per_round, rounds_to_accuracy, sweep_delta
from .output import emit_csv, emit_svg_lines
from .runner import Environment, RoundLog, Simulation, build_environment, run

__all__ = [
    "Environment",
    "ExperimentConfig",
    "RoundLog",
    "Simulation",
    "build_environment",
    "emit_csv",
    "emit_svg_lines",
    "links_per_round",
    "load_config",
    "rounds_to_accuracy",
    "run",
    "sweep_delta",
]

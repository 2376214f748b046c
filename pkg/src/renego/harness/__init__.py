from .config import ConfigError, ExperimentConfig, default_config
from .runner import (
    atomic_write,
    matchlog_to_json,
    run_ftpl,
    run_match,
    run_matches,
    run_matrix,
    trajectories_jsonl,
    verify_theory,
)

__all__ = [
    "ConfigError", "ExperimentConfig", "atomic_write", "default_config",
    "matchlog_to_json", "run_ftpl", "run_match", "run_matches", "run_matrix",
    "trajectories_jsonl", "verify_theory",
]

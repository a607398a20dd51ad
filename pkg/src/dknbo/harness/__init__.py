"""Data generation, experiment orchestration, file formats and the CLI."""

from ..datasets import TaskDataset
from .experiment import (
    DKN_BO, GP_BO, ExperimentConfig, ExperimentResult, RegretSummary, load_config,
    make_source_data, regret_stats, run_experiment, train_on_source,
)
from .generation import generate_source_task, generate_target_init, sample_source_systems
from .seeds import derive_seed, splitmix64

__all__ = [
    "DKN_BO", "GP_BO", "ExperimentConfig", "ExperimentResult", "RegretSummary",
    "TaskDataset", "derive_seed", "generate_source_task", "generate_target_init",
    "load_config", "make_source_data", "regret_stats", "run_experiment",
    "sample_source_systems", "splitmix64", "train_on_source",
]

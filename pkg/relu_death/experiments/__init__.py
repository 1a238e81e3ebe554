from relu_death.experiments.config import ExperimentConfig, ExperimentKind, log_spaced
from relu_death.experiments.presets import PresetLoader
from relu_death.experiments.results import COLUMNS, ExperimentResult, ResultStore
from relu_death.experiments.runner import (
    run_conv_grid,
    run_constant_lb_path,
    run_experiment,
    run_grid,
    run_init_comparison,
)

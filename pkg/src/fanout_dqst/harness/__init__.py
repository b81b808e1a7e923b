"""Experiment configuration, seeded pipelines and the command-line interface."""

from .config import ConfigError, ExperimentConfig, ZneConfig, default_config, load_config, loads_config
from .experiments import (
    ResultBundle,
    run_experiment,
    run_full_tomography,
    run_ghz_fidelity_sweep,
    run_qrem_check,
    run_qst_compare,
    run_zne_demo,
)

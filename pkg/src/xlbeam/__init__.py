"""Wideband near-field beam training for XL-arrays with a sparse central subarray."""

from .beamforming import TdPsParams, array_gain, combined_beamformer, ps_beamformer, td_beamformer, td_weights
from .benchmarks import (
    BenchmarkOutcome,
    PolarCodebook,
    build_polar_codebook,
    exhaustive_polar_search,
    nearfield_rainbow_training,
    perfect_csi_beamformer,
    two_phase_training,
)
from .channel import LosChannel, far_field_steering, los_channel, near_field_steering
from .config import (
    ConfigError,
    FrequencyGrid,
    PolarPoint,
    SubarraySizeWarning,
    SystemConfig,
    make_frequency_grid,
    make_geometry,
    validate_config,
)
from .estimators import (
    ExhaustiveSearchTrainer,
    NearFieldRainbowTrainer,
    PerfectCSIBeamformer,
    ThreeStageBeamTrainer,
    TwoPhaseTrainer,
)
from .experiment import ExperimentSpec, MetricTable, UserDistribution, achievable_rate, nmse, run_experiment
from .rainbow import coverage_report, multi_beam_angles, rainbow_blocks, solve_sweep_td_parameter
from .training import TrainingOutcome, run_full_training

__version__ = "0.1.0"

__all__ = [
    "BenchmarkOutcome",
    "ConfigError",
    "ExhaustiveSearchTrainer",
    "ExperimentSpec",
    "FrequencyGrid",
    "LosChannel",
    "MetricTable",
    "NearFieldRainbowTrainer",
    "PerfectCSIBeamformer",
    "PolarCodebook",
    "PolarPoint",
    "SubarraySizeWarning",
    "SystemConfig",
    "TdPsParams",
    "ThreeStageBeamTrainer",
    "TrainingOutcome",
    "TwoPhaseTrainer",
    "UserDistribution",
    "achievable_rate",
    "array_gain",
    "build_polar_codebook",
    "combined_beamformer",
    "coverage_report",
    "exhaustive_polar_search",
    "far_field_steering",
    "los_channel",
    "make_frequency_grid",
    "make_geometry",
    "multi_beam_angles",
    "near_field_steering",
    "nearfield_rainbow_training",
    "nmse",
    "perfect_csi_beamformer",
    "ps_beamformer",
    "rainbow_blocks",
    "run_experiment",
    "run_full_training",
    "solve_sweep_td_parameter",
    "td_beamformer",
    "td_weights",
    "two_phase_training",
    "validate_config",
]

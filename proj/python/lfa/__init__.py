"""Laser frequency slot allocation testbed.

Thin wrapper over the C++ core. The usual flow:

    import lfa

    spec = lfa.ExperimentSpec()
    trained = lfa.run_train(spec)
    served = lfa.run_operate(spec, trained.model_json)
"""

from lfa._core import (
    BASE_FREQUENCY_GHZ,
    GRID_GHZ,
    MAX_FREQUENCY_GHZ,
    SLOT_COUNT,
    ExperimentSpec,
    ExplorationSchedule,
    LfaError,
    Measurement,
    OperateResult,
    RequestOutcome,
    ScaleResult,
    ScaleRow,
    SlotStatistics,
    SynthesisSpec,
    SynthesizedDataset,
    TrainResult,
    aggregate,
    augment,
    epsilon_at,
    fit_lognormal,
    fits_to_json,
    frequency_to_slot,
    model_info,
    moving_average,
    parse_log,
    run_operate,
    run_scale,
    run_train,
    slot_to_frequency,
    stats_from_csv,
    stats_to_csv,
    synthesize_dataset,
)

__all__ = [
    "BASE_FREQUENCY_GHZ",
    "GRID_GHZ",
    "MAX_FREQUENCY_GHZ",
    "SLOT_COUNT",
    "ExperimentSpec",
    "ExplorationSchedule",
    "LfaError",
    "Measurement",
    "OperateResult",
    "RequestOutcome",
    "ScaleResult",
    "ScaleRow",
    "SlotStatistics",
    "SynthesisSpec",
    "SynthesizedDataset",
    "TrainResult",
    "aggregate",
    "augment",
    "epsilon_at",
    "fit_lognormal",
    "fits_to_json",
    "frequency_to_slot",
    "model_info",
    "moving_average",
    "parse_log",
    "run_operate",
    "run_scale",
    "run_train",
    "slot_to_frequency",
    "stats_from_csv",
    "stats_to_csv",
    "synthesize_dataset",
]

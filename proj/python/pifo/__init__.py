"""Imitation from video-only demonstrations with a proprioceptive policy."""

from ._pifo import (
    CheckpointError,
    ConfigError,
    DemoSet,
    EnvSpec,
    EnvState,
    Error,
    EvaluationError,
    EvaluationReport,
    FormatError,
    MetricsRow,
    NonFiniteError,
    RunRecord,
    ShapeError,
    StateError,
    StepResult,
    TrainConfig,
    UsageError,
    compute_gae,
    emit_report,
    evaluate,
    imitate,
    main,
    normalized_score,
    record_demos,
    render,
    reset,
    spec,
    step,
    train_expert,
)

ENVS = ("cartpole-balance", "mountain-car", "point-mass")

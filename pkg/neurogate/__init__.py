"""
neurogate

A runtime safety gate for robot commands decoded from EEG. Each decoded
intent passes physiological checks on the signal and posterior, then logical
checks on a plan for the grounded goal, before it may execute.

Example usage:
    from neurogate import SafetyMonitor, IntentPosterior, read_domain, read_problem, WorldState

    domain = read_domain()
    state = WorldState.from_problem(read_problem(domain))
    monitor = SafetyMonitor(domain, state)
    decision, record = monitor.step(IntentPosterior([0.97, 0.01, 0.01, 0.01]))
"""

from .constants import (
    ACTIONS,
    TAU_H,
    TAU_A,
    TAU_OMEGA,
    HISTORY_K,
    ALPHA_M_PRESETS,
    OBJECTIVE_PRESETS,
)

from .errors import (
    NeurogateError,
    SignalError,
    PosteriorError,
    ConfigError,
    GroundingError,
    PlanningError,
    PddlParseError,
    InputFileError,
    TraceFormatError,
)

from .config import (
    PreprocessConfig,
    MonitorConfig,
    TaskContext,
    SyntheticDecoderModel,
    ScenarioSpec,
    load_scenario,
)

from .signals import (
    RawEeg,
    EegWindow,
    BaselineStats,
    NoiseSpec,
    preprocess,
    band_rms,
    artifact_score,
    compute_baseline,
    inject_noise,
    synthesize_clean_eeg,
)

from .intent import (
    Action,
    IntentPosterior,
    CalibratedPosterior,
    IntentHistory,
    calibrate,
    normalized_entropy,
    push_frame,
    oscillation_index,
)

from .pddl import (
    DomainDef,
    ProblemDef,
    parse_domain,
    parse_problem,
    format_domain,
    format_problem,
)

from .planner import (
    WorldState,
    GroundAction,
    Goal,
    Plan,
    NoPlan,
    Violation,
    ground_action,
    ground_actions,
    ground_to_goal,
    applicable,
    apply,
    synthesize_plan,
    check_logical,
    validate_plan,
    diagnose_unsolvable,
)

from .monitor import (
    Verdict,
    Cause,
    MonitorDecision,
    SafetyMonitor,
    Frame,
    resolve_gate,
    monitor_step,
    run_session,
    replay,
)

from .trace import (
    TraceHeader,
    TraceRecord,
    RejectedRecord,
    TraceWriter,
    read_trace,
)

from .metrics import (
    LabeledPrediction,
    CalibrationReport,
    SafetyLedger,
    Outcome,
    ece,
    mce,
    ace,
    overconfidence_rate,
    calibration_report,
    temperature_scale,
    classify_outcome,
    threshold_sweep,
    optimize_threshold,
    temporal_breakdown,
)

from .stats import (
    paired_t_and_effect,
    paired_t_from_summary,
    latency_summary,
)

from .harness import (
    generate_session,
    run_experiment,
    run_ablation_suite,
    run_threshold_sensitivity,
    bench_latency,
)

from .fileio import (
    read_domain,
    read_problem,
    read_raw_eeg,
    write_raw_eeg,
    read_posterior_stream,
    write_posterior_stream,
    read_labeled_posteriors,
)

__version__ = "1.0.0"
__all__ = [
    # Constants
    "ACTIONS",
    "TAU_H",
    "TAU_A",
    "TAU_OMEGA",
    "HISTORY_K",
    "ALPHA_M_PRESETS",
    "OBJECTIVE_PRESETS",
    # Errors
    "NeurogateError",
    "SignalError",
    "PosteriorError",
    "ConfigError",
    "GroundingError",
    "PlanningError",
    "PddlParseError",
    "InputFileError",
    "TraceFormatError",
    # Config
    "PreprocessConfig",
    "MonitorConfig",
    "TaskContext",
    "SyntheticDecoderModel",
    "ScenarioSpec",
    "load_scenario",
    # Signals
    "RawEeg",
    "EegWindow",
    "BaselineStats",
    "NoiseSpec",
    "preprocess",
    "band_rms",
    "artifact_score",
    "compute_baseline",
    "inject_noise",
    "synthesize_clean_eeg",
    # Intent
    "Action",
    "IntentPosterior",
    "CalibratedPosterior",
    "IntentHistory",
    "calibrate",
    "normalized_entropy",
    "push_frame",
    "oscillation_index",
    # PDDL
    "DomainDef",
    "ProblemDef",
    "parse_domain",
    "parse_problem",
    "format_domain",
    "format_problem",
    # Planner
    "WorldState",
    "GroundAction",
    "Goal",
    "Plan",
    "NoPlan",
    "Violation",
    "ground_action",
    "ground_actions",
    "ground_to_goal",
    "applicable",
    "apply",
    "synthesize_plan",
    "check_logical",
    "validate_plan",
    "diagnose_unsolvable",
    # Monitor
    "Verdict",
    "Cause",
    "MonitorDecision",
    "SafetyMonitor",
    "Frame",
    "resolve_gate",
    "monitor_step",
    "run_session",
    "replay",
    # Trace
    "TraceHeader",
    "TraceRecord",
    "RejectedRecord",
    "TraceWriter",
    "read_trace",
    # Metrics
    "LabeledPrediction",
    "CalibrationReport",
    "SafetyLedger",
    "Outcome",
    "ece",
    "mce",
    "ace",
    "overconfidence_rate",
    "calibration_report",
    "temperature_scale",
    "classify_outcome",
    "threshold_sweep",
    "optimize_threshold",
    "temporal_breakdown",
    # Stats
    "paired_t_and_effect",
    "paired_t_from_summary",
    "latency_summary",
    # Harness
    "generate_session",
    "run_experiment",
    "run_ablation_suite",
    "run_threshold_sensitivity",
    "bench_latency",
    # File formats
    "read_domain",
    "read_problem",
    "read_raw_eeg",
    "write_raw_eeg",
    "read_posterior_stream",
    "write_posterior_stream",
    "read_labeled_posteriors",
]

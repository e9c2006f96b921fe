"""
Runtime gate for decoded intents.

Each frame passes the physiological checks (entropy, artifact energy,
oscillation) and then the logical checks (reachability, safe configuration,
valid transitions) of a plan synthesized for the grounded goal. The first
failing check decides the HALT cause; only when all pass is the next plan
step executed. A HALT never advances the world state.
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from cachetools import LRUCache

from .config import MonitorConfig, TaskContext
from .constants import CHECK_ORDER, FRAME_RATE_HZ, REPLAY_FIELDS
from .errors import ConfigError, GroundingError, NeurogateError, SignalError, TraceFormatError
from .intent import Action, IntentHistory, IntentPosterior, calibrate, normalized_entropy, oscillation_index
from .metrics import SafetyLedger, classify_outcome, safety_violation
from .pddl import DomainDef
from .planner import (
    REACHABILITY,
    TRANSITION,
    GroundAction,
    NoPlan,
    Plan,
    Violation,
    WorldState,
    apply,
    check_logical,
    diagnose_unsolvable,
    ground_to_goal,
    synthesize_plan,
)
from .signals import BaselineStats, EegWindow, artifact_score
from .trace import RejectedRecord, TraceHeader, TraceRecord, TraceWriter, domain_fingerprint, record_fields

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    EXECUTE = 'EXECUTE'
    HALT = 'HALT'


class Cause(str, Enum):
    NONE = 'NONE'
    LOW_CONFIDENCE = 'LOW_CONFIDENCE'
    HIGH_ARTIFACT = 'HIGH_ARTIFACT'
    HIGH_OSCILLATION = 'HIGH_OSCILLATION'
    LOGICAL_REACHABILITY = 'LOGICAL_REACHABILITY'
    LOGICAL_SAFE_CONFIGURATION = 'LOGICAL_SAFE_CONFIGURATION'
    LOGICAL_TRANSITION = 'LOGICAL_TRANSITION'
    WARMUP = 'WARMUP'


CHECK_CAUSES = {
    'entropy': Cause.LOW_CONFIDENCE,
    'artifact': Cause.HIGH_ARTIFACT,
    'oscillation': Cause.HIGH_OSCILLATION,
    'reachability': Cause.LOGICAL_REACHABILITY,
    'safe_configuration': Cause.LOGICAL_SAFE_CONFIGURATION,
    'transition': Cause.LOGICAL_TRANSITION,
}


def resolve_gate(outcomes: Mapping[str, bool]) -> Tuple[Verdict, Cause]:
    """
    Verdict for a set of check outcomes (True = passed).

    Checks missing from the mapping count as passed. The cause of a HALT is
    the first failing check in gate order.
    """
    for check in CHECK_ORDER:
        if not outcomes.get(check, True):
            return Verdict.HALT, CHECK_CAUSES[check]
    return Verdict.EXECUTE, Cause.NONE


# ============================================================================
# DECISIONS
# ============================================================================

@dataclass(frozen=True)
class Measurements:
    entropy: float
    artifact: Optional[float]
    oscillation: float
    argmax: Action
    max_prob: float


@dataclass(frozen=True)
class MonitorDecision:
    """EXECUTE (with the next plan step, or None when the goal already holds) or HALT with a cause."""

    verdict: Verdict
    cause: Cause
    measurements: Measurements
    action: Optional[GroundAction] = None
    plan: Optional[Plan] = None
    violations: Tuple[Violation, ...] = ()
    budget_exceeded: bool = False

    @property
    def halted(self) -> bool:
        return self.verdict is Verdict.HALT


@dataclass(frozen=True)
class _Planned:
    result: Union[Plan, NoPlan]
    violations: Tuple[Violation, ...]


def _plan_and_check(
    domain: DomainDef,
    goal,
    state: WorldState,
    cfg: MonitorConfig,
    cache: Optional[LRUCache],
) -> _Planned:
    key = (goal, state)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    result = synthesize_plan(domain, state, goal, cfg.planner_max_depth, cfg.planner_max_states)
    if isinstance(result, Plan):
        violations = tuple(check_logical(domain, state, result))
    elif result.budget_exceeded:
        violations = (Violation(TRANSITION, f"plan search for {goal} exceeded {cfg.planner_max_states} states"),)
    else:
        violations = (diagnose_unsolvable(domain, state, goal),)
    planned = _Planned(result, violations)
    if cache is not None:
        cache[key] = planned
    return planned


def monitor_step(
    window: Optional[EegWindow],
    p: IntentPosterior,
    state: WorldState,
    ctx: TaskContext,
    cfg: MonitorConfig,
    hist: IntentHistory,
    baseline: Optional[BaselineStats],
    domain: DomainDef,
    cache: Optional[LRUCache] = None,
    frame_index: int = 0,
    artifact_override: Optional[float] = None,
    true_label: Optional[str] = None,
) -> Tuple[MonitorDecision, TraceRecord]:
    """
    Gate one decoded frame.

    Args:
        window: Preprocessed EEG window, or None in posterior-only mode
        p: Decoder posterior
        state: Current world state (not modified)
        ctx: Task context for goal grounding
        cfg: Monitor configuration
        hist: Intent history; this frame is appended
        baseline: Subject baseline; required when a window is given
        domain: Planning domain
        cache: Plan cache keyed by (goal, state)
        frame_index: Frame counter recorded in the trace
        artifact_override: Precomputed artifact score, used instead of scoring the window
        true_label: Ground-truth intent, recorded when known

    Returns:
        (MonitorDecision, TraceRecord)
    """
    start = time.perf_counter_ns()

    if artifact_override is not None:
        artifact = float(artifact_override)
    elif window is not None:
        if baseline is None:
            raise ConfigError('an EEG window was given without baseline statistics')
        if window.n_channels != baseline.n_channels:
            raise SignalError(
                f"channel mismatch: window has {window.n_channels}, baseline has {baseline.n_channels}"
            )
        artifact = artifact_score(window, baseline, aggregation=cfg.artifact_aggregation)
    else:
        artifact = None
    if hist.capacity != cfg.k_frames:
        raise ConfigError(f"history holds {hist.capacity} frames but config expects K={cfg.k_frames}")

    calibrated = calibrate(p, cfg.effective_alpha)
    entropy = normalized_entropy(calibrated)
    warming_up = len(hist) < hist.capacity
    hist.push(calibrated)
    omega = oscillation_index(hist)
    argmax = calibrated.argmax
    measurements = Measurements(entropy, artifact, omega, argmax, calibrated.confidence)

    outcomes: Dict[str, bool] = {
        'entropy': not cfg.entropy_check or entropy < cfg.tau_h,
        'artifact': not cfg.artifact_check or artifact is None or artifact < cfg.tau_a,
        'oscillation': not cfg.oscillation_check or omega < cfg.tau_omega,
    }
    warmup = cfg.warmup_halt and warming_up
    if warmup:
        outcomes['oscillation'] = True
    verdict, cause = resolve_gate(outcomes)
    if verdict is Verdict.EXECUTE and warmup:
        verdict, cause = Verdict.HALT, Cause.WARMUP

    plan: Optional[Plan] = None
    violations: Tuple[Violation, ...] = ()
    budget_exceeded = False
    action: Optional[GroundAction] = None

    if verdict is Verdict.EXECUTE:
        try:
            goal = ground_to_goal(argmax, ctx)
        except GroundingError as e:
            goal = None
            violations = (Violation(REACHABILITY, f"ungroundable: {e}"),)
        if goal is not None:
            planned = _plan_and_check(domain, goal, state, cfg, cache)
            violations = planned.violations
            if isinstance(planned.result, Plan):
                plan = planned.result
            else:
                budget_exceeded = planned.result.budget_exceeded
        if cfg.logical_check and violations:
            verdict, cause = resolve_gate({v.check: False for v in violations})
        elif plan is not None and len(plan):
            action = plan.steps[0]

    latency_us = (time.perf_counter_ns() - start) / 1000.0
    decision = MonitorDecision(verdict, cause, measurements, action, plan, violations, budget_exceeded)
    record = TraceRecord(
        frame=frame_index,
        timestamp=frame_index / FRAME_RATE_HZ,
        raw_posterior=p.as_list(),
        calibrated=calibrated.as_list(),
        entropy=entropy,
        artifact=artifact,
        oscillation=omega,
        argmax=argmax.label,
        max_prob=calibrated.confidence,
        verdict=verdict.value,
        cause=cause.value,
        action=None if action is None else str(action),
        plan=None if plan is None else plan.labels(),
        budget_exceeded=budget_exceeded,
        violations=[str(v) for v in violations],
        context=ctx,
        true_label=true_label,
        latency_us=latency_us,
    )
    return decision, record


# ============================================================================
# SESSIONS
# ============================================================================

@dataclass(frozen=True)
class Frame:
    """One input frame: decoder output plus optional EEG window, ground truth and context."""

    index: int
    probs: Sequence[float]
    window: Optional[EegWindow] = None
    true_label: Optional[str] = None
    context: Optional[TaskContext] = None
    error: Optional[str] = None


class SafetyMonitor:
    """
    Single-owner monitor state machine.

    Owns the world state, intent history and plan cache, and applies the
    executed step after each EXECUTE.
    """

    def __init__(
        self,
        domain: DomainDef,
        initial_state: WorldState,
        cfg: Optional[MonitorConfig] = None,
        baseline: Optional[BaselineStats] = None,
        context: Optional[TaskContext] = None,
    ):
        self.domain = domain
        self.cfg = cfg or MonitorConfig()
        self.state = initial_state
        self.baseline = baseline
        self.context = context or TaskContext.default()
        self.history = IntentHistory(self.cfg.k_frames)
        self.cache: LRUCache = LRUCache(maxsize=self.cfg.plan_cache_size)
        self.frames_seen = 0
        self._last_window: Optional[EegWindow] = None
        self._last_artifact: Optional[float] = None

    def step(
        self,
        p: IntentPosterior,
        window: Optional[EegWindow] = None,
        ctx: Optional[TaskContext] = None,
        frame_index: Optional[int] = None,
        true_label: Optional[str] = None,
        artifact_override: Optional[float] = None,
    ) -> Tuple[MonitorDecision, TraceRecord]:
        """Gate a frame and advance the world state on EXECUTE."""
        if artifact_override is None and window is not None and window is self._last_window:
            artifact_override = self._last_artifact
        decision, record = monitor_step(
            window, p, self.state, ctx or self.context, self.cfg, self.history, self.baseline,
            self.domain, self.cache,
            frame_index=self.frames_seen if frame_index is None else frame_index,
            artifact_override=artifact_override,
            true_label=true_label,
        )
        self._last_window = window
        self._last_artifact = decision.measurements.artifact
        self.frames_seen += 1
        if decision.verdict is Verdict.EXECUTE and decision.action is not None:
            self.state = apply(self.state, decision.action)
        return decision, record

    def header(self, seed: Optional[int] = None) -> TraceHeader:
        return make_header(self.cfg, self.domain, self.state, seed)


def make_header(cfg: MonitorConfig, domain: DomainDef, state: WorldState, seed: Optional[int] = None) -> TraceHeader:
    return TraceHeader(
        config=cfg,
        domain_name=domain.name,
        domain_sha256=domain_fingerprint(domain),
        objects=list(state.objects),
        initial_state=[list(f) for f in state.sorted_facts()],
        seed=seed,
    )


@dataclass
class SessionResult:
    trace: List[TraceRecord] = field(default_factory=list)
    ledger: SafetyLedger = field(default_factory=SafetyLedger)
    rejected: List[RejectedRecord] = field(default_factory=list)
    latencies_us: List[float] = field(default_factory=list)
    final_state: Optional[WorldState] = None

    @property
    def decisions(self) -> int:
        return len(self.trace)


def account(ledger: SafetyLedger, record: TraceRecord) -> None:
    """Add one traced decision to a ledger (unlabeled frames are only counted)."""
    if record.true_label is None:
        ledger.unlabeled += 1
        return
    raw_argmax = Action(int(np.argmax(record.raw_posterior))).label
    intervened = record.verdict == Verdict.HALT.value
    executed = None if intervened else record.argmax
    ledger.add(
        classify_outcome(raw_argmax == record.true_label, intervened),
        cause=record.cause if intervened else None,
        violated=safety_violation(executed, record.true_label),
    )


def run_session(
    frames: Iterable[Frame],
    cfg: MonitorConfig,
    domain: DomainDef,
    initial_state: WorldState,
    ctx: Optional[TaskContext] = None,
    baseline: Optional[BaselineStats] = None,
    writer: Optional[TraceWriter] = None,
) -> SessionResult:
    """
    Drive the monitor over a frame stream.

    Malformed or out-of-order frames are recorded as rejected and skipped;
    the session continues.

    Returns:
        SessionResult with the trace, ledger, rejected frames and latencies
    """
    monitor = SafetyMonitor(domain, initial_state, cfg, baseline, ctx)
    result = SessionResult()
    last_index = -1
    logger.info(f"Session started (tau_h={cfg.tau_h}, tau_a={cfg.tau_a}, tau_omega={cfg.tau_omega}, "
                f"alpha_m={cfg.effective_alpha}, K={cfg.k_frames})")

    for frame in frames:
        reason = frame.error
        posterior = None
        if reason is None and frame.index <= last_index:
            reason = f"frame {frame.index} is not after frame {last_index}"
        if reason is None:
            try:
                posterior = IntentPosterior(frame.probs)
                if frame.true_label is not None:
                    Action.from_label(frame.true_label)
            except NeurogateError as e:
                reason = str(e)
        if reason is not None:
            rejected = RejectedRecord(frame=frame.index, reason=reason)
            result.rejected.append(rejected)
            if writer is not None:
                writer.write(rejected)
            logger.debug(f"Rejected frame {frame.index}: {reason}")
            continue

        last_index = frame.index
        _, record = monitor.step(posterior, frame.window, frame.context, frame.index, frame.true_label)
        result.trace.append(record)
        result.latencies_us.append(record.latency_us)
        account(result.ledger, record)
        if writer is not None:
            writer.write(record)

    result.final_state = monitor.state
    logger.info(f"Session finished: {result.decisions} decisions, {len(result.rejected)} rejected, "
                f"intervention rate {result.ledger.intervention_rate:.3f}")
    return result


# ============================================================================
# REPLAY
# ============================================================================

@dataclass(frozen=True)
class ReplayReport:
    replayed: int
    matches: bool
    first_divergence: Optional[int] = None
    fields: Tuple[str, ...] = ()


def replay(header: TraceHeader, records: Sequence[TraceRecord], domain: DomainDef) -> ReplayReport:
    """
    Re-run recorded inputs and compare decision fields.

    The recorded artifact score stands in for the EEG window, so replay needs
    only the trace and the domain it was produced with.

    Raises:
        TraceFormatError: If the domain does not match the header fingerprint
    """
    if domain_fingerprint(domain) != header.domain_sha256:
        raise TraceFormatError(f"domain '{domain.name}' does not match the trace header fingerprint")
    state = WorldState([tuple(f) for f in header.initial_state], [tuple(o) for o in header.objects])
    monitor = SafetyMonitor(domain, state, header.config)

    for count, recorded in enumerate(records, start=1):
        _, record = monitor.step(
            IntentPosterior(recorded.raw_posterior),
            window=None,
            ctx=recorded.context,
            frame_index=recorded.frame,
            true_label=recorded.true_label,
            artifact_override=recorded.artifact,
        )
        expected = record_fields(recorded, REPLAY_FIELDS)
        actual = record_fields(record, REPLAY_FIELDS)
        differing = tuple(name for name in REPLAY_FIELDS if expected[name] != actual[name])
        if differing:
            logger.warning(f"Replay diverged at frame {recorded.frame}: {', '.join(differing)}")
            return ReplayReport(count, False, recorded.frame, differing)
    logger.info(f"Replay matched {len(records)} records")
    return ReplayReport(len(records), True)

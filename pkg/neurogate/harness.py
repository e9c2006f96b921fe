"""
Desk-scale experiment driver.

A synthetic decoder stands in for trained EEG decoders: per trial it draws a
true intent, decides correctness from the SNR-dependent accuracy, and emits
posteriors (and optionally an EEG window) whose error signature matches one of
the decoder's error modes. Experiments run those sessions through the monitor
and aggregate ledgers per SNR bin, per ablation and per threshold.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import MonitorConfig, ScenarioSpec, SyntheticDecoderModel, TaskContext
from .constants import (
    ABLATION_TOGGLES,
    BASELINE_SECONDS,
    DEFAULT_SAMPLE_RATE_HZ,
    NOISE_WEIGHTS,
    TAU_H_GRID,
)
from .errors import ConfigError
from .fileio import read_domain, read_problem
from .intent import Action, IntentPosterior
from .metrics import (
    CalibrationReport,
    LabeledPrediction,
    SafetyLedger,
    calibration_report,
    classify_outcome,
)
from .monitor import Frame, SafetyMonitor, SessionResult, run_session
from .pddl import DomainDef
from .planner import WorldState
from .signals import (
    BaselineStats,
    EegWindow,
    NoiseSpec,
    RawEeg,
    compute_baseline,
    inject_noise,
    preprocess,
    synthesize_clean_eeg,
)
from .stats import LatencySummary, PairedTest, latency_summary, paired_t_and_effect

logger = logging.getLogger(__name__)

ERROR_MODES = ('diffuse', 'artifact', 'unstable', 'infeasible')

FULL_SYSTEM = 'Full System'
CONFIDENCE_ONLY = 'Only Confidence'

# Clean signal after the baseline segment; trial windows are cut from it
_POOL_SECONDS = 20.0
_SEGMENT_SECONDS = 3.0
_CONFIDENCE_CLIP = (0.35, 0.995)


# ============================================================================
# WORLD
# ============================================================================

@dataclass(frozen=True)
class World:
    """Domain, initial state and the objects trial contexts are drawn from."""

    domain: DomainDef
    initial_state: WorldState
    robot: str
    items: Tuple[str, ...]
    locations: Tuple[str, ...]
    orientations: Tuple[str, ...]
    blocked_items: Tuple[str, ...]
    blocked_locations: Tuple[str, ...]
    blocked_orientations: Tuple[str, ...]


def default_world(domain: Optional[DomainDef] = None) -> World:
    """The bundled tabletop scene, split into feasible and infeasible objects."""
    domain = domain or read_domain()
    state = WorldState.from_problem(read_problem(domain))
    facts = state.facts
    by_type: Dict[str, List[str]] = {}
    for name, type_name in state.objects:
        by_type.setdefault(type_name, []).append(name)

    reachable = {f[1] for f in facts if f[0] == 'reachable'}
    item_at = {f[1]: f[2] for f in facts if f[0] == 'item-at'}

    # Orientations reachable from the current one over valid-rotation edges
    edges: Dict[str, List[str]] = {}
    for f in facts:
        if f[0] == 'valid-rotation':
            edges.setdefault(f[1], []).append(f[2])
    frontier = [f[2] for f in facts if f[0] == 'oriented']
    seen = set(frontier)
    while frontier:
        for nxt in edges.get(frontier.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)

    locations = sorted(by_type.get('location', []))
    items = sorted(by_type.get('item', []))
    orientations = sorted(by_type.get('orientation', []))
    robots = sorted(by_type.get('robot', []))
    if not robots:
        raise ConfigError('problem declares no robot')
    return World(
        domain=domain,
        initial_state=state,
        robot=robots[0],
        items=tuple(i for i in items if item_at.get(i) in reachable),
        locations=tuple(l for l in locations if l in reachable),
        orientations=tuple(o for o in orientations if o in seen),
        blocked_items=tuple(i for i in items if i in item_at and item_at[i] not in reachable),
        blocked_locations=tuple(l for l in locations if l not in reachable),
        blocked_orientations=tuple(o for o in orientations if o not in seen),
    )


# ============================================================================
# SESSION GENERATION
# ============================================================================

@dataclass(frozen=True)
class TrialInfo:
    index: int
    snr_db: float
    snr_bin: int
    truth: Action
    decoded: Action
    mode: str
    posteriors: Tuple[Tuple[float, ...], ...]
    context: TaskContext
    eeg_seed: int
    segment_offset: int

    @property
    def correct(self) -> bool:
        return self.mode == 'correct'


@dataclass
class GeneratedSession:
    """
    Trial plan plus the means to render its frames.

    Frames (with EEG windows when enabled) are rebuilt on each iteration from
    per-trial seeds, so a session can be replayed through several monitor
    configurations without holding every window in memory.
    """

    spec: ScenarioSpec
    world: World
    trials: List[TrialInfo]
    pool: Optional[RawEeg] = None
    baseline: Optional[BaselineStats] = None

    @property
    def n_frames(self) -> int:
        return len(self.trials) * self.spec.dwell_frames

    def trial_of(self, frame_index: int) -> TrialInfo:
        return self.trials[frame_index // self.spec.dwell_frames]

    def frames(self) -> Iterator[Frame]:
        dwell = self.spec.dwell_frames
        for trial in self.trials:
            window = self._window(trial) if self.pool is not None else None
            for k in range(dwell):
                yield Frame(
                    index=trial.index * dwell + k,
                    probs=trial.posteriors[k],
                    window=window,
                    true_label=trial.truth.label,
                    context=trial.context,
                )

    def _window(self, trial: TrialInfo) -> EegWindow:
        rate = self.pool.sample_rate_hz
        width = int(round(_SEGMENT_SECONDS * rate))
        start = trial.segment_offset
        segment = RawEeg(self.pool.samples[:, start:start + width], rate)
        rng = np.random.default_rng(trial.eeg_seed)
        noisy = inject_noise(segment, NoiseSpec(trial.snr_db, NOISE_WEIGHTS, int(rng.integers(2**63))))
        if trial.mode == 'artifact':
            burst = NoiseSpec(self.spec.decoder.artifact_burst_snr_db, (0.0, 0.0, 1.0), int(rng.integers(2**63)))
            noisy = inject_noise(noisy, burst)
        windows = preprocess(noisy, self.spec.preprocess, start_index=trial.index)
        return windows[len(windows) // 2]


def _posterior(rng: np.random.Generator, decoded: int, confidence: float) -> Tuple[float, ...]:
    weights = rng.uniform(0.75, 1.25, size=3)
    rest = (1.0 - confidence) * weights / weights.sum()
    probs = np.insert(rest, decoded, confidence)
    return tuple(float(v) for v in probs)


def _confidence(rng: np.random.Generator, mean: float, concentration: float) -> float:
    value = rng.beta(mean * concentration, (1.0 - mean) * concentration)
    return float(np.clip(value, *_CONFIDENCE_CLIP))


def _infeasible_context(ctx: TaskContext, decoded: Action, world: World, rng) -> Optional[TaskContext]:
    """Context in which the decoded intent has no valid plan, if the world allows one."""
    if decoded is Action.GRASP and world.blocked_items:
        return ctx.model_copy(update={'item': str(rng.choice(world.blocked_items))})
    if decoded in (Action.RELEASE, Action.MOVE_TO) and world.blocked_locations:
        return ctx.model_copy(update={'location': str(rng.choice(world.blocked_locations))})
    if decoded is Action.ROTATE and world.blocked_orientations:
        return ctx.model_copy(update={'orientation': str(rng.choice(world.blocked_orientations))})
    return None


def _streams(seed) -> Tuple[np.random.Generator, np.random.Generator]:
    """Independent decoder and EEG generators derived from one seed."""
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = [np.random.SeedSequence(seq.entropy, spawn_key=(*seq.spawn_key, k)) for k in range(2)]
    return np.random.default_rng(children[0]), np.random.default_rng(children[1])


def generate_session(
    model: SyntheticDecoderModel,
    spec: ScenarioSpec,
    seed: Union[int, np.random.SeedSequence, None] = None,
    world: Optional[World] = None,
) -> GeneratedSession:
    """
    Draw a synthetic session.

    Per trial: SNR from the linear ramp, a uniform true intent, correctness
    with probability accuracy(SNR), an error mode for wrong trials, a
    Beta-distributed confidence, and a feasible task context for the truth.

    Args:
        model: Synthetic decoder
        spec: Scenario (trial count, SNR ramp, dwell, EEG settings)
        seed: Overrides model.rng_seed and spec.seed
        world: Scene to draw contexts from (bundled tabletop by default)

    Returns:
        GeneratedSession
    """
    if seed is None:
        seed = model.rng_seed if model.rng_seed is not None else spec.seed
    world = world or default_world()
    rng, eeg_rng = _streams(seed)

    pool = baseline = None
    rate = DEFAULT_SAMPLE_RATE_HZ
    segment = int(round(_SEGMENT_SECONDS * rate))
    pool_start = int(round(BASELINE_SECONDS * rate))
    if spec.include_eeg:
        n_samples = int(round((BASELINE_SECONDS + _POOL_SECONDS) * rate))
        pool = synthesize_clean_eeg(spec.eeg_channels, n_samples, rate, eeg_rng)
        baseline = compute_baseline(pool, spec.preprocess, BASELINE_SECONDS)

    shares = np.array([model.error_modes.get(m, 0.0) for m in ERROR_MODES])
    shares = shares / shares.sum()
    error_mean = model.error_confidence
    n = spec.trials
    trials: List[TrialInfo] = []

    for i in range(n):
        fraction = i / (n - 1) if n > 1 else 0.0
        snr = spec.snr_start_db + (spec.snr_end_db - spec.snr_start_db) * fraction
        snr_bin = min(i * spec.snr_bins // n, spec.snr_bins - 1)
        truth = Action(int(rng.integers(len(Action))))
        correct = rng.random() < model.accuracy(snr)
        ctx = TaskContext(
            robot=world.robot,
            item=str(rng.choice(world.items)),
            location=str(rng.choice(world.locations)),
            orientation=str(rng.choice(world.orientations)),
        )

        if correct:
            mode, decoded = 'correct', truth
        else:
            mode = str(ERROR_MODES[int(rng.choice(len(ERROR_MODES), p=shares))])
            wrong = [a for a in Action if a is not truth]
            order = rng.permutation(len(wrong))
            decoded = wrong[int(order[0])]
            if mode == 'infeasible':
                blocked = _infeasible_context(ctx, decoded, world, rng)
                if blocked is None:
                    mode = 'artifact'
                else:
                    ctx = blocked

        mean = error_mean if mode == 'diffuse' else model.correct_confidence
        confidence = _confidence(rng, mean, model.concentration)
        if mode == 'unstable':
            alternate = wrong[int(order[1])]
            first = _posterior(rng, int(decoded), confidence)
            second = _posterior(rng, int(alternate), confidence)
            posteriors = tuple(first if k % 2 == 0 else second for k in range(spec.dwell_frames))
        else:
            posteriors = (_posterior(rng, int(decoded), confidence),) * spec.dwell_frames

        offset = 0
        eeg_seed = 0
        if pool is not None:
            offset = int(eeg_rng.integers(pool_start, pool.n_samples - segment + 1))
            eeg_seed = int(eeg_rng.integers(2**63))

        trials.append(TrialInfo(
            index=i, snr_db=float(snr), snr_bin=snr_bin, truth=truth, decoded=decoded, mode=mode,
            posteriors=posteriors, context=ctx, eeg_seed=eeg_seed, segment_offset=offset,
        ))

    logger.info(f"Generated session '{spec.name}': {n} trials x {spec.dwell_frames} frames, "
                f"SNR {spec.snr_start_db:+.1f} -> {spec.snr_end_db:+.1f} dB")
    return GeneratedSession(spec=spec, world=world, trials=trials, pool=pool, baseline=baseline)


# ============================================================================
# EXPERIMENTS
# ============================================================================

@dataclass(frozen=True)
class SnrBinResult:
    index: int
    snr_high_db: float
    snr_low_db: float
    ledger: SafetyLedger


@dataclass
class ExperimentResult:
    """Deterministic experiment outcome; latency is reported separately."""

    name: str
    seed: int
    ledger: SafetyLedger
    snr_bins: List[SnrBinResult]
    calibration: CalibrationReport
    confidence_only: SafetyLedger
    repetitions: List[Dict[str, float]] = field(default_factory=list)
    paired: Optional[PairedTest] = None
    latency: Optional[LatencySummary] = None

    def as_dict(self, include_timing: bool = False) -> Dict[str, object]:
        data: Dict[str, object] = {
            'name': self.name,
            'seed': self.seed,
            'ledger': self.ledger.as_dict(),
            'cause_percentages': self.ledger.cause_percentages(),
            'snr_bins': [
                {'bin': b.index, 'snr_high_db': b.snr_high_db, 'snr_low_db': b.snr_low_db, **b.ledger.as_dict()}
                for b in self.snr_bins
            ],
            'calibration': self.calibration.as_dict(),
            'confidence_only': self.confidence_only.as_dict(),
            'repetitions': self.repetitions,
            'paired': None if self.paired is None else vars(self.paired),
        }
        if include_timing and self.latency is not None:
            data['latency'] = vars(self.latency)
        return data


def repetition_seeds(spec: ScenarioSpec) -> List[np.random.SeedSequence]:
    return np.random.SeedSequence(spec.seed).spawn(spec.repetitions)


def confidence_only_ledger(session: GeneratedSession, threshold: float) -> SafetyLedger:
    """Minimal baseline gate: HALT iff the raw max-probability is below threshold."""
    ledger = SafetyLedger()
    for trial in session.trials:
        for probs in trial.posteriors:
            intervened = max(probs) < threshold
            correct = Action(int(np.argmax(probs))) is trial.truth
            ledger.add(classify_outcome(correct, intervened), cause='LOW_CONFIDENCE' if intervened else None,
                       violated=not intervened and not correct)
    return ledger


def run_monitored(session: GeneratedSession, cfg: MonitorConfig) -> SessionResult:
    return run_session(session.frames(), cfg, session.world.domain, session.world.initial_state,
                       ctx=session.spec.context, baseline=session.baseline)


def _bin_ledgers(session: GeneratedSession, result: SessionResult) -> List[SafetyLedger]:
    ledgers = [SafetyLedger() for _ in range(session.spec.snr_bins)]
    dwell = session.spec.dwell_frames
    for record in result.trace:
        trial = session.trials[record.frame // dwell]
        intervened = record.verdict == 'HALT'
        ledgers[trial.snr_bin].add(
            classify_outcome(trial.correct, intervened),
            cause=record.cause if intervened else None,
            violated=not intervened and record.argmax != trial.truth.label,
        )
    return ledgers


def _snr_bin_results(session: GeneratedSession, ledgers: List[SafetyLedger]) -> List[SnrBinResult]:
    results = []
    for k, ledger in enumerate(ledgers):
        snrs = [t.snr_db for t in session.trials if t.snr_bin == k]
        results.append(SnrBinResult(k, max(snrs, default=0.0), min(snrs, default=0.0), ledger))
    return results


def run_experiment(spec: ScenarioSpec) -> ExperimentResult:
    """
    SNR-degradation experiment.

    Each repetition draws a fresh session from its own seed stream and runs it
    through the monitor; ledgers are merged per SNR bin. Paired statistics
    compare monitored safety against the ungated decoder (whose safety rate
    equals its accuracy) across repetitions.
    """
    cfg = spec.monitor_config()
    world = default_world()
    overall = SafetyLedger()
    conf_only = SafetyLedger()
    bins = [SafetyLedger() for _ in range(spec.snr_bins)]
    predictions: List[LabeledPrediction] = []
    latencies: List[float] = []
    repetitions: List[Dict[str, float]] = []

    for rep, seed in enumerate(repetition_seeds(spec)):
        session = generate_session(spec.decoder, spec, seed=seed, world=world)
        result = run_monitored(session, cfg)
        rep_bins = _bin_ledgers(session, result)
        rep_ledger = SafetyLedger()
        for k, ledger in enumerate(rep_bins):
            bins[k] = bins[k].merge(ledger)
            rep_ledger = rep_ledger.merge(ledger)
        overall = overall.merge(rep_ledger)
        conf_only = conf_only.merge(confidence_only_ledger(session, spec.confidence_only_threshold))
        latencies.extend(result.latencies_us)
        for trial in session.trials:
            for probs in trial.posteriors:
                predictions.append(LabeledPrediction.from_probs(probs, trial.truth.label))
        repetitions.append({
            'repetition': rep,
            'safety_rate': rep_ledger.safety_rate,
            'decoder_accuracy': rep_ledger.accuracy,
            'intervention_rate': rep_ledger.intervention_rate,
            'delta': rep_ledger.safety_rate - rep_ledger.accuracy,
        })
        logger.info(f"Repetition {rep}: safety {rep_ledger.safety_rate:.3f}, "
                    f"intervention {rep_ledger.intervention_rate:.3f}")

    paired = None
    if len(repetitions) >= 2:
        paired = paired_t_and_effect([r['delta'] for r in repetitions])

    return ExperimentResult(
        name=spec.name,
        seed=spec.seed,
        ledger=overall,
        snr_bins=_snr_bin_results(session, bins),
        calibration=calibration_report(predictions),
        confidence_only=conf_only,
        repetitions=repetitions,
        paired=paired,
        latency=latency_summary(latencies) if latencies else None,
    )


@dataclass(frozen=True)
class AblationRow:
    name: str
    ledger: SafetyLedger

    @property
    def safety_rate(self) -> float:
        return self.ledger.safety_rate


def run_ablation_suite(spec: ScenarioSpec) -> List[AblationRow]:
    """
    Safety per disabled monitor component on one shared session.

    Rows: the full system, each single check switched off, and the
    confidence-only baseline.
    """
    session = generate_session(spec.decoder, spec, seed=repetition_seeds(spec)[0])
    base = spec.monitor_config()
    variants = [(FULL_SYSTEM, base)]
    variants += [(label, base.with_ablations([toggle])) for toggle, label in ABLATION_TOGGLES.items()]
    rows = []
    for name, cfg in variants:
        ledger = run_monitored(session, cfg).ledger
        logger.info(f"Ablation '{name}': safety {ledger.safety_rate:.3f}")
        rows.append(AblationRow(name, ledger))
    rows.append(AblationRow(CONFIDENCE_ONLY, confidence_only_ledger(session, spec.confidence_only_threshold)))
    return rows


def run_threshold_sensitivity(
    spec: ScenarioSpec,
    grid: Sequence[float] = TAU_H_GRID,
) -> List[Tuple[float, SafetyLedger]]:
    """Monitor ledgers over a grid of entropy thresholds on one shared session."""
    session = generate_session(spec.decoder, spec, seed=repetition_seeds(spec)[0])
    base = spec.monitor_config()
    rows = []
    for tau in sorted(float(t) for t in grid):
        ledger = run_monitored(session, base.with_overrides(tau_h=tau)).ledger
        logger.info(f"tau_h={tau:.2f}: safety {ledger.safety_rate:.3f}, intervention {ledger.intervention_rate:.3f}")
        rows.append((tau, ledger))
    return rows


def bench_latency(spec: ScenarioSpec, steps: Optional[int] = None) -> LatencySummary:
    """
    Per-step monitor latency with a warm plan cache.

    Posterior-only frames from a generated session are cycled until the
    requested number of steps; a first pass over the session warms the cache
    and is not measured.
    """
    steps = steps or spec.bench_steps
    bench_spec = spec.model_copy(update={'include_eeg': False})
    session = generate_session(spec.decoder, bench_spec, seed=repetition_seeds(spec)[0])
    frames = list(session.frames())
    monitor = SafetyMonitor(session.world.domain, session.world.initial_state, spec.monitor_config(),
                            context=spec.context)
    posteriors = [IntentPosterior(f.probs) for f in frames]
    for frame, p in zip(frames, posteriors):
        monitor.step(p, ctx=frame.context)

    latencies = []
    for k in range(steps):
        i = k % len(frames)
        _, record = monitor.step(posteriors[i], ctx=frames[i].context)
        latencies.append(record.latency_us)
    summary = latency_summary(latencies)
    logger.info(f"Benchmark: p99 {summary.p99_us:.1f} us over {steps} steps, "
                f"{summary.decisions_per_sec:.0f} decisions/s")
    return summary

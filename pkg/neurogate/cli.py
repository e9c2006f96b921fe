"""
Command-line interface for neurogate.

One executable with subcommands for monitoring posterior streams, replaying
traces, calibration reports, threshold sweeps, synthetic experiments and
latency benchmarks.

Exit codes: 0 success, 1 replay divergence, 2 input error, 3 internal error.
"""

import argparse
import logging
import sys
from dataclasses import replace
from typing import List, Optional, Sequence

from pythonjsonlogger.json import JsonFormatter

from .config import MonitorConfig, PreprocessConfig, ScenarioSpec, TaskContext, build_model, load_scenario
from .constants import (
    CALIBRATION_BINS,
    EXIT_INPUT_ERROR,
    EXIT_INTERNAL_ERROR,
    EXIT_OK,
    EXIT_VERIFY_FAILED,
    TAU_H_GRID,
    THRESHOLD_GRID,
)
from .display import (
    display_ablation,
    display_calibration,
    display_experiment,
    display_latency,
    display_monitor_summary,
    display_replay,
    display_sensitivity,
    display_sweep,
)
from .errors import NeurogateError
from .fileio import (
    read_domain,
    read_labeled_posteriors,
    read_posterior_stream,
    read_problem,
    read_raw_eeg,
    write_jsonl,
    write_posterior_stream,
)
from .harness import (
    bench_latency,
    generate_session,
    run_ablation_suite,
    run_experiment,
    run_threshold_sensitivity,
)
from .metrics import LabeledPrediction, calibration_report, temperature_scale, threshold_sweep
from .monitor import Frame, make_header, replay, run_session
from .planner import WorldState
from .signals import EegWindow, compute_baseline, preprocess
from .trace import TraceWriter, read_trace
from .utils import choose_seed, parse_grid, parse_weights, resolve_ablations, resolve_alpha

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


# ============================================================================
# SETUP
# ============================================================================

def configure_logging(verbose: bool = False, quiet: bool = False, log_json: bool = False) -> None:
    """Configure the root logger once; logs go to stderr, reports to stdout."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    handler = logging.StreamHandler(sys.stderr)
    if log_json:
        handler.setFormatter(JsonFormatter('%(asctime)s %(levelname)s %(name)s %(message)s'))
    else:
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.basicConfig(level=level, handlers=[handler])


def monitor_config(args: argparse.Namespace, base: Optional[MonitorConfig] = None) -> MonitorConfig:
    """Apply --tau-h/--tau-a/--tau-omega/--alpha-m/--k-frames to a base config."""
    base = base or MonitorConfig()
    return base.with_overrides(
        tau_h=args.tau_h,
        tau_a=args.tau_a,
        tau_omega=args.tau_omega,
        alpha_m=None if args.alpha_m is None else resolve_alpha(args.alpha_m),
        k_frames=args.k_frames,
    )


def scenario_from_args(args: argparse.Namespace) -> ScenarioSpec:
    """
    Load the scenario and fold in command-line overrides.

    The seed comes from --seed, else from the scenario file; with neither a
    fresh seed is drawn and printed so the run can be repeated.
    """
    spec = load_scenario(args.scenario) if args.scenario else ScenarioSpec()
    requested = args.seed if args.seed is not None else (spec.seed if args.scenario else None)
    seed, chosen = choose_seed(requested)
    if chosen:
        print(f"No seed given; using seed {seed}")

    data = spec.model_dump()
    data['seed'] = seed
    if args.trials is not None:
        data['trials'] = args.trials
    data['config'] = monitor_config(args, spec.config).model_dump()
    extra = [a for a in resolve_ablations(args.ablate) if a not in spec.ablations]
    data['ablations'] = list(spec.ablations) + extra
    return build_model(ScenarioSpec, data)


def _attach_windows(frames: Sequence[Frame], windows: List[EegWindow]) -> List[Frame]:
    """Pair frame k with analysis window k; frames past the recording are rejected."""
    attached = []
    for frame in frames:
        if frame.error is None:
            if 0 <= frame.index < len(windows):
                frame = replace(frame, window=windows[frame.index])
            else:
                frame = replace(frame, error=f"frame {frame.index} has no EEG window ({len(windows)} available)")
        attached.append(frame)
    return attached


def _predictions(path: str) -> List[LabeledPrediction]:
    probs, labels = read_labeled_posteriors(path)
    return [LabeledPrediction.from_probs(p, label) for p, label in zip(probs, labels)]


# ============================================================================
# SUBCOMMANDS
# ============================================================================

def cmd_monitor(args: argparse.Namespace) -> int:
    """Gate a recorded posterior stream and optionally write its trace."""
    domain = read_domain(args.domain)
    state = WorldState.from_problem(read_problem(domain, args.problem))
    cfg = monitor_config(args).with_ablations(resolve_ablations(args.ablate))
    ctx = TaskContext.from_string(args.context) if args.context else TaskContext.default()

    frames = read_posterior_stream(args.posteriors)
    baseline = None
    if args.signal:
        raw = read_raw_eeg(args.signal)
        preprocess_cfg = PreprocessConfig()
        baseline = compute_baseline(raw, preprocess_cfg)
        frames = _attach_windows(frames, preprocess(raw, preprocess_cfg))

    if args.trace_out:
        # Closing the writer flushes whatever was traced, even on error
        with TraceWriter(args.trace_out, make_header(cfg, domain, state, args.seed)) as writer:
            result = run_session(frames, cfg, domain, state, ctx, baseline, writer)
    else:
        result = run_session(frames, cfg, domain, state, ctx, baseline)

    display_monitor_summary(result, args.trace_out)
    return EXIT_OK


def cmd_replay_verify(args: argparse.Namespace) -> int:
    header, records, _ = read_trace(args.trace)
    report = replay(header, records, read_domain(args.domain))
    display_replay(report, args.trace)
    return EXIT_OK if report.matches else EXIT_VERIFY_FAILED


def cmd_calibrate(args: argparse.Namespace) -> int:
    """Calibration report, plus a temperature fit when requested."""
    probs, labels = read_labeled_posteriors(args.predictions)
    preds = [LabeledPrediction.from_probs(p, label) for p, label in zip(probs, labels)]
    report = calibration_report(preds, args.bins)
    fit = temperature_scale(probs, labels, kind='probs', M=args.bins) if args.temperature else None
    display_calibration(report, fit)

    if args.out:
        summary = {'kind': 'calibration', **report.as_dict()}
        if fit is not None:
            summary['temperature'] = vars(fit)
        rows = [summary] + [
            {'kind': 'reliability_bin', 'lower': b.lower, 'upper': b.upper, 'count': b.count,
             'accuracy': b.accuracy, 'confidence': b.confidence}
            for b in report.bins
        ]
        write_jsonl(args.out, rows)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    grid = parse_grid(args.grid) if args.grid else THRESHOLD_GRID
    weights = parse_weights(args.weights) if args.weights else None
    sweep = threshold_sweep(_predictions(args.predictions), grid)
    display_sweep(sweep, weights)

    if args.out:
        rows = [{'kind': 'sweep_point', 'tau': p.tau, **p.ledger.as_dict()} for p in sweep.points]
        objectives = sweep.optima()
        if weights is not None:
            objectives.update(sweep.optima({'custom': weights}))
        rows += [{'kind': 'optimum', 'objective': name, 'tau': p.tau} for name, p in objectives.items()]
        write_jsonl(args.out, rows)
    return EXIT_OK


def cmd_noise_test(args: argparse.Namespace) -> int:
    """SNR-degradation experiment over the scenario's repetitions."""
    result = run_experiment(scenario_from_args(args))
    display_experiment(result)

    if args.out:
        data = result.as_dict()
        bins = data.pop('snr_bins')
        write_jsonl(args.out, [{'kind': 'summary', **data}] + [{'kind': 'snr_bin', **b} for b in bins])
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    summary = bench_latency(scenario_from_args(args), args.steps)
    display_latency(summary)
    if not summary.within_budget:
        logger.warning(f"p99 latency {summary.p99_us:.1f} us exceeds the per-frame budget")
    if args.out:
        write_jsonl(args.out, [{'kind': 'latency', **vars(summary),
                                'decisions_per_sec': summary.decisions_per_sec}])
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    rows = run_ablation_suite(scenario_from_args(args))
    display_ablation(rows)
    if args.out:
        write_jsonl(args.out, [{'kind': 'ablation', 'name': r.name, **r.ledger.as_dict()} for r in rows])
    return EXIT_OK


def cmd_sensitivity(args: argparse.Namespace) -> int:
    grid = parse_grid(args.grid) if args.grid else TAU_H_GRID
    rows = run_threshold_sensitivity(scenario_from_args(args), grid)
    display_sensitivity(rows)
    if args.out:
        write_jsonl(args.out, [{'kind': 'sensitivity', 'tau_h': tau, **ledger.as_dict()} for tau, ledger in rows])
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    """Write a labeled synthetic posterior stream."""
    spec = scenario_from_args(args).model_copy(update={'include_eeg': False})
    session = generate_session(spec.decoder, spec, seed=spec.seed)
    count = write_posterior_stream(
        args.out, ((f.index, f.probs, f.true_label) for f in session.frames())
    )
    print(f"Wrote {count} frames to {args.out} (seed {spec.seed})")
    return EXIT_OK


# ============================================================================
# PARSER
# ============================================================================

def _common_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    parent.add_argument('-q', '--quiet', action='store_true', help='Warnings and errors only')
    parent.add_argument('--log-json', action='store_true', help='Structured JSON log lines')
    return parent


def _monitor_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group('monitor config')
    group.add_argument('--tau-h', type=float, help='Normalized entropy threshold')
    group.add_argument('--tau-a', type=float, help='Artifact score threshold (z units)')
    group.add_argument('--tau-omega', type=float, help='Oscillation index threshold')
    group.add_argument('--alpha-m', type=str, help='Calibration mixing weight or decoder preset name')
    group.add_argument('--k-frames', type=int, help='Oscillation history length')
    group.add_argument('--ablate', type=str, help='Checks to disable, comma-separated (fuzzy matched)')
    return parent


def _scenario_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument('--scenario', type=str, help='Scenario YAML file')
    parent.add_argument('--seed', type=int, help='Root seed (overrides the scenario)')
    parent.add_argument('--trials', type=int, help='Trial count (overrides the scenario)')
    parent.add_argument('--out', type=str, help='Line-delimited JSON results file')
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='neurogate',
        description='Runtime safety gate for EEG-decoded robot commands',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py generate --seed 42 --trials 10 --out stream.csv
  python main.py monitor --posteriors stream.csv --trace-out trace.jsonl
  python main.py monitor --posteriors stream.csv --signal session.csv
  python main.py replay-verify trace.jsonl
  python main.py calibrate stream.csv --bins 15 --temperature
  python main.py sweep stream.csv --grid 0.1:1.0:0.1 --weights balanced
  python main.py noise-test --scenario scenarios/default.yaml
  python main.py ablate --scenario scenarios/default.yaml --ablate entropy
  python main.py bench --scenario scenarios/bench.yaml
        """
    )
    common, monitor, scenario = _common_flags(), _monitor_flags(), _scenario_flags()
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('monitor', parents=[common, monitor], help='Gate a recorded posterior stream')
    p.add_argument('--posteriors', required=True, help='Posterior stream CSV (required: an EEG recording alone carries no decoder output)')
    p.add_argument('--signal', help='Raw EEG (CSV or NGEEG1 binary) aligned with --posteriors; adds the artifact check')
    p.add_argument('--domain', help='PDDL domain file (bundled domain by default)')
    p.add_argument('--problem', help='PDDL problem file (bundled tabletop by default)')
    p.add_argument('--context', help='Task context, e.g. robot=r1,item=cup,location=table,orientation=north')
    p.add_argument('--trace-out', help='Trace file to write')
    p.add_argument('--seed', type=int, help='Seed recorded in the trace header')
    p.set_defaults(handler=cmd_monitor)

    p = sub.add_parser('replay-verify', parents=[common], help='Re-run a trace and compare decisions')
    p.add_argument('trace', help='Trace file')
    p.add_argument('--domain', help='PDDL domain the trace was produced with')
    p.set_defaults(handler=cmd_replay_verify)

    p = sub.add_parser('calibrate', parents=[common], help='Calibration report for labeled posteriors')
    p.add_argument('predictions', help='Labeled posterior stream CSV')
    p.add_argument('--bins', type=int, default=CALIBRATION_BINS, help='Equal-width confidence bins')
    p.add_argument('--temperature', action='store_true', help='Also fit temperature scaling')
    p.add_argument('--out', help='Line-delimited JSON results file')
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser('sweep', parents=[common], help='Single confidence-threshold sweep')
    p.add_argument('predictions', help='Labeled posterior stream CSV')
    p.add_argument('--grid', help="Thresholds as start:stop:step or a comma list")
    p.add_argument('--weights', help='Objective weights a,b,c or a preset name')
    p.add_argument('--out', help='Line-delimited JSON results file')
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser('noise-test', parents=[common, monitor, scenario], help='SNR-degradation experiment')
    p.set_defaults(handler=cmd_noise_test)

    p = sub.add_parser('bench', parents=[common, monitor, scenario], help='Monitor latency benchmark')
    p.add_argument('--steps', type=int, help='Measured steps (scenario bench_steps by default)')
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser('ablate', parents=[common, monitor, scenario], help='Ablation table')
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser('sensitivity', parents=[common, monitor, scenario], help='Entropy threshold study')
    p.add_argument('--grid', help='tau_h values as start:stop:step or a comma list')
    p.set_defaults(handler=cmd_sensitivity)

    p = sub.add_parser('generate', parents=[common, monitor, scenario], help='Write a synthetic posterior stream')
    p.set_defaults(handler=cmd_generate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main execution function; returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet, args.log_json)

    if args.command == 'generate' and not args.out:
        print('neurogate: error: generate needs --out', file=sys.stderr)
        return EXIT_INPUT_ERROR

    try:
        return args.handler(args)
    except (NeurogateError, OSError) as e:
        print(f"neurogate: error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except Exception:
        logger.exception(f"Internal error in '{args.command}'")
        return EXIT_INTERNAL_ERROR

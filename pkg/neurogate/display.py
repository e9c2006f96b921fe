"""
Display and formatting utilities for neurogate.

Handles all console output: safety ledgers, intervention causes, calibration
reports, threshold sweeps, ablation and sensitivity tables, latency and
replay results.
"""

from typing import Dict, Optional, Sequence, Tuple

from .constants import OBJECTIVE_PRESETS
from .metrics import CalibrationReport, SafetyLedger, TemperatureFit, ThresholdSweepResult
from .stats import LatencySummary, PairedTest


def _banner(title: str) -> None:
    print("\n" + "=" * 80)
    print(title)
    print("=" * 80)


# ============================================================================
# LEDGERS
# ============================================================================

def display_ledger(ledger: SafetyLedger, title: str = "SAFETY LEDGER"):
    """
    Display gate outcome counts and the derived rates.

    Args:
        ledger: Accumulated outcomes
        title: Banner title
    """
    _banner(title)
    print(f"{'Outcome':<40} {'Count':>12}")
    print("-" * 80)
    print(f"{'TP (wrong decode, halted)':<40} {ledger.tp:>12}")
    print(f"{'TN (correct decode, executed)':<40} {ledger.tn:>12}")
    print(f"{'FP (correct decode, halted)':<40} {ledger.fp:>12}")
    print(f"{'FN (wrong decode, executed)':<40} {ledger.fn:>12}")
    if ledger.unlabeled:
        print(f"{'Unlabeled frames':<40} {ledger.unlabeled:>12}")
    print("-" * 80)
    print(f"{'Safety rate':<40} {ledger.safety_rate:>12.2%}")
    print(f"{'Intervention rate':<40} {ledger.intervention_rate:>12.2%}")
    print(f"{'Decoder accuracy':<40} {ledger.accuracy:>12.2%}")
    print(f"{'F1 (intervention positive)':<40} {ledger.f1:>12.3f}")
    print(f"{'Safety violations executed':<40} {ledger.violations:>12}")

    display_causes(ledger)


def display_causes(ledger: SafetyLedger):
    """Display the intervention-cause histogram as percentages."""
    percentages = ledger.cause_percentages()
    if not percentages:
        return
    print(f"\n{'Intervention Cause':<40} {'Count':>12} {'Share':>12}")
    print("-" * 80)
    for cause, share in percentages.items():
        print(f"{cause:<40} {ledger.causes[cause]:>12} {share:>11.1f}%")


# ============================================================================
# CALIBRATION
# ============================================================================

def display_calibration(report: CalibrationReport, fit: Optional[TemperatureFit] = None):
    """
    Display calibration metrics and the reliability table.

    Args:
        report: Calibration summary
        fit: Optional temperature-scaling result
    """
    _banner(f"CALIBRATION REPORT ({report.n} predictions, {report.M} bins)")
    print(f"{'Metric':<40} {'Value':>12}")
    print("-" * 80)
    print(f"{'ECE':<40} {report.ece:>12.4f}")
    print(f"{'MCE':<40} {report.mce:>12.4f}")
    print(f"{'ACE':<40} {report.ace:>12.4f}")
    print(f"{'Overconfidence rate':<40} {report.overconfidence_rate:>12.2%}")
    print(f"{'Accuracy':<40} {report.accuracy:>12.4f}")
    print(f"{'Mean confidence':<40} {report.mean_confidence:>12.4f}")
    print(f"{'Brier score (top label)':<40} {report.brier:>12.4f}")
    print(f"{'High-confidence rate (>= 0.9)':<40} {report.high_confidence_rate:>12.2%}")

    print(f"\n{'Bin':<16} {'Count':>10} {'Accuracy':>12} {'Confidence':>12} {'Gap':>12}")
    print("-" * 80)
    for b in report.bins:
        span = f"({b.lower:.2f}, {b.upper:.2f}]"
        if not b.count:
            print(f"{span:<16} {0:>10} {'-':>12} {'-':>12} {'-':>12}")
            continue
        print(f"{span:<16} {b.count:>10} {b.accuracy:>12.4f} {b.confidence:>12.4f} {b.gap:>12.4f}")

    if fit is not None:
        print(f"\n{'Temperature Scaling':<40} {'Before':>12} {'After':>12}")
        print("-" * 80)
        print(f"{'NLL':<40} {fit.nll_before:>12.4f} {fit.nll_after:>12.4f}")
        print(f"{'ECE':<40} {fit.ece_before:>12.4f} {fit.ece_after:>12.4f}")
        print(f"{'Temperature T*':<40} {'1.000':>12} {fit.temperature:>12.3f}")


# ============================================================================
# THRESHOLDS
# ============================================================================

def display_sweep(sweep: ThresholdSweepResult, weights: Optional[Tuple[float, float, float]] = None,
                  presets: Dict[str, Tuple[float, float, float]] = OBJECTIVE_PRESETS):
    """
    Display the single-threshold sweep and the optimal tau per objective.

    Args:
        sweep: Sweep result
        weights: Extra user objective weights (safety, responsiveness, F1)
        presets: Named objective weights
    """
    _banner("CONFIDENCE THRESHOLD SWEEP")
    print(f"{'tau':>8} {'Safety':>12} {'Intervention':>14} {'F1':>10} {'TP':>8} {'TN':>8} {'FP':>8} {'FN':>8}")
    print("-" * 80)
    for p in sweep.points:
        ledger = p.ledger
        print(f"{p.tau:>8.2f} {p.safety_rate:>12.2%} {p.intervention_rate:>14.2%} {p.f1:>10.3f} "
              f"{ledger.tp:>8} {ledger.tn:>8} {ledger.fp:>8} {ledger.fn:>8}")

    objectives = dict(presets)
    if weights is not None:
        objectives['custom ' + ','.join(f"{w:g}" for w in weights)] = tuple(weights)
    print(f"\n{'Objective':<30} {'tau*':>8} {'Safety':>12} {'Intervention':>14} {'F1':>10}")
    print("-" * 80)
    for name, point in sweep.optima(objectives).items():
        print(f"{name:<30} {point.tau:>8.2f} {point.safety_rate:>12.2%} "
              f"{point.intervention_rate:>14.2%} {point.f1:>10.3f}")


def display_sensitivity(rows: Sequence[Tuple[float, SafetyLedger]]):
    """Display monitor ledgers across entropy thresholds."""
    _banner("ENTROPY THRESHOLD SENSITIVITY")
    print(f"{'tau_h':>8} {'Safety':>12} {'Intervention':>14} {'F1':>10} {'Violations':>12}")
    print("-" * 80)
    for tau, ledger in rows:
        print(f"{tau:>8.2f} {ledger.safety_rate:>12.2%} {ledger.intervention_rate:>14.2%} "
              f"{ledger.f1:>10.3f} {ledger.violations:>12}")


# ============================================================================
# EXPERIMENTS
# ============================================================================

def display_ablation(rows):
    """
    Display safety per disabled monitor component.

    Args:
        rows: AblationRow list, the full system first
    """
    _banner("ABLATION STUDY")
    full = rows[0].safety_rate if rows else 0.0
    print(f"{'Configuration':<30} {'Safety':>12} {'Delta':>10} {'Intervention':>14} {'F1':>10}")
    print("-" * 80)
    for row in rows:
        ledger = row.ledger
        delta = 100.0 * (ledger.safety_rate - full)
        print(f"{row.name:<30} {ledger.safety_rate:>12.2%} {delta:>+9.1f}% "
              f"{ledger.intervention_rate:>14.2%} {ledger.f1:>10.3f}")


def display_snr_bins(bins):
    """Display per-SNR-bin safety and intervention rates."""
    print(f"\n{'SNR Bin (dB)':<20} {'Frames':>10} {'Safety':>12} {'Intervention':>14} {'Accuracy':>12}")
    print("-" * 80)
    for b in bins:
        span = f"{b.snr_high_db:+.1f} .. {b.snr_low_db:+.1f}"
        ledger = b.ledger
        print(f"{span:<20} {ledger.total:>10} {ledger.safety_rate:>12.2%} "
              f"{ledger.intervention_rate:>14.2%} {ledger.accuracy:>12.2%}")


def display_paired(paired: PairedTest):
    print(f"\n{'Paired test (monitored - ungated)':<40} {'Value':>12}")
    print("-" * 80)
    print(f"{'Repetitions':<40} {paired.n:>12}")
    print(f"{'Mean difference':<40} {paired.mean:>12.4f}")
    print(f"{'SD':<40} {paired.sd:>12.4f}")
    print(f"{'t':<40} {paired.t:>12.3f}")
    print(f"{'p (two-tailed)':<40} {paired.p_two_tailed:>12.3g}")
    print(f"{'Cohen d':<40} {paired.cohens_d:>12.3f}")


def display_experiment(result):
    """
    Display an SNR-degradation experiment.

    Args:
        result: ExperimentResult
    """
    display_ledger(result.ledger, f"NOISE ROBUSTNESS: {result.name} (seed {result.seed})")
    display_snr_bins(result.snr_bins)

    baseline = result.confidence_only
    print(f"\n{'Gate':<30} {'Safety':>12} {'Intervention':>14} {'F1':>10}")
    print("-" * 80)
    for name, ledger in (('Monitor', result.ledger), ('Only Confidence', baseline)):
        print(f"{name:<30} {ledger.safety_rate:>12.2%} {ledger.intervention_rate:>14.2%} {ledger.f1:>10.3f}")

    if result.paired is not None:
        display_paired(result.paired)
    if result.latency is not None:
        display_latency(result.latency)


def display_latency(summary: LatencySummary):
    """Display per-step latency percentiles against the frame budget."""
    _banner(f"MONITOR LATENCY ({summary.steps} steps)")
    print(f"{'Metric':<40} {'Value':>16}")
    print("-" * 80)
    print(f"{'p50 (us)':<40} {summary.p50_us:>16.1f}")
    print(f"{'p95 (us)':<40} {summary.p95_us:>16.1f}")
    print(f"{'p99 (us)':<40} {summary.p99_us:>16.1f}")
    print(f"{'mean (us)':<40} {summary.mean_us:>16.1f}")
    print(f"{'max (us)':<40} {summary.max_us:>16.1f}")
    print(f"{'Decisions / sec':<40} {summary.decisions_per_sec:>16.0f}")
    print(f"{'Frame period (us)':<40} {summary.frame_period_us:>16.1f}")
    print(f"{'Safety margin (x frame rate)':<40} {summary.safety_margin:>16.1f}")
    status = 'OK' if summary.within_budget else 'OVER BUDGET'
    print(f"{'p99 within 1 ms budget':<40} {status:>16}")


def display_replay(report, path: str):
    _banner(f"REPLAY VERIFICATION: {path}")
    print(f"{'Records replayed':<40} {report.replayed:>12}")
    if report.matches:
        print(f"{'Result':<40} {'MATCH':>12}")
        return
    print(f"{'Result':<40} {'DIVERGED':>12}")
    print(f"{'First diverging frame':<40} {report.first_divergence:>12}")
    print(f"{'Differing fields':<40} {', '.join(report.fields):>12}")


def display_monitor_summary(result, trace_path: Optional[str]):
    """Display the ledger and stream bookkeeping for a monitor session."""
    display_ledger(result.ledger, "MONITOR SESSION")
    print(f"\n{'Decisions':<40} {result.decisions:>12}")
    print(f"{'Rejected frames':<40} {len(result.rejected):>12}")
    if trace_path:
        print(f"{'Trace':<40} {trace_path:>12}")
    for rejected in result.rejected[:10]:
        print(f"  rejected frame {rejected.frame}: {rejected.reason}")
    if len(result.rejected) > 10:
        print(f"  ... {len(result.rejected) - 10} more")

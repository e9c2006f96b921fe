"""
Configuration constants for the neurogate safety monitor.

Contains the action set, signal-processing defaults, monitor thresholds,
calibration and sweep settings, and planner budgets.
"""

# ============================================================================
# ACTION SET
# ============================================================================

# Decoded intents, in tie-break order (lowest index wins an argmax tie)
ACTIONS = ('GRASP', 'RELEASE', 'MOVE_TO', 'ROTATE')
N_ACTIONS = len(ACTIONS)

# Posterior stream column names, one per action
POSTERIOR_COLUMNS = ('p_grasp', 'p_release', 'p_move_to', 'p_rotate')


# ============================================================================
# SIGNAL PROCESSING
# ============================================================================

DEFAULT_SAMPLE_RATE_HZ = 250.0

# Sensorimotor band kept by preprocessing
PREPROCESS_BAND_HZ = (8.0, 30.0)
FILTER_ORDER = 4

WINDOW_MS = 1000.0
STRIDE_MS = 100.0

# Motor-imagery crop used by the cue-based recording protocol (optional)
MI_PERIOD_S = (2.0, 6.0)

# EMG-contaminated band for the artifact score
ARTIFACT_BAND_HZ = (20.0, 45.0)

# Applied to every variance before dividing by it
VARIANCE_FLOOR = 1e-8

# Leading clean segment used for subject baseline statistics
BASELINE_SECONDS = 10.0

# Noise mixture weights (white, pink, EMG-band)
NOISE_WEIGHTS = (0.7, 0.2, 0.1)

# Reference SNR sweep endpoints (dB)
SNR_SWEEP_DB = (20.0, 15.0, 10.0, 5.0, 0.0, -5.0)


# ============================================================================
# MONITOR THRESHOLDS
# ============================================================================

TAU_H = 0.75        # normalized entropy
TAU_A = 2.5         # artifact score, z-units
TAU_OMEGA = 0.3     # oscillation index
HISTORY_K = 10      # frames in the oscillation window
FRAME_RATE_HZ = 100.0

# Calibration mixing weight per decoder family
ALPHA_M_PRESETS = {
    'eegnet': 0.8,
    'riemannian': 0.5,
    'lightweight_cnn': 0.6,
    'real_intent': 0.6,
}
DEFAULT_ALPHA_M = ALPHA_M_PRESETS['eegnet']

# Posterior construction tolerances
SIMPLEX_TOLERANCE = 1e-9
RENORMALIZE_TOLERANCE = 1e-6

# Per-step latency budget (ms) at the frame rate above
LATENCY_BUDGET_MS = 1.0


# ============================================================================
# CALIBRATION AND THRESHOLD SWEEPS
# ============================================================================

CALIBRATION_BINS = 10
HIGH_CONFIDENCE_LEVEL = 0.9

# Temperature search interval and grid resolution
TEMPERATURE_RANGE = (0.25, 10.0)
TEMPERATURE_STEP = 0.01

# Confidence thresholds swept by the single-threshold gate
THRESHOLD_GRID = tuple(round(0.1 * i, 1) for i in range(1, 11))

# Entropy thresholds swept by the monitor-level sensitivity study
TAU_H_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))

# Objective weights (safety, responsiveness, F1)
OBJECTIVE_PRESETS = {
    'safety_first': (1.0, 0.0, 0.0),
    'balanced': (0.33, 0.33, 0.34),
    'responsiveness': (0.2, 0.6, 0.2),
    'f1_optimal': (0.0, 0.0, 1.0),
}


# ============================================================================
# PLANNER
# ============================================================================

PLANNER_MAX_DEPTH = 8
PLANNER_MAX_STATES = 20000
PLAN_CACHE_SIZE = 4096

# Predicates holding a single value per robot; asserting a new value retracts the old one
FUNCTIONAL_PREDICATES = ('at', 'oriented')

SUPPORTED_REQUIREMENTS = (':strips', ':typing')

DEFAULT_DOMAIN_ASSET = 'assistive_robot_domain.pddl'
DEFAULT_PROBLEM_ASSET = 'assistive_robot_problem.pddl'

DEFAULT_CONTEXT = {
    'robot': 'r1',
    'item': 'cup',
    'location': 'table',
    'orientation': 'north',
}


# ============================================================================
# MONITOR CHECKS AND ABLATIONS
# ============================================================================

# Gate order: physiological checks first, then logical checks
CHECK_ORDER = (
    'entropy',
    'artifact',
    'oscillation',
    'reachability',
    'safe_configuration',
    'transition',
)

# Toggle name -> display label (one ablation row each)
ABLATION_TOGGLES = {
    'entropy_check': 'No Entropy Check',
    'artifact_check': 'No Artifact Check',
    'oscillation_check': 'No Oscillation Check',
    'calibration_adjustment': 'No Calibration Adjustment',
    'logical_check': 'No Logical Check',
}


# ============================================================================
# HARNESS
# ============================================================================

DWELL_FRAMES = 10
DEFAULT_TRIALS = 5000
DEFAULT_SNR_BINS = 5
DEFAULT_REPETITIONS = 3
DEFAULT_SEED = 42
DEFAULT_EEG_CHANNELS = 8
CONFIDENCE_ONLY_THRESHOLD = 0.75
BENCH_STEPS = 100000


# ============================================================================
# TRACE FORMAT
# ============================================================================

TRACE_VERSION = 1
TRACE_QUEUE_SIZE = 1024

# Decision fields compared by replay (latency and wall time excluded)
REPLAY_FIELDS = (
    'frame',
    'timestamp',
    'calibrated',
    'entropy',
    'artifact',
    'oscillation',
    'argmax',
    'max_prob',
    'verdict',
    'cause',
    'action',
    'plan',
    'budget_exceeded',
    'violations',
)


# ============================================================================
# EXIT CODES
# ============================================================================

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_INTERNAL_ERROR = 3

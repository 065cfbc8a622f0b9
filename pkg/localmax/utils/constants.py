from __future__ import annotations

from pathlib import Path
from typing import List, Tuple


# network initialization and layers
LEAKY_RELU_DEFAULT_SLOPE = 0.2
BATCH_NORM_MOMENTUM = 0.9
BATCH_NORM_EPSILON = 1e-5

# adam
ADAM_LEARNING_RATE = 1e-4
ADAM_BETA1 = 0.5
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

# losses
PROBABILITY_CLAMP = 1e-7
DEFAULT_LAMBDA = 1.0

# model suite
DEFAULT_HIDDEN: List[int] = [64, 32]
DEFAULT_GENERATOR_HIDDEN: List[int] = [64, 32]

# trainer
DEFAULT_EPOCHS = 200
DEFAULT_BATCH_SIZE = 32
DEFAULT_TRAIN_FRACTION = 0.9
DIVERGENCE_LEARNING_RATE_FACTOR = 0.5

# gradient checking
FINITE_DIFFERENCE_STEP = 1e-5

# evaluation
DEFAULT_PERMUTATIONS = 10000
MIN_PERMUTATIONS = 1000
PERMUTATION_CHUNK_SIZE = 500
DEFAULT_NOISE_SIGMAS: List[float] = [0.1, 0.2, 0.4]
FIXED_NOISE_SIGMA = 0.2
MIN_FIELD_RESOLUTION = 16
DEFAULT_FIELD_RESOLUTION = 64
DEFAULT_FIELD_BOUNDS: Tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0)
DECISION_THRESHOLD = 0.5

# theory
POWER_ITERATION_TOLERANCE = 1e-10
POWER_ITERATION_MAX_ITERATIONS = 1000
SLOPE_MERGE_TOLERANCE = 1e-9
CONTINUITY_TOLERANCE = 1e-9
CONSTRUCTION_VERIFY_TOLERANCE = 1e-8
GRID_SCAN_STEPS_PER_GAP = 200
MARGIN_DEFAULT_SAMPLES = 256
MARGIN_MIN_SAMPLES = 8
INDICATOR_APPROXIMATION_EPSILON = 0.05
INDICATOR_VALUE_TOLERANCE = 1e-6
MARGIN_DEFAULT_GAMMA = 0.1
MARGIN_DEFAULT_EPSILON = 0.05
BOUND_DEFAULT_DELTA = 0.05

# data
GMM_DEFAULT_GRID: List[float] = [-1.5, -0.5, 0.5, 1.5]
GMM_DEFAULT_SIGMA = 0.01
GMM_DEFAULT_SAMPLES = 4096
BACKGROUND_DEFAULT_SAMPLES = 512
BACKGROUND_DEFAULT_MIN_DISTANCE = 0.1
BACKGROUND_BOUNDS_MARGIN = 0.5
CENTER_PROBE_STEP = 0.1
MAX_REJECTION_RATE = 0.999
MIN_REJECTION_PROPOSALS = 10000
ZERO_VARIANCE_THRESHOLD = 1e-12

CSV_ENCODING = 'utf-8'
JSON_ENCODING = 'utf-8'

# run directory layout
CONFIG_FILE_NAME = 'config.json'
LOG_FILE_NAME = 'log.jsonl'
METRICS_FILE_NAME = 'metrics.json'
MANIFEST_FILE_NAME = 'manifest.json'
DATA_FILE_NAME = 'data.csv'
CHECKPOINTS_DIRECTORY_NAME = 'checkpoints'
FINAL_CHECKPOINT_NAME = 'final.ckpt'
HEATMAP_FILE_NAME = 'heatmap.csv'
QUIVER_FILE_NAME = 'quiver.csv'
NOISE_SWEEP_FILE_NAME = 'noise_sweep.csv'
TEST_DATA_FILE_NAME = 'test.csv'
NETWORK_FILE_NAME = 'network.ckpt'

PACKAGE_ROOT_PATH = Path(__file__).parent.parent
CONF_PATH = PACKAGE_ROOT_PATH / 'conf'
GMM_CONFIG_PATH = CONF_PATH / 'gmm.json'

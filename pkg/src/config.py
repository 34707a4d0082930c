import os
import logging

logger = logging.getLogger(__name__)

APP_DATA_DIR = os.path.join(os.path.expanduser("~"), ".psr_gan_forecaster")

SETTINGS_FILE_PATH = os.path.join(APP_DATA_DIR, "settings.json")

LOG_FILE_PATH = os.path.join(APP_DATA_DIR, "psr_gan_forecaster.log")
LOG_LEVEL = logging.INFO

# Do not read any values from environment variables. Defaults are internal,
# user configuration comes from settings.json, --config files and flags.

# --- Data ---
CSV_REQUIRED_COLUMNS = ["Date", "Open", "High", "Low", "Close", "Volume"]
CSV_OPTIONAL_COLUMNS = ["Adj Close"]
CSV_MISSING_TOKENS = ["", "null", "NULL", "None", "NaN", "nan"]
# Share of unparseable rows above which a file is rejected
MALFORMED_ROW_LIMIT = 0.5
# Calendar spans longer than this are reported as gaps (weekends and long weekends are not)
GAP_THRESHOLD_DAYS = 4

TRAIN_FRACTION = 0.8
FEATURES = ["close"]
FEATURE_COLUMNS = {
    "open": "open",
    "high": "high",
    "low": "low",
    "close": "close",
    "adj_close": "adj_close",
    "volume": "volume",
}

# --- Preprocessing ---
WINDOW_SIZE = 121
DELAY = 1
WAVELET_LEVELS = 1
WAVELET_THRESHOLD = "universal"  # universal | fixed | none
WAVELET_THRESHOLD_VALUE = 0.0
# Median absolute deviation to sigma for Gaussian noise
MAD_TO_SIGMA = 0.6745

# --- Networks ---
HIDDEN_SIZE = 25
NUM_LAYERS = 1
PEEPHOLE = True
D_CONV_CHANNELS = [8, 16]
D_KERNEL_WIDTH = 5
D_STRIDE = 2
D_DENSE_UNITS = [32]

# --- Training ---
MODEL_KIND = "gan"  # gan | lstm
EPOCHS = 100
BATCH_SIZE = 32
RHO_G = 0.01
RHO_D = 0.01
LAMBDA_ADV = 1.0
LAMBDA_P = 1.0
LAMBDA_DPL = 1.0
P_NORM = 2
GRAD_CLIP = 5.0
SEED = 42

# --- Remote quotes ---
FETCH_TIMEOUT = 30.0
FETCH_MAX_RETRIES = 3
FETCH_INITIAL_DELAY = 1.0
FETCH_BACKOFF_FACTOR = 2.0
FETCH_USER_AGENT = "psr-gan-forecaster/1.0"

# --- Outputs ---
MODEL_FILE_NAME = "model.json"
HISTORY_JSON_NAME = "history.json"
HISTORY_CSV_NAME = "history.csv"
PREDICTIONS_FILE_NAME = "predictions.csv"
MANIFEST_FILE_NAME = "manifest.json"
COMPARISON_TEXT_NAME = "comparison.txt"
COMPARISON_JSON_NAME = "comparison.json"
FORMAT_VERSION = 1
REPORT_FORMATS = ["text", "json", "csv"]

"""
Configuration settings for the first-order Bayesian optimization toolkit.
Defaults trace to the synthetic-function experiment protocol and can be
overridden from a .env file or the environment.
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# Get the project root directory
project_root = Path(__file__).resolve().parent.parent
env_path = project_root / '.env'

# Load environment variables from .env file if present
load_dotenv(dotenv_path=env_path)

# Experiment defaults
DEFAULT_BENCHMARK = os.getenv("FOBO_BENCHMARK", "branin")
DEFAULT_ALGORITHMS = os.getenv("FOBO_ALGORITHMS", "gEI-MS,gPI-MS,ZOBO-EI")
DEFAULT_BUDGET = int(os.getenv("FOBO_BUDGET", "200"))
DEFAULT_INITIAL_POINTS = int(os.getenv("FOBO_INITIAL_POINTS", "5"))
DEFAULT_RUNS = int(os.getenv("FOBO_RUNS", "10"))
DEFAULT_RESTARTS_K = int(os.getenv("FOBO_RESTARTS", "10"))
DEFAULT_NOISE_VARIANCE = float(os.getenv("FOBO_NOISE_VARIANCE", "0.25"))
DEFAULT_ALPHA = float(os.getenv("FOBO_ALPHA", "1.0"))
DEFAULT_ALPHA_SCHEDULE = os.getenv("FOBO_ALPHA_SCHEDULE", "constant")
DEFAULT_EPS_GRAD = float(os.getenv("FOBO_EPS_GRAD", "0.05"))
DEFAULT_EPS_PI = float(os.getenv("FOBO_EPS_PI", "0.01"))
DEFAULT_GP_RESTARTS = int(os.getenv("FOBO_GP_RESTARTS", "5"))
DEFAULT_SEED = int(os.getenv("FOBO_SEED", "0"))
DEFAULT_OUTPUT_DIR = os.getenv("FOBO_OUTPUT_DIR", "results")
DEFAULT_JOBS = int(os.getenv("FOBO_JOBS", "0"))  # 0 means all available cores
DEFAULT_SEED_SAMPLING = os.getenv("FOBO_SEED_SAMPLING", "uniform")

# GP fitting: natural-log bounds for (signal variance, lengthscale, noise variance).
# Lengthscale is relative to the unit box the inputs are rescaled into.
LOG_SIGNAL_VARIANCE_BOUNDS = (-6.0, 6.0)
LOG_LENGTHSCALE_BOUNDS = (-4.0, 4.0)
LOG_NOISE_VARIANCE_BOUNDS = (-12.0, 2.0)

# Cholesky jitter ladder, as multiples of the signal variance
JITTER_START = 1e-10
JITTER_MAX = 1e-4
JITTER_FACTOR = 10.0

# Acquisition optimizer
OPTIMIZER_GTOL = 1e-6
OPTIMIZER_MAX_ITER = 200
FINITE_DIFF_STEP = 1e-6  # on the unit box
DUPLICATE_TOLERANCE = 1e-6  # unit-box distance

# Smallest standard deviation used in Gaussian CDF arguments
MIN_STD = 1e-12

# Regret reporting
REGRET_FLOOR = 1e-12
CSV_FLOAT_FORMAT = "%.17g"

# Console colors used by the command-line reporter
CLI_COLORS = {
    "banner": "cyan",
    "progress": "yellow",
    "success": "green",
    "error": "red",
    "info": "white"
}

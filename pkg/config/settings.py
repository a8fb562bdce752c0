"""
Settings - Centralized configuration for the RCP toolkit

All application-wide constants: directory paths, numerical tolerances,
enumeration caps, eigensolver choice, statistical test levels and the
push-broom experiment defaults.
"""
import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

# ══════════════════════════════════════════════════════════════════════
# Project Paths
# ══════════════════════════════════════════════════════════════════════
BASE_DIR = Path(__file__).parent.parent
OUTPUT_DIR = Path(os.getenv("RCP_OUTPUT_DIR", str(BASE_DIR / "outputs")))
DATABASE_DIR = BASE_DIR / "database"
LOG_FILE = OUTPUT_DIR / "rcp_toolkit.log"

# Create directories
for d in [OUTPUT_DIR, DATABASE_DIR]:
    d.mkdir(parents=True, exist_ok=True)

ARTIFACT_VERSION = "1.0.0"
LOG_LEVEL = os.getenv("RCP_LOG_LEVEL", "INFO")

# ══════════════════════════════════════════════════════════════════════
# Parallelism
# ══════════════════════════════════════════════════════════════════════
THREADS = int(os.getenv("RCP_THREADS", "1"))
PARALLEL_CHUNK_SIZE = 256

# ══════════════════════════════════════════════════════════════════════
# Ensembles
# ══════════════════════════════════════════════════════════════════════
# numpy Generator(PCG64); normals via the ziggurat sampler
PRNG_NAME = "PCG64"
NORMAL_METHOD = "ziggurat"
COLUMN_NORM_TOLERANCE = 1e-12
BASIS_ORTHONORMAL_TOLERANCE = 1e-10

# Synthetic push-broom image
GREY_MAX = 255.0
SYNTHETIC_NOISE_SIGMA = 255.0
# log10 range of the per-column texture amplitude
SYNTHETIC_AMPLITUDE_LOG10 = (-1.5, 0.5)

# ══════════════════════════════════════════════════════════════════════
# Spectra
# ══════════════════════════════════════════════════════════════════════
EIGEN_SOLVER = os.getenv("RCP_EIGEN_SOLVER", "jacobi")  # jacobi | lapack
JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_TOLERANCE = 1e-12       # relative to ‖G‖_F
SYMMETRY_TOLERANCE = 1e-10
EIGEN_CLAMP_TOLERANCE = 1e-12      # eigenvalues in [-tol, 0) are clamped to 0

# ══════════════════════════════════════════════════════════════════════
# RIC / ROC
# ══════════════════════════════════════════════════════════════════════
ENUMERATION_CAP = int(os.getenv("RCP_ENUMERATION_CAP", "2000000"))
# below this many candidate supports sampling is without replacement
SAMPLING_REPLACEMENT_THRESHOLD = 100_000

# ══════════════════════════════════════════════════════════════════════
# RCP bounds
# ══════════════════════════════════════════════════════════════════════
COS_CLAMP_TOLERANCE = 1e-12
SANDWICH_RELATIVE_TOLERANCE = 1e-12
CONTAINMENT_TOLERANCE = 1e-9

# ══════════════════════════════════════════════════════════════════════
# Wishart statistics
# ══════════════════════════════════════════════════════════════════════
KS_SIGNIFICANCE = float(os.getenv("RCP_KS_SIGNIFICANCE", "0.01"))
JB_SIGNIFICANCE = 0.01
KS_MIN_SAMPLES = 8
JB_MIN_SAMPLES = 30
MOMENT_MIN_SAMPLES = 1000
MOMENT_MEAN_SIGMAS = 4.0
MOMENT_VARIANCE_RELATIVE = 0.15

# ══════════════════════════════════════════════════════════════════════
# Push-broom experiment defaults (configuration, not ground truth)
# ══════════════════════════════════════════════════════════════════════
PUSHBROOM_N = 128
PUSHBROOM_L = 64
PUSHBROOM_M = 64
PUSHBROOM_SMOOTHNESS = 0.95
ENSEMBLE_COUNT = 23
ENSEMBLE_N = 256
ENSEMBLE_M = 128
ENSEMBLE_SPARSITY_RANGE = (4, 119)
# dense image columns give supports of size N; LAPACK keeps runs interactive
PUSHBROOM_SOLVER = os.getenv("RCP_PUSHBROOM_SOLVER", "lapack")

# ══════════════════════════════════════════════════════════════════════
# Output formats
# ══════════════════════════════════════════════════════════════════════
CSV_FLOAT_FORMAT = "%.17g"
MISSING_SENTINEL = "NA"
DIGEST_ALGORITHM = "sha256"

# ══════════════════════════════════════════════════════════════════════
# Database
# ══════════════════════════════════════════════════════════════════════
DATABASE_PATH = DATABASE_DIR / "rcp_runs.db"
DATABASE_URL = f"sqlite:///{DATABASE_PATH}"

"""
Runtime Settings

Environment-driven defaults for the toolkit. Values come from the process
environment, optionally seeded from a local `.env` file.
"""

import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return int(float(raw))


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return float(raw)


LOG_LEVEL = os.getenv("MANN_LOG_LEVEL", "INFO").upper()

DEFAULT_SEED = _env_int("MANN_DEFAULT_SEED", 0)
DEFAULT_N_MAX = _env_int("MANN_DEFAULT_N_MAX", 10_000)
DEFAULT_PROBES = _env_int("MANN_DEFAULT_PROBES", 10_000)
DEFAULT_VALIDATION_PAIRS = _env_int("MANN_VALIDATION_PAIRS", 10_000)

# Points are kept in memory up to this many iterates; beyond it only scalars.
POINT_CAP = _env_int("MANN_POINT_CAP", 1_000_000)

# Terms scanned before a series is declared non-divergent.
SCAN_CAP = _env_int("MANN_SCAN_CAP", 1_000_000_000)

# Hard ceiling on trajectory length when certification extends a run.
MAX_STEPS = _env_int("MANN_MAX_STEPS", 50_000_000)

TOLERANCE = _env_float("MANN_TOLERANCE", 1e-9)
SAMPLE_RADIUS = _env_float("MANN_SAMPLE_RADIUS", 10.0)

from enum import Enum

VERSION = "1.0.0"
SCHEMA_VERSION = 1

# CPU-bound endpoints (quadrature, Monte Carlo), keep this low
API_RATE_LIMIT = "30/minute"

DEFAULT_SEED = 20240619
MAX_SOLVER_DEGREE = 20
MAX_TRIALS_PER_REQUEST = 5000
INVALID_FAILURE_SHARE = 0.05

# tail_ratio_exact limits
EXACT_MAX_N = 5000
EXACT_MAX_DIGITS = 100

# radicand values below this (relative) are treated as exact zeros
RADICAND_CLAMP = 1e-14
RADICAND_FAIL = 1e-12

# 17 significant digits round-trip a double
MACHINE_FLOAT_FORMAT = "{:.17g}"
HUMAN_FLOAT_FORMAT = "{:.6g}"

EXPECTED_HEADER = ["n", "m", "alpha_eff", "kacrice", "predicted", "ratio"]
ASYMPTOTE_HEADER = ["n", "m", "alpha_eff", "predicted", "computed", "ratio"]
CONSTANT_HEADER = ["alpha", "c_alpha", "critical_radius"]
DENSITY_HEADER = ["r", "density", "n", "m"]
ZERO_HEADER = ["trial", "re", "im", "jac", "orientation"]
CONTOUR_HEADER = ["segment_id", "re", "im"]


class EnsembleModel(str, Enum):
  TRUNCATED = "truncated"
  LI_WEI = "li-wei"

class Orientation(str, Enum):
  PRESERVING = "preserving"
  REVERSING = "reversing"

class Regime(str, Enum):
  INSIDE = "inside"
  OUTSIDE = "outside"
  CRITICAL = "critical"

class MeanRegime(str, Enum):
  PROPORTIONAL = "proportional"
  FIXED_M = "fixed-m"

class TailCutPolicy(str, Enum):
  TRANSFORM = "transform"
  EXPLICIT = "explicit"

class OutputFormat(str, Enum):
  CSV = "csv"
  JSON = "json"

class Command(str, Enum):
  EXPECTED = "expected"
  MONTECARLO = "montecarlo"
  DENSITY = "density"
  ASYMPTOTE = "asymptote"
  LEMNISCATE = "lemniscate"
  SELFTEST = "selftest"

class GridProjection(str, Enum):
  FLAT = "flat"
  STEREOGRAPHIC = "stereographic"

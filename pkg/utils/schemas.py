import math
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from constants import (
    DEFAULT_SEED,
    MAX_SOLVER_DEGREE,
    EnsembleModel,
    GridProjection,
    Orientation,
    OutputFormat,
    Regime,
    TailCutPolicy,
)


def _to_complex(value):
    # JSON and TOML carry complex numbers as [re, im]
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    return complex(value)


class HarmonicPolynomial(BaseModel):
    """F(z) = p(z) + conj(q(z)) with p = sum a_k z^k (degree n), q = sum b_k z^k (degree m)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int = Field(ge=1)
    m: int = Field(ge=0)
    a: np.ndarray
    b: np.ndarray
    # stream the coefficients were drawn from, after any resampling
    stream: Optional[int] = None
    # resampling attempt that produced the draw (0 unless a_n vanished)
    attempt: int = Field(default=0, ge=0)

    @field_validator("a", "b", mode="before")
    @classmethod
    def as_complex_array(cls, value):
        arr = np.array(value, dtype=np.complex128).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        return arr

    @model_validator(mode="after")
    def check_degrees(self):
        if self.m > self.n:
            raise ValueError(f"m={self.m} exceeds n={self.n}")
        if len(self.a) != self.n + 1:
            raise ValueError(f"expected {self.n + 1} coefficients for p, got {len(self.a)}")
        if len(self.b) != self.m + 1:
            raise ValueError(f"expected {self.m + 1} coefficients for q, got {len(self.b)}")
        return self

    @classmethod
    def from_coefficients(cls, a, b, stream: Optional[int] = None) -> "HarmonicPolynomial":
        a = np.atleast_1d(np.asarray(a, dtype=np.complex128))
        b = np.atleast_1d(np.asarray(b, dtype=np.complex128))
        return cls(n=len(a) - 1, m=len(b) - 1, a=a, b=b, stream=stream)


class EnsembleSpec(BaseModel):
    model: EnsembleModel = EnsembleModel.TRUNCATED
    n: int = Field(ge=1)
    m: Optional[int] = Field(default=None, ge=0)
    alpha: Optional[float] = None
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64)

    @model_validator(mode="after")
    def resolve_m(self):
        if self.alpha is not None:
            if not 0.0 < self.alpha <= 1.0:
                raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
            m = int(math.floor(self.alpha * self.n + 0.5))
            if self.m is not None and self.m != m:
                raise ValueError(f"m={self.m} conflicts with alpha={self.alpha} (round gives {m})")
            self.m = m
        if self.m is None:
            raise ValueError("either m or alpha is required")
        if self.m > self.n:
            raise ValueError(f"m={self.m} exceeds n={self.n}")
        return self

    @property
    def alpha_eff(self) -> float:
        return self.m / self.n


class ReducedTerms(BaseModel):
    b1: float
    b2: float
    b12: float
    b3: float
    r: float = Field(ge=0)
    n: int
    m: int


class FullTerms(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    R1: float
    R2: float
    R12: float
    R3: float
    z: complex

    @field_validator("z", mode="before")
    @classmethod
    def coerce_z(cls, value):
        return _to_complex(value)

    @field_serializer("z")
    def dump_z(self, z: complex):
        return [z.real, z.imag]


class QuadratureConfig(BaseModel):
    abs_tol: float = Field(default=1e-10, gt=0)
    rel_tol: float = Field(default=1e-10, gt=0)
    max_subdivisions: int = Field(default=500, ge=1)
    tail_cut_policy: TailCutPolicy = TailCutPolicy.TRANSFORM
    r_max: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def check_policy(self):
        if self.tail_cut_policy == TailCutPolicy.EXPLICIT and self.r_max is None:
            raise ValueError("explicit tail cut needs r_max")
        return self


class SolverConfig(BaseModel):
    max_degree: int = Field(default=MAX_SOLVER_DEGREE, ge=1)
    max_iterations: int = Field(default=50, ge=1)
    max_halvings: int = Field(default=30, ge=0)
    step_tol: float = Field(default=1e-12, gt=0)
    residual_tol: float = Field(default=1e-10, gt=0)
    dedup_tol: float = Field(default=1e-8, gt=0)
    singular_tol: float = Field(default=1e-12, gt=0)
    # at least (start_factor * n)^2 starting points
    start_factor: int = Field(default=4, ge=1)
    densify: bool = True


class ZeroRecord(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    z: complex
    jac: float
    orientation: Orientation
    residual: float = Field(ge=0)

    @field_validator("z", mode="before")
    @classmethod
    def coerce_z(cls, value):
        return _to_complex(value)

    @field_serializer("z")
    def dump_z(self, z: complex):
        return [z.real, z.imag]


class ZeroCountResult(BaseModel):
    zeros: List[ZeroRecord]
    n_plus: int
    n_minus: int
    winding: int
    certified: bool
    starts: int
    densified: bool = False

    @model_validator(mode="after")
    def check_counts(self):
        if self.n_plus + self.n_minus != len(self.zeros):
            raise ValueError("orientation counts do not add up to the number of zeros")
        return self

    @property
    def total(self) -> int:
        return len(self.zeros)


class TrialOutcome(BaseModel):
    stream: int
    attempt: int = 0
    result: Optional[ZeroCountResult] = None
    error: Optional[str] = None

    @property
    def certified(self) -> bool:
        return self.result is not None and self.result.certified


class SampleStatistics(BaseModel):
    spec: EnsembleSpec
    trials: int
    certified_trials: int
    histogram: Dict[int, int]
    mean: float
    variance: float
    stderr: float
    mean_plus: float
    mean_minus: float
    failures: int
    resamples: int = 0
    valid: bool = True
    notes: List[str] = []


class RegimeClassification(BaseModel):
    regime: Regime
    x: float
    alpha: float
    rate: float = Field(ge=0)

    @model_validator(mode="after")
    def check_rate(self):
        if (self.rate > 0) != (self.regime == Regime.OUTSIDE):
            raise ValueError("rate is positive exactly in the outside regime")
        return self


class GridWindow(BaseModel):
    """Square sampling grid.

    Flat windows sample z directly. Stereographic windows sample the chart
    w -> tan(|w|/2) w/|w| of the Riemann sphere around the origin; half_width is then the chart
    radius (below pi) and cells with |w| >= half_width stand for everything beyond.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    center: complex = 0j
    half_width: float = Field(default=1.0, gt=0)
    resolution: int = Field(default=1024, ge=64)
    projection: GridProjection = GridProjection.FLAT

    @field_validator("center", mode="before")
    @classmethod
    def coerce_center(cls, value):
        return _to_complex(value)

    @field_serializer("center")
    def dump_center(self, center: complex):
        return [center.real, center.imag]

    @model_validator(mode="after")
    def check_chart(self):
        if self.projection == GridProjection.STEREOGRAPHIC:
            if self.center != 0:
                raise ValueError("stereographic windows are centered at the origin")
            if self.half_width >= math.pi:
                raise ValueError(f"stereographic chart radius must stay below pi, got {self.half_width}")
        return self


class ComponentReport(BaseModel):
    count: int
    touching_boundary: int
    resolution: int


class MomentEstimate(BaseModel):
    mean: float
    stderr: float
    closed_form: float
    trials: int

    @property
    def z_score(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == self.closed_form else math.inf
        return (self.mean - self.closed_form) / self.stderr


class RunConfig(BaseModel):
    """Resolved configuration of one CLI or API run; echoed into every output."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    command: str
    seed: int = DEFAULT_SEED
    out: Optional[str] = None
    format: OutputFormat = OutputFormat.CSV
    model: EnsembleModel = EnsembleModel.TRUNCATED
    n: List[int] = []
    m: Optional[int] = None
    alpha: List[float] = []
    trials: int = Field(default=2000, ge=1)
    r_grid: List[float] = []
    workers: int = Field(default=1, ge=1)
    quadrature: QuadratureConfig = QuadratureConfig()
    solver: SolverConfig = SolverConfig()
    window: GridWindow = GridWindow()
    stream: int = Field(default=0, ge=0)
    full_disk: bool = False
    # lemniscate: recount every sample at twice the resolution
    check_doubling: bool = False
    pgm_out: Optional[str] = None
    zeros_out: Optional[str] = None
    contour_out: Optional[str] = None
    log_level: str = "INFO"
    quiet: bool = False
    # selftest: smaller grids and Monte Carlo sizes
    quick: bool = False

    @field_validator("log_level")
    @classmethod
    def check_log_level(cls, value: str):
        value = value.upper()
        if value not in ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"):
            raise ValueError(f"unknown log level {value}")
        return value


class ComponentSurvey(BaseModel):
    """Component counts of the orientation-reversing set over a batch of samples."""
    spec: EnsembleSpec
    resolution: int
    full_disk: bool
    counts: List[int]
    touching_boundary: List[int]
    doubled_counts: List[int] = []
    bound: int

    @property
    def violations(self) -> int:
        return sum(count > self.bound for count in self.counts)

    @property
    def stable_share(self) -> float:
        if not self.doubled_counts:
            return 1.0
        same = sum(a == b for a, b in zip(self.counts, self.doubled_counts))
        return same / len(self.counts)


class SuiteResult(BaseModel):
    name: str
    passed: bool
    checked: int
    skipped: int = 0
    # largest error seen, in the units the suite compares
    worst: float = 0.0
    detail: str = ""

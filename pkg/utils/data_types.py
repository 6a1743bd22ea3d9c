from typing import List, Optional

from pydantic import BaseModel, Field

from constants import DEFAULT_SEED, MAX_TRIALS_PER_REQUEST, EnsembleModel
from utils.schemas import GridWindow, QuadratureConfig, SolverConfig


class ExpectedRequest(BaseModel):
    n: List[int] = Field(min_length=1)
    m: Optional[int] = None
    alpha: Optional[float] = None
    model: EnsembleModel = EnsembleModel.TRUNCATED
    quadrature: QuadratureConfig = QuadratureConfig()


class DensityRequest(BaseModel):
    n: int = Field(ge=1)
    m: int = Field(ge=0)
    r_grid: List[float] = Field(min_length=1)


class AsymptoteRequest(BaseModel):
    alpha: List[float] = Field(min_length=1)
    n: List[int] = []
    quadrature: QuadratureConfig = QuadratureConfig()


class MonteCarloRequest(BaseModel):
    n: int = Field(ge=1)
    m: Optional[int] = None
    alpha: Optional[float] = None
    model: EnsembleModel = EnsembleModel.TRUNCATED
    trials: int = Field(default=200, ge=1, le=MAX_TRIALS_PER_REQUEST)
    seed: int = DEFAULT_SEED
    solver: SolverConfig = SolverConfig()


class SampleRequest(BaseModel):
    n: int = Field(ge=1)
    m: Optional[int] = None
    alpha: Optional[float] = None
    model: EnsembleModel = EnsembleModel.TRUNCATED
    seed: int = DEFAULT_SEED
    stream: int = Field(default=0, ge=0)
    find_zeros: bool = True
    solver: SolverConfig = SolverConfig()


class LemniscateRequest(BaseModel):
    n: int = Field(ge=1)
    m: Optional[int] = None
    alpha: Optional[float] = None
    model: EnsembleModel = EnsembleModel.TRUNCATED
    seed: int = DEFAULT_SEED
    stream: int = Field(default=0, ge=0)
    window: GridWindow = GridWindow(resolution=256)
    full_disk: bool = False
    image: bool = False


class SelftestRequest(BaseModel):
    quick: bool = True

import os
from functools import lru_cache
from typing import Optional

from pydantic import BaseModel, Field

# Load environment variables
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass


class Settings(BaseModel):
    table_limit: int = Field(20000, ge=1, description="largest n for a gfc table")
    exact_limit: int = Field(5000, ge=1, description="largest m for exact unseen-species prediction")
    quad_abs_tol: float = Field(1e-12, gt=0)
    quad_rel_tol: float = Field(1e-10, gt=0)
    quad_limit: int = Field(2000, ge=50)
    cdf_grid_tol: float = Field(1e-9, gt=0)
    pmf_tol: float = Field(1e-10, gt=0)
    laplace_n_max: int = Field(1_000_000, ge=1)
    threads: int = Field(1, ge=1)
    log_level: str = "INFO"
    log_file: Optional[str] = None


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    return int(raw) if raw not in (None, "") else default


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    return float(raw) if raw not in (None, "") else default


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Settings from the environment (and .env). Call cache_clear() after changing env vars."""
    return Settings(
        table_limit=_env_int("PITMAN_TABLE_LIMIT", 20000),
        exact_limit=_env_int("PITMAN_EXACT_LIMIT", 5000),
        quad_abs_tol=_env_float("PITMAN_QUAD_ABS_TOL", 1e-12),
        quad_rel_tol=_env_float("PITMAN_QUAD_REL_TOL", 1e-10),
        quad_limit=_env_int("PITMAN_QUAD_LIMIT", 2000),
        cdf_grid_tol=_env_float("PITMAN_CDF_GRID_TOL", 1e-9),
        pmf_tol=_env_float("PITMAN_PMF_TOL", 1e-10),
        laplace_n_max=_env_int("PITMAN_LAPLACE_N_MAX", 1_000_000),
        threads=_env_int("PITMAN_THREADS", os.cpu_count() or 1),
        log_level=os.getenv("LOG_LEVEL", "INFO"),
        log_file=os.getenv("LOG_FILE") or None,
    )

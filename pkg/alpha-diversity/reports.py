"""
Output layer: tables as CSV (with '#' metadata lines) and result models as JSON.
"""

import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from models import Partition, RateReport
from partition_laws import LogPmf

FLOAT_FORMAT = "%.12g"

Target = Union[str, Path, None]


def format_float(value: Optional[float]) -> str:
    if value is None:
        return "N/A"
    if not math.isfinite(value):
        return str(value)
    return FLOAT_FORMAT % value


class BaseReport:
    """Shared writers."""

    @staticmethod
    def open_target(target: Target) -> TextIO:
        if target is None or str(target) == "-":
            return sys.stdout
        return open(target, "w", encoding="utf-8", newline="")

    @staticmethod
    def write_text(text: str, target: Target) -> None:
        stream = BaseReport.open_target(target)
        try:
            stream.write(text)
        finally:
            if stream is not sys.stdout:
                stream.close()

    @staticmethod
    def render_csv(frame: pd.DataFrame, metadata: Optional[Dict[str, Any]] = None) -> str:
        header = "".join(f"# {key}: {value}\n" for key, value in (metadata or {}).items())
        return header + frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    @staticmethod
    def render_json(model: BaseModel) -> str:
        return model.model_dump_json(indent=2) + "\n"


class PmfReport(BaseReport):
    @staticmethod
    def frame(pmf: LogPmf) -> pd.DataFrame:
        return pd.DataFrame({
            "k": pmf.support(),
            "probability": pmf.probs(),
            "log_probability": pmf.log_probs,
        })

    @staticmethod
    def single(log_probability: float) -> pd.DataFrame:
        return pd.DataFrame({"probability": [math.exp(log_probability)],
                             "log_probability": [log_probability]})


class DrawReport(BaseReport):
    @staticmethod
    def values(draws: np.ndarray, column: str = "value") -> pd.DataFrame:
        return pd.DataFrame({"replicate": np.arange(1, len(draws) + 1), column: draws})

    @staticmethod
    def partitions(draws: List[Partition]) -> pd.DataFrame:
        return pd.DataFrame({
            "replicate": np.arange(1, len(draws) + 1),
            "n": [p.n for p in draws],
            "j": [p.j for p in draws],
            "block_sizes": [";".join(str(s) for s in p.block_sizes()) for p in draws],
        })


class RateReportWriter(BaseReport):
    @staticmethod
    def frame(report: RateReport) -> pd.DataFrame:
        return pd.DataFrame({
            "n": [row.n for row in report.rows],
            "d_K": [row.d_k for row in report.rows],
            "scaled": [row.scaled for row in report.rows],
        })

    @staticmethod
    def metadata(report: RateReport) -> Dict[str, Any]:
        meta: Dict[str, Any] = {
            "mode": report.mode,
            "alpha": format_float(report.params.alpha),
            "theta": format_float(report.params.theta),
        }
        if report.context is not None:
            meta["n"] = report.context.n
            meta["j"] = report.context.j
        meta.update({
            "fitted_slope": format_float(report.fitted_slope),
            "slope_stderr": format_float(report.slope_stderr),
            "scaled_ratio": format_float(report.scaled_ratio),
            "theorem_scope": str(report.theorem_scope).lower(),
        })
        return meta

    @staticmethod
    def render(report: RateReport, fmt: str) -> str:
        if fmt == "json":
            return BaseReport.render_json(report)
        return BaseReport.render_csv(RateReportWriter.frame(report), RateReportWriter.metadata(report))

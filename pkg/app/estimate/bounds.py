# app/estimate/bounds.py
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.core.errors import ConfigurationError
from app.core.logging_utils import get_app_logger
from app.estimate.gmm import moment_values
from app.moments.base import MomentFn, MomentKind
from app.numerics.linalg import invert
from app.panels.batch import as_batch


@dataclass
class BoundResult:
    """info = E[φφ′] of an efficient score; bound_se = sqrt(diag(info⁻¹)) per observation."""

    score: str
    info: np.ndarray
    bound_se: np.ndarray
    n: int
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "info": self.info.tolist(),
            "bound_se": self.bound_se.tolist(),
            "n": self.n,
            "warnings": list(self.warnings),
        }


def efficiency_bound(score: MomentFn, panels, theta, workers: Optional[int] = None) -> BoundResult:
    if score.kind != MomentKind.SCORE:
        raise ConfigurationError("efficiency bounds need a score, not an effect moment", moment=score.name)
    batch = as_batch(panels)
    values = moment_values(score, theta, batch, workers)
    info = values.T @ values / batch.n
    bound_se = np.sqrt(np.diag(invert(info)))
    get_app_logger("bounds").info(
        f"📊 Efficiency bound: score={score.name}",
        extra={"n": batch.n, "bound_se": bound_se.tolist()},
    )
    return BoundResult(score.name, info, bound_se, batch.n)


def information_gap(H: np.ndarray, V: np.ndarray) -> float:
    """‖H + V‖_F / ‖V‖_F; zero when the score Jacobian equals minus its covariance."""
    return float(np.linalg.norm(H + V) / np.linalg.norm(V))

# app/moments/base.py
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from app.core.errors import EvaluationError
from app.models import ExperimentPosterior, MomentRegime, Theta, WorkingModel
from app.panels.batch import PanelBatch, as_batch

Evaluator = Callable[[Theta, PanelBatch], np.ndarray]


class MomentKind:
    SCORE = "score"
    EFFECT = "effect"


@dataclass(frozen=True)
class MomentFn:
    """
    φ_θ over a panel, returned as (n, dim).

    Scores have mean zero at the true θ; effect moments have mean equal to the
    average effect they identify.
    """

    name: str
    dim: int
    evaluate: Evaluator
    regime: str = MomentRegime.FHR
    kind: str = MomentKind.SCORE
    requires: Optional[WorkingModel] = None
    posterior: Optional[ExperimentPosterior] = None
    labels: tuple[str, ...] = field(default=())

    def __call__(self, theta: Theta, panel) -> np.ndarray:
        batch = as_batch(panel)
        out = np.asarray(self.evaluate(theta, batch), dtype=float).reshape(batch.n, -1)
        if out.shape[1] != self.dim:
            raise EvaluationError(
                f"moment {self.name} returned {out.shape[1]} columns, expected {self.dim}",
                location={"moment": self.name},
            )
        finite = np.isfinite(out)
        if not finite.all():
            unit, col = np.argwhere(~finite)[0]
            raise EvaluationError(
                f"moment {self.name} is not finite",
                location={"unit": int(unit), "component": int(col)},
            )
        return out

    def mean(self, theta: Theta, panel) -> np.ndarray:
        return self(theta, panel).mean(axis=0)


def mc_mean_se(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and their Monte Carlo standard errors."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    n = values.shape[0]
    return values.mean(axis=0), values.std(axis=0, ddof=1) / np.sqrt(n)


def t_stats(values: np.ndarray, target=0.0) -> np.ndarray:
    mean, se = mc_mean_se(values)
    return (mean - np.asarray(target, dtype=float)) / se

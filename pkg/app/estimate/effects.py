# app/estimate/effects.py
"""Average effects with influence-function standard errors."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.core.errors import ConfigurationError
from app.core.logging_utils import get_app_logger
from app.estimate.gmm import mean_jacobian, moment_values
from app.models import EffectFlavor
from app.moments.base import MomentFn, MomentKind
from app.numerics.linalg import solve_linear
from app.panels.batch import as_batch


@dataclass
class EffectResult:
    effect: str
    flavor: str
    mu_hat: float
    se: float
    n: int

    @property
    def sd(self) -> float:
        """Per-observation standard deviation of the influence function."""
        return self.se * np.sqrt(self.n)

    def to_dict(self) -> dict:
        return {"effect": self.effect, "flavor": self.flavor, "mu_hat": self.mu_hat, "se": self.se, "n": self.n}


def influence_function(
    effect_moment: MomentFn,
    score_moment: MomentFn,
    panels,
    theta_hat,
    flavor: str,
    workers: Optional[int] = None,
) -> tuple[float, np.ndarray]:
    """
    (μ̂, IF) with IF = (φ_μ − μ̂) + G·I⁻¹·φ for the efficient flavour and
    (φ_μ − μ̂) − G·H⁻¹·φ for the working-model and simple flavours,
    G = E[∂φ_μ/∂θ].
    """
    if effect_moment.kind != MomentKind.EFFECT or effect_moment.dim != 1:
        raise ConfigurationError("average_effect needs a scalar effect moment", moment=effect_moment.name)
    if score_moment.kind != MomentKind.SCORE:
        raise ConfigurationError("the correction term needs a score moment", moment=score_moment.name)
    if flavor not in (EffectFlavor.EFFICIENT, EffectFlavor.WORKING, EffectFlavor.SIMPLE):
        raise ConfigurationError(f"unknown influence-function flavor {flavor!r}")

    batch = as_batch(panels)
    phi_mu = moment_values(effect_moment, theta_hat, batch, workers)[:, 0]
    mu = float(phi_mu.mean())
    G = mean_jacobian(effect_moment, theta_hat, batch, workers)[0]
    score = moment_values(score_moment, theta_hat, batch, workers)
    if score.shape[1] != G.size:
        raise ConfigurationError("score dimension must equal the parameter dimension",
                                 score=score_moment.name, dim=int(score.shape[1]))

    if flavor == EffectFlavor.EFFICIENT:
        info = score.T @ score / batch.n
        correction = score @ solve_linear(info, G)
    else:
        H = mean_jacobian(score_moment, theta_hat, batch, workers)
        correction = -(score @ solve_linear(H.T, G))
    return mu, (phi_mu - mu) + correction


def average_effect(
    effect_moment: MomentFn,
    score_moment: MomentFn,
    panels,
    theta_hat,
    flavor: str = EffectFlavor.EFFICIENT,
    workers: Optional[int] = None,
) -> EffectResult:
    mu, infl = influence_function(effect_moment, score_moment, panels, theta_hat, flavor, workers)
    se = float(np.std(infl, ddof=1) / np.sqrt(infl.size))
    get_app_logger("effects").info(
        f"📊 Average effect {effect_moment.name} ({flavor})",
        extra={"mu_hat": mu, "se": se, "score": score_moment.name},
    )
    return EffectResult(effect_moment.name, flavor, mu, se, int(infl.size))

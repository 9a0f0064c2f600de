# app/moments/mph_moments.py
"""Instrumented differences, the log-Helmert moments and the average-effect moments."""
from typing import Callable, Optional

import numpy as np

from app.core.errors import ConfigurationError, EvaluationError
from app.models import Theta
from app.mph import integrated_spells, weibull_lambda
from app.numerics.special import log_gamma
from app.panels.batch import PanelBatch, as_batch

Instrument = Callable[[PanelBatch, int], np.ndarray]
EvalPoint = tuple[float, float, float]


def default_instrument(batch: PanelBatch, t: int) -> np.ndarray:
    """(1, Y_{t−2}, X_{t−1}′) for the difference P_t − P_{t−1}, t = 2…T."""
    y_lag = batch.y_prev()[:, t - 2]
    return np.column_stack([np.ones(batch.n), y_lag, batch.x[:, t - 2, :]])


def ab_moment(theta: Theta, panel, m: Optional[Instrument] = None) -> np.ndarray:
    """Stacked [ρ(Z_t) − ρ(Z_{t−1})]·m for t = 2…T."""
    batch = as_batch(panel)
    m = m or default_instrument
    p = integrated_spells(theta, batch).p
    blocks = []
    for t in range(2, batch.T + 1):
        inst = np.asarray(m(batch, t), dtype=float).reshape(batch.n, -1)
        blocks.append((p[:, t - 1] - p[:, t - 2])[:, None] * inst)
    return np.hstack(blocks)


def require_two_periods(batch: PanelBatch, what: str) -> None:
    if batch.T != 2:
        raise ConfigurationError(f"{what} is implemented for T = 2", T=batch.T)


def log_parts(ptilde: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(ln P̃, ln(1−P̃)); P̃ numerically at 0 or 1 is an evaluation error."""
    bad = ~((ptilde > 0) & (ptilde < 1))
    if np.any(bad):
        raise EvaluationError("Helmert part at the boundary", location={"unit": int(np.argwhere(bad)[0][0])})
    return np.log(ptilde), np.log1p(-ptilde)


def simple_moment(theta: Theta, panel) -> np.ndarray:
    """(2 + ln(1−P̃₁) + ln P̃₁, X₁′·(ln(1−P̃₁) − ln P̃₁), Y₀·(ln(1−P̃₁) − ln P̃₁))."""
    batch = as_batch(panel)
    require_two_periods(batch, "simple_moment")
    ptilde = integrated_spells(theta, batch).ptilde[:, 0]
    log_p, log_1mp = log_parts(ptilde)
    diff = log_1mp - log_p
    return np.column_stack([2.0 + log_1mp + log_p, batch.x[:, 0, :] * diff[:, None], batch.y0 * diff])


def _eval_index(theta: Theta, y_prev: float, x) -> float:
    return float(theta.index(np.asarray(x, dtype=float)) + theta.gamma * y_prev)


def ash_moment(theta: Theta, panel, eval_point: EvalPoint = (1.0, 1.0, 1.0)) -> np.ndarray:
    """λ_α(y)·e^{x′β + γy′}·(T−1)/P̄ at eval_point = (y, y′, x); its mean is the ASH."""
    batch = as_batch(panel)
    y, y_prev, x = eval_point
    pbar = integrated_spells(theta, batch).pbar
    level = weibull_lambda(theta.alpha, y) * np.exp(_eval_index(theta, y_prev, x))
    return (level * (batch.T - 1) / pbar)[:, None]


def asf_moment(theta: Theta, panel, eval_point: EvalPoint = (1.0, 1.0, 1.0)) -> np.ndarray:
    """
    exp(−(x′β + γy′)/α)·Γ(1+1/α)Γ(T)/Γ(T+1/α)·P̄^{1/α}; the mean is the ASF, the
    expected duration under external assignment of (y′, x). The y entry of
    eval_point is unused.
    """
    batch = as_batch(panel)
    _, y_prev, x = eval_point
    s = 1.0 / theta.alpha
    pbar = integrated_spells(theta, batch).pbar
    log_const = log_gamma(1.0 + s) + log_gamma(batch.T) - log_gamma(batch.T + s)
    level = np.exp(-_eval_index(theta, y_prev, x) * s + log_const)
    return (level * np.power(pbar, s))[:, None]


def asf_p1_moment(theta: Theta, panel, eval_point: EvalPoint = (1.0, 1.0, 1.0)) -> np.ndarray:
    """exp(−(x′β + γy′)/α)·P₁^{1/α}; same mean as asf_moment."""
    batch = as_batch(panel)
    _, y_prev, x = eval_point
    s = 1.0 / theta.alpha
    p1 = integrated_spells(theta, batch).p[:, 0]
    return (np.exp(-_eval_index(theta, y_prev, x) * s) * np.power(p1, s))[:, None]

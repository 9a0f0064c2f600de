# app/altmodels/mih.py
"""
Mixed interactive hazards: P_t = ρ_θ(Z_t) is Exponential(V^{1+x_t′δ}) given the past,
so E[P_t^c | ·] = Γ(1+c)·V^{−c(1+x_t′δ)}.
"""
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from app.core.errors import DomainError
from app.models import MihTheta
from app.mph import integrated_spells
from app.numerics.special import log_gamma
from app.panels.batch import as_batch

MihInstrument = Callable[[np.ndarray, np.ndarray], np.ndarray]


def mih_ratio(theta: MihTheta, x1, x2) -> np.ndarray:
    """r = (1 + x₁′δ)/(1 + x₂′δ)."""
    return theta.exponent(x1) / theta.exponent(x2)


def mih_moment(theta: MihTheta, panel, b: float = 1.0, m: Optional[MihInstrument] = None) -> np.ndarray:
    """[p₁^b − Γ(1+b)/Γ(1+br)·p₂^{br}]·m(y₀, x₁), T = 2; m defaults to 1."""
    if not b > 0:
        raise DomainError("b must be positive", b=b)
    batch = as_batch(panel)
    if batch.T != 2:
        raise DomainError("mih_moment is defined for T = 2", T=batch.T)
    x1, x2 = batch.x[:, 0, :], batch.x[:, 1, :]
    r = mih_ratio(theta, x1, x2)
    if np.any(1.0 + b * r <= 0):
        raise DomainError("Gamma pole: 1 + b*r must be positive", b=b)
    p = integrated_spells(theta.base, batch).p
    scale = np.exp(log_gamma(1.0 + b) - gammaln(1.0 + b * r))
    bracket = np.power(p[:, 0], b) - scale * np.power(p[:, 1], b * r)
    inst = np.ones((batch.n, 1)) if m is None else np.asarray(m(batch.y0, x1), dtype=float).reshape(batch.n, -1)
    return bracket[:, None] * inst


def mih_psi(theta: MihTheta, b: float = 1.0) -> Callable:
    """ψ(p₁, x₁, a) = p₁^b − Γ(1+b)·exp(−b(1+x₁′δ)a), mean zero given (x₁, A = a)."""
    log_g = log_gamma(1.0 + b)

    def psi(p1, x1, a):
        return np.power(p1, b) - np.exp(log_g - b * theta.exponent(x1) * np.asarray(a, dtype=float))

    return psi
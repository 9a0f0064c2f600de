# app/mph.py
"""
Weibull mixed proportional hazards model.

Conditional on the past and on A = ln V, the integrated spell
P_t = Λ_α(Y_t)·exp(γY_{t−1} + X_t′β) is Exponential(V). The Helmert transform
maps (P₁…P_T) to T−1 scale-free parts P̃_t ~ Beta(1, T−t) and the total
P̄ ~ Gamma(T, V), all mutually independent.
"""
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from app.core.errors import DomainError
from app.models import Theta
from app.numerics.special import log_gamma
from app.panels.batch import PanelBatch, as_batch

LOG_FLOOR = 1e-300


def _positive(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise DomainError(f"{name} must be positive and finite")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def safe_log(x) -> np.ndarray:
    """Log with the 1e-300 floor used for Helmert parts at the boundary."""
    return np.log(np.maximum(x, LOG_FLOOR))


# ---------- Weibull baseline ----------

def weibull_Lambda(alpha: float, y):
    _positive("alpha", alpha)
    return _out(np.power(_positive("y", y), alpha))


def weibull_lambda(alpha: float, y):
    _positive("alpha", alpha)
    return _out(alpha * np.power(_positive("y", y), alpha - 1.0))


def weibull_Lambda_inv(alpha: float, p):
    _positive("alpha", alpha)
    return _out(np.power(_positive("p", p), 1.0 / alpha))


class Hazard(Protocol):
    """Baseline hazard triple: integrated Λ, hazard λ and Λ⁻¹."""

    def Lambda(self, y): ...
    def lam(self, y): ...
    def Lambda_inv(self, p): ...


@dataclass(frozen=True)
class WeibullHazard:
    alpha: float

    def Lambda(self, y):
        return weibull_Lambda(self.alpha, y)

    def lam(self, y):
        return weibull_lambda(self.alpha, y)

    def Lambda_inv(self, p):
        return weibull_Lambda_inv(self.alpha, p)


def _hazard(theta: Theta, hazard: Hazard | None) -> Hazard:
    return hazard if hazard is not None else WeibullHazard(theta.alpha)


# ---------- integrated spells ----------

def rho(theta: Theta, y_t, y_prev, x_t, hazard: Hazard | None = None):
    """ρ_θ(z_t) = Λ(y_t)·exp(γ·y_prev + x_t′β)."""
    lin = theta.gamma * np.asarray(y_prev, dtype=float) + theta.index(x_t)
    return _out(np.asarray(_hazard(theta, hazard).Lambda(y_t)) * np.exp(lin))


def invert_rho(theta: Theta, p_t, y_prev, x_t, hazard: Hazard | None = None):
    """Duration y_t with ρ_θ(y_t, y_prev, x_t) = p_t."""
    lin = theta.gamma * np.asarray(y_prev, dtype=float) + theta.index(x_t)
    return _out(np.asarray(_hazard(theta, hazard).Lambda_inv(_positive("p_t", p_t) * np.exp(-lin))))


def mph_density(theta: Theta, y_t, y_prev, x_t, a, hazard: Hazard | None = None):
    """f(y_t | y_prev, x_t, a) = λ(y_t)·e^{γy_prev + x_t′β + a}·exp(−ρ·e^a)."""
    h = _hazard(theta, hazard)
    lin = theta.gamma * np.asarray(y_prev, dtype=float) + theta.index(x_t)
    scale = np.exp(lin + np.asarray(a, dtype=float))
    return _out(np.asarray(h.lam(y_t)) * scale * np.exp(-np.asarray(h.Lambda(y_t)) * scale))


@dataclass(frozen=True)
class IntegratedSpells:
    """p (n, T), ptilde (n, T−1), pbar (n,)."""

    p: np.ndarray
    ptilde: np.ndarray
    pbar: np.ndarray

    @property
    def T(self) -> int:
        return int(self.p.shape[-1])


def integrated_spells(theta: Theta, panel, hazard: Hazard | None = None) -> IntegratedSpells:
    batch: PanelBatch = as_batch(panel)
    p = np.asarray(rho(theta, batch.y, batch.y_prev(), batch.x, hazard), dtype=float).reshape(batch.n, batch.T)
    ptilde, pbar = helmert_forward(p)
    return IntegratedSpells(p=p, ptilde=ptilde, pbar=pbar)


# ---------- Helmert transform ----------

def helmert_forward(p) -> tuple[np.ndarray, np.ndarray]:
    """P̃_t = p_t / Σ_{s≥t} p_s for t < T and P̄ = Σ p_t, over the last axis."""
    p = _positive("p", p)
    if p.ndim == 0 or p.shape[-1] < 2:
        raise DomainError("helmert_forward needs T >= 2")
    tail = np.flip(np.cumsum(np.flip(p, axis=-1), axis=-1), axis=-1)
    return p[..., :-1] / tail[..., :-1], tail[..., 0]


def _check_parts(ptilde, pbar) -> tuple[np.ndarray, np.ndarray]:
    ptilde = np.asarray(ptilde, dtype=float)
    if ptilde.ndim == 0:
        ptilde = ptilde[None]
    if np.any(~((ptilde > 0) & (ptilde < 1))):
        raise DomainError("Helmert parts must lie in (0, 1)")
    return ptilde, _positive("pbar", pbar)


def helmert_inverse(ptilde, pbar) -> np.ndarray:
    """P₁ = P̃₁P̄, P_t = P̃_t·∏_{s<t}(1−P̃_s)·P̄, P_T = ∏_{s<T}(1−P̃_s)·P̄."""
    ptilde, pbar = _check_parts(ptilde, pbar)
    ones = np.ones(ptilde.shape[:-1] + (1,))
    remaining = np.cumprod(np.concatenate([ones, 1.0 - ptilde], axis=-1), axis=-1)
    share = remaining * np.concatenate([ptilde, ones], axis=-1)
    return share * np.asarray(pbar)[..., None]


def helmert_jacobian_det(ptilde, pbar, T: int | None = None):
    """|∂p/∂(P̃, P̄)| = P̄^{T−1}·∏_{s=1}^{T−2}(1−P̃_s)^{T−s−1}."""
    ptilde, pbar = _check_parts(ptilde, pbar)
    T = ptilde.shape[-1] + 1 if T is None else T
    if ptilde.shape[-1] != T - 1:
        raise DomainError("ptilde must hold T-1 parts", T=T, parts=int(ptilde.shape[-1]))
    powers = T - np.arange(1, T) - 1
    return _out(np.power(pbar, T - 1) * np.prod(np.power(1.0 - ptilde, powers), axis=-1))


def gamma_moment_pbar(delta: float, T: int, a):
    """E[P̄^δ | A = a] = e^{−δa}·Γ(T+δ)/Γ(T) for δ > −T."""
    if not delta > -T:
        raise DomainError("gamma_moment_pbar requires delta > -T", delta=delta, T=T)
    return _out(np.exp(-delta * np.asarray(a, dtype=float) + log_gamma(T + delta) - log_gamma(T)))


def helmert_part_law(t: int, T: int) -> tuple[float, float]:
    """Beta(1, T−t) parameters of P̃_t."""
    if not 1 <= t < T:
        raise DomainError("need 1 <= t < T", t=t, T=T)
    return 1.0, float(T - t)


def pbar_law(T: int, v) -> tuple[float, np.ndarray]:
    """Gamma(T, v) shape–rate law of P̄ given V = v."""
    return float(T), _positive("v", v)

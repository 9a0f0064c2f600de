# app/altmodels/poisson.py
"""
Poisson counts Y_t | past, A ~ Poisson(exp(z_t′θ + A)) with z_t = (x_t′, y_{t−1})′.

A period-1 function ψ polynomial in v = e^A is inverted into a period-2 function
through the Taylor coefficients of ψ(v)·e^{v·μ₂}, μ₂ = e^{z₂′θ}; both named
moments are special cases.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import poisson

from app.core.errors import UnsupportedInputError
from app.models import PoissonTheta

CoefficientFn = Callable[[PoissonTheta, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _col(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    return arr[:, None] if arr.ndim == 1 else np.atleast_2d(arr)


def stack_z(x_t, y_prev) -> np.ndarray:
    """z_t = (x_t′, y_{t−1})′ as (n, k+1)."""
    y_prev = np.atleast_1d(np.asarray(y_prev, dtype=float))
    x_t = np.asarray(x_t, dtype=float)
    x_t = x_t.reshape(y_prev.size, -1)
    return np.column_stack([x_t, y_prev])


def poisson_cw_moment(theta: PoissonTheta, y0, y1, y2, x1, x2) -> np.ndarray:
    """z₁(y₁ − y₂·e^{(z₁−z₂)′θ})."""
    z1, z2 = stack_z(x1, y0), stack_z(x2, y1)
    th = theta.as_vector()
    y1, y2 = np.atleast_1d(y1).astype(float), np.atleast_1d(y2).astype(float)
    return z1 * (y1 - y2 * np.exp((z1 - z2) @ th))[:, None]


def poisson_second_moment(theta: PoissonTheta, y0, y1, y2, x1, x2, m: Optional[Callable] = None) -> np.ndarray:
    """[y₁(y₁−1) − y₂(y₂−1)·e^{2(z₁−z₂)′θ}]·m(z₁); m defaults to 1."""
    z1, z2 = stack_z(x1, y0), stack_z(x2, y1)
    th = theta.as_vector()
    y1, y2 = np.atleast_1d(y1).astype(float), np.atleast_1d(y2).astype(float)
    bracket = y1 * (y1 - 1.0) - y2 * (y2 - 1.0) * np.exp(2.0 * (z1 - z2) @ th)
    inst = np.ones((z1.shape[0], 1)) if m is None else _col(m(z1))
    return bracket[:, None] * inst


@dataclass(frozen=True)
class PolynomialPsi:
    """
    ψ(v) = Σ_k c_k·v^k with v = e^A. `coefficients(theta, y0, y1, z1)` returns
    (n, degree+1, d), ascending powers.
    """

    coefficients: CoefficientFn
    name: str = "psi"


def poisson_score_psi() -> PolynomialPsi:
    """ψ = z₁(y₁ − v·e^{z₁′θ}), the period-1 score direction."""
    def coeffs(theta, y0, y1, z1):
        mu1 = np.exp(z1 @ theta.as_vector())
        return np.stack([z1 * y1[:, None], -z1 * mu1[:, None]], axis=1)
    return PolynomialPsi(coeffs, "score")


def poisson_second_psi(m: Optional[Callable] = None) -> PolynomialPsi:
    """ψ = [y₁(y₁−1) − v²·e^{2z₁′θ}]·m(z₁)."""
    def coeffs(theta, y0, y1, z1):
        inst = np.ones((z1.shape[0], 1)) if m is None else _col(m(z1))
        mu1 = np.exp(z1 @ theta.as_vector())
        c0 = (y1 * (y1 - 1.0))[:, None] * inst
        c2 = -(mu1 ** 2)[:, None] * inst
        return np.stack([c0, np.zeros_like(c0), c2], axis=1)
    return PolynomialPsi(coeffs, "second")


def poisson_taylor_moment(theta: PoissonTheta, psi: PolynomialPsi, y0, y1, y2, x1, x2) -> np.ndarray:
    """
    φ(y₂) = e^{−y₂z₂′θ}·∂^{y₂}/∂v^{y₂}|₀[ψ(v)·e^{v·μ₂}] = Σ_{k≤y₂} c_k·μ₂^{−k}·y₂!/(y₂−k)!.
    """
    if not isinstance(psi, PolynomialPsi):
        raise UnsupportedInputError(
            "the Taylor construction needs psi as a finite polynomial in v",
            psi_type=type(psi).__name__,
        )
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    y1 = np.atleast_1d(np.asarray(y1, dtype=float))
    y2 = np.atleast_1d(np.asarray(y2, dtype=float))
    z1, z2 = stack_z(x1, y0), stack_z(x2, y1)
    c = np.asarray(psi.coefficients(theta, y0, y1, z1), dtype=float)
    if c.ndim == 2:
        c = c[:, :, None]
    mu2 = np.exp(z2 @ theta.as_vector())

    out = np.zeros((y2.size, c.shape[2]))
    falling = np.ones_like(y2)  # y₂(y₂−1)…(y₂−k+1)
    for k in range(c.shape[1]):
        out += (falling * mu2 ** (-k))[:, None] * c[:, k, :]
        falling = falling * np.maximum(y2 - k, 0.0)
    return out


def truncation_point(mu, tol: float = 1e-12, pad: int = 10) -> int:
    """Largest count kept so the Poisson(mu) tail beyond it is below tol, plus pad."""
    return int(np.max(poisson.ppf(1.0 - tol, np.atleast_1d(mu)))) + pad


def poisson_pmf(y, mu) -> np.ndarray:
    return poisson.pmf(y, mu)


def exact_conditional_mean(
    moment: Callable,
    theta: PoissonTheta,
    a: float,
    y0: float,
    x1,
    x2,
    tol: float = 1e-12,
) -> np.ndarray:
    """
    E[φ | y₀, x₁, x₂, A = a] by summation over (y₁, y₂) on a truncated grid.
    X₂ is held fixed, which covers any feedback rule.
    """
    th = theta.as_vector()
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    mu1 = float(np.exp(np.append(x1, y0) @ th + a))
    y1 = np.arange(truncation_point(mu1, tol) + 1, dtype=float)
    mu2 = np.exp(np.column_stack([np.tile(x2, (y1.size, 1)), y1]) @ th + a)
    y2 = np.arange(truncation_point(mu2, tol) + 1, dtype=float)

    g1, g2 = np.meshgrid(y1, y2, indexing="ij")
    w = poisson_pmf(g1, mu1) * poisson_pmf(g2, mu2[:, None])
    n = g1.size
    vals = moment(
        theta,
        np.full(n, float(y0)), g1.ravel(), g2.ravel(),
        np.tile(x1, (n, 1)), np.tile(x2, (n, 1)),
    )
    return np.tensordot(w.ravel(), vals, axes=(0, 0))

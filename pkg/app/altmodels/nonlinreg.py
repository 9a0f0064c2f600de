# app/altmodels/nonlinreg.py
"""
Regularised moments for Y_t = m_β(Y_{t−1}, X_t, A) + ε_t, ε_t ~ N(0, σ²).

A period-1 function ψ(y₀, y₁, x₁, a) with mean zero is carried to period 2 by
φ^λ(y₂) = ∫ψ(a)·∂m/∂a·k_λ(m(a) − y₂) da, where k_λ(w) = (1/λ)K_λ(w/λ) is the
deconvolution kernel in the outcome scale. Its Fourier transform is
κ(λt)·e^{σ²t²/2}, so E[φ^λ | a] is ψ smoothed with bandwidth λ.
"""
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Optional, Protocol

import numpy as np

from app.core.errors import DomainError
from app.core.logging_utils import get_app_logger
from app.models import NonlinRegTheta, linear_index
from app.numerics.quadrature import QuadratureRule, gauss_legendre

BOUNDARY_MASS_TOL = 1e-6
A_GRID_NODES = 400
A_GRID_HALF_WIDTH = 8.0
_BLOCK = 4096


# ---------- Fourier kernels ----------

class FourierKernel(Protocol):
    name: str

    def __call__(self, u: np.ndarray) -> np.ndarray: ...

    def even_taylor(self) -> np.ndarray: ...


@dataclass(frozen=True)
class SincKernel:
    """κ = 1 on |u| < 1; K is the sinc kernel when σ² = 0."""

    name: str = "sinc"

    def __call__(self, u):
        return (np.abs(u) < 1.0).astype(float)

    def even_taylor(self) -> np.ndarray:
        return np.array([1.0])


@dataclass(frozen=True)
class TriweightKernel:
    """κ(u) = (1 − u²)³ on |u| < 1."""

    name: str = "triweight"

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) < 1.0, (1.0 - u * u) ** 3, 0.0)

    def even_taylor(self) -> np.ndarray:
        return np.array([1.0, -3.0, 3.0, -1.0])


SINC = SincKernel()
TRIWEIGHT = TriweightKernel()
KERNELS = {"sinc": SINC, "triweight": TRIWEIGHT}


def deconv_kernel(z, lam: float, sigma2: float, kernel: FourierKernel = SINC, n_nodes: Optional[int] = None):
    """
    K_λ(z) = (λ/π)∫₀^{1/λ} cos(λτz)·κ(λτ)·e^{σ²τ²/2} dτ
           = (1/π)∫₀^1 cos(uz)·κ(u)·e^{σ²u²/(2λ²)} du.
    """
    if not lam > 0:
        raise DomainError("lambda must be positive", lam=lam)
    if sigma2 < 0:
        raise DomainError("sigma2 must be nonnegative", sigma2=sigma2)
    z = np.asarray(z, dtype=float)
    n = n_nodes or 64 + 2 * int(np.ceil(np.max(np.abs(z)) if z.size else 0.0))
    rule = gauss_legendre(n, 0.0, 1.0)
    u = rule.nodes
    weight = rule.weights * kernel(u) * np.exp(sigma2 * u * u / (2.0 * lam * lam))
    flat = z.ravel()
    out = np.empty_like(flat)
    for start in range(0, flat.size, _BLOCK):
        block = slice(start, start + _BLOCK)
        out[block] = np.cos(np.multiply.outer(flat[block], u)) @ weight / np.pi
    return float(out[0]) if z.ndim == 0 else out.reshape(z.shape)


def outcome_kernel(w, lam: float, sigma2: float, kernel: FourierKernel = SINC) -> np.ndarray:
    """k_λ(w) = (1/λ)·K_λ(w/λ), unit mass in w."""
    return np.asarray(deconv_kernel(np.asarray(w, dtype=float) / lam, lam, sigma2, kernel)) / lam


def inverse_heat_weights(lam: float, sigma2: float, kernel: FourierKernel, order: int) -> np.ndarray:
    """(−1)^k·f_k with f_k the u^{2k} coefficients of κ(λu)·e^{σ²u²/2}, k ≤ order."""
    kap = kernel.even_taylor()
    f = np.zeros(order + 1)
    for k in range(order + 1):
        for j in range(min(k, kap.size - 1) + 1):
            i = k - j
            f[k] += kap[j] * lam ** (2 * j) * (sigma2 / 2.0) ** i / factorial(i)
    return f * (-1.0) ** np.arange(order + 1)


# ---------- regression index and ψ ----------

@dataclass(frozen=True)
class LinearIndex:
    """m_β(y′, x, a) = γy′ + x′β + a."""

    gamma: float
    beta: tuple[float, ...] = (0.0,)

    def __call__(self, y_prev, x, a):
        return self.gamma * np.asarray(y_prev, dtype=float) + linear_index(x, self.beta) + np.asarray(a, dtype=float)

    def da(self, y_prev, x, a):
        return np.ones_like(np.asarray(a, dtype=float))

    def affine(self, y_prev, x) -> tuple[np.ndarray, np.ndarray]:
        c = self.gamma * np.asarray(y_prev, dtype=float) + linear_index(x, self.beta)
        return c, np.ones_like(c)


@dataclass(frozen=True)
class PolynomialInA:
    """
    ψ(a) = Σ_j b_j·a^j; `coefficients(y0, y1, x1)` returns (n, degree+1, d),
    ascending powers.
    """

    coefficients: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, y0, y1, x1, a):
        c = np.asarray(self.coefficients(y0, y1, x1), dtype=float)
        if c.ndim == 2:
            c = c[:, :, None]
        powers = np.power.outer(np.asarray(a, dtype=float), np.arange(c.shape[1]))
        return np.einsum("ak,nkd->nad", powers, c)


def linear_score_psi(index: LinearIndex) -> PolynomialInA:
    """ψ = z₁·(y₁ − γy₀ − x₁′β − a) with z₁ = (x₁′, y₀)′."""

    def coeffs(y0, y1, x1):
        y0 = np.atleast_1d(np.asarray(y0, dtype=float))
        x1 = np.asarray(x1, dtype=float).reshape(y0.size, -1)
        z1 = np.column_stack([x1, y0])
        resid = np.atleast_1d(y1) - index.gamma * y0 - x1 @ np.asarray(index.beta)
        return np.stack([z1 * resid[:, None], -z1], axis=1)

    return PolynomialInA(coeffs)


# ---------- the regularised moment ----------

@dataclass
class NonlinRegResult:
    values: np.ndarray
    method: str
    warnings: list[str] = field(default_factory=list)


def default_a_grid(center: float = 0.0, scale: float = 1.0, nodes: int = A_GRID_NODES) -> QuadratureRule:
    """Gauss–Legendre on center ± 8·scale."""
    return gauss_legendre(nodes, center - A_GRID_HALF_WIDTH * scale, center + A_GRID_HALF_WIDTH * scale)


def _exact(theta: NonlinRegTheta, psi: PolynomialInA, y0, y1, y2, x1, x2, kernel) -> np.ndarray:
    y1 = np.atleast_1d(np.asarray(y1, dtype=float))
    c, s = theta.m_beta.affine(y1, np.asarray(x2, dtype=float).reshape(y1.size, -1))
    b = np.asarray(psi.coefficients(y0, y1, x1), dtype=float)
    if b.ndim == 2:
        b = b[:, :, None]
    degree = b.shape[1] - 1
    weights = inverse_heat_weights(theta.lam, theta.sigma2, kernel, degree // 2)
    w = (np.atleast_1d(y2) - c) / s

    out = np.zeros((b.shape[0], b.shape[2]))
    for k, wk in enumerate(weights):
        n_der = 2 * k
        # g^{(2k)}(y₂) for g(τ) = ψ((τ − c)/s)
        deriv = np.zeros_like(out)
        for j in range(n_der, degree + 1):
            falling = factorial(j) / factorial(j - n_der)
            deriv += (falling * np.power(w, j - n_der))[:, None] * b[:, j, :]
        out += wk * deriv / np.power(s, n_der)[:, None]
    return out


def _quadrature(theta: NonlinRegTheta, psi: Callable, y0, y1, y2, x1, x2, kernel,
                a_grid: QuadratureRule) -> tuple[np.ndarray, list[str]]:
    a = a_grid.nodes
    y1c = np.atleast_1d(np.asarray(y1, dtype=float))[:, None]
    x2c = np.asarray(x2, dtype=float).reshape(y1c.shape[0], 1, -1)
    m = theta.m_beta(y1c, x2c, a[None, :])
    dm = theta.m_beta.da(y1c, x2c, a[None, :]) if hasattr(theta.m_beta, "da") else _fd_da(theta.m_beta, y1c, x2c, a)
    if np.any(dm <= 0):
        raise DomainError("m_beta must be strictly increasing in a")

    k = outcome_kernel(m - np.atleast_1d(y2)[:, None], theta.lam, theta.sigma2, kernel)
    vals = np.asarray(psi(y0, y1, x1, a), dtype=float)
    if vals.ndim == 2:
        vals = vals[:, :, None]
    integrand = vals * (dm * k)[:, :, None]
    weighted = integrand * a_grid.weights[None, :, None]

    warnings: list[str] = []
    edge = max(1, a.size // 40)
    total = np.abs(weighted).sum(axis=1)
    outer = np.abs(weighted[:, :edge]).sum(axis=1) + np.abs(weighted[:, -edge:]).sum(axis=1)
    share = np.max(np.divide(outer, total, out=np.zeros_like(outer), where=total > 0))
    if share > BOUNDARY_MASS_TOL:
        warnings.append(f"a-grid too narrow: boundary mass share {share:.3g} exceeds {BOUNDARY_MASS_TOL:g}")
    return weighted.sum(axis=1), warnings


def _fd_da(m_beta, y1c, x2c, a) -> np.ndarray:
    h = 1e-5 * (1.0 + np.abs(a))
    return (m_beta(y1c, x2c, (a + h)[None, :]) - m_beta(y1c, x2c, (a - h)[None, :])) / (2.0 * h)[None, :]


def nonlin_reg_moment(
    theta: NonlinRegTheta,
    psi: Callable,
    y0, y1, y2, x1, x2,
    a_grid: Optional[QuadratureRule] = None,
    kernel: FourierKernel = SINC,
    exact: Optional[bool] = None,
) -> NonlinRegResult:
    """
    φ^λ at each unit, (n, d). A polynomial ψ with an affine index uses the closed
    form Σ_k (−1)^k f_k·g^{(2k)}(y₂); anything else integrates over a_grid.
    """
    can_exact = isinstance(psi, PolynomialInA) and hasattr(theta.m_beta, "affine")
    use_exact = can_exact if exact is None else exact
    if use_exact and not can_exact:
        raise DomainError("the closed form needs a polynomial psi and an affine index")

    if use_exact:
        return NonlinRegResult(_exact(theta, psi, y0, y1, y2, x1, x2, kernel), "closed-form")

    values, warnings = _quadrature(theta, psi, y0, y1, y2, x1, x2, kernel, a_grid or default_a_grid())
    for w in warnings:
        get_app_logger("nonlinreg").warning(f"⚠️ {w}", extra={"lam": theta.lam, "kernel": kernel.name})
    return NonlinRegResult(values, "quadrature", warnings)

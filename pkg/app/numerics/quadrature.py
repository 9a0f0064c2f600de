# app/numerics/quadrature.py
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from app.core.errors import DomainError, EvaluationError


@dataclass(frozen=True)
class QuadratureRule:
    """
    Nodes and weights in the original variable.

    For half-line rules the change of variables p = e^u is already folded in:
    `nodes` are values of p and `weights` include the e^u Jacobian, so
    integrate(f, rule) is a plain weighted sum either way.
    """

    nodes: np.ndarray
    weights: np.ndarray
    domain: str
    interval: tuple[float, float]
    # constructor arguments, used by refined()
    build: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape:
            raise DomainError("nodes and weights must have the same shape")
        if np.any(self.weights <= 0):
            raise DomainError("quadrature weights must be positive")

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def refined(self) -> "QuadratureRule":
        """Same domain with twice the nodes per panel."""
        n, *rest = self.build
        if self.domain == "bounded":
            return gauss_legendre(2 * n, *rest)
        return half_line(2 * n, *rest)


def gauss_legendre(n: int, lo: float = -1.0, hi: float = 1.0) -> QuadratureRule:
    """n-point Gauss–Legendre on [lo, hi]; exact up to degree 2n−1."""
    if n < 1 or not hi > lo:
        raise DomainError("gauss_legendre needs n >= 1 and hi > lo", n=n, lo=lo, hi=hi)
    x, w = leggauss(n)
    half = 0.5 * (hi - lo)
    return QuadratureRule(lo + half * (x + 1.0), half * w, "bounded", (lo, hi), (n, lo, hi))


def composite_gauss_legendre(
    n_per_panel: int, lo: float, hi: float, panel_width: float
) -> tuple[np.ndarray, np.ndarray]:
    panels = max(1, int(np.ceil((hi - lo) / panel_width)))
    edges = np.linspace(lo, hi, panels + 1)
    x, w = leggauss(n_per_panel)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def half_line(
    n_per_panel: int = 16,
    log_scale: float = 0.0,
    lower: float = -45.0,
    upper: float = 6.0,
    panel_width: float = 0.5,
) -> QuadratureRule:
    """
    Rule for ∫₀^∞ f(p) dp through p = e^u, u in [log_scale+lower, log_scale+upper].

    `log_scale` is the log of the integrand's typical magnitude; the window then
    covers p^c endpoint behaviour at 0 and exponential tails.
    """
    if not upper > lower:
        raise DomainError("half_line needs upper > lower", lower=lower, upper=upper)
    u, w = composite_gauss_legendre(n_per_panel, log_scale + lower, log_scale + upper, panel_width)
    p = np.exp(u)
    return QuadratureRule(
        p, w * p, "half-line", (0.0, np.inf),
        (n_per_panel, log_scale, lower, upper, panel_width),
    )


def integrate(f: Callable[[np.ndarray], np.ndarray], rule: QuadratureRule):
    """Weighted node sum; vector-valued f returns shape (n_nodes, d)."""
    vals = np.asarray(f(rule.nodes), dtype=float)
    finite = np.isfinite(vals)
    if not np.all(finite):
        bad = np.argwhere(~finite)[0]
        raise EvaluationError("integrand is not finite", location={"node": float(rule.nodes[bad[0]])})
    out = np.tensordot(rule.weights, vals, axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out

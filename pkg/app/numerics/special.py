# app/numerics/special.py
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_jacobi

from app.core.errors import DomainError, EvaluationError

_BLOCK = 8192


def log_gamma(x):
    """ln Γ(x) for x > 0; scalars in, scalars out."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise DomainError("log_gamma requires finite x > 0", x=np.ravel(arr)[:5].tolist())
    out = gammaln(arr)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=64)
def _jacobi_rule(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    return roots_jacobi(n, alpha, beta)


def _euler_integral(a: float, b: float, c: float, w: np.ndarray, n: int) -> np.ndarray:
    # ∫₀¹ t^{b−1}(1−t)^{c−b−1}(1−wt)^{a−c} dt with t = (1+x)/2
    x, wts = _jacobi_rule(n, c - b - 1.0, b - 1.0)
    t = 0.5 * (1.0 + x)
    vals = np.power(1.0 - np.multiply.outer(w, t), a - c)
    return 2.0 ** (1.0 - c) * (vals @ wts)


def _converged_integral(a, b, c, w, rtol, max_nodes) -> np.ndarray:
    n = 16
    prev = _euler_integral(a, b, c, w, n)
    while True:
        n *= 2
        cur = _euler_integral(a, b, c, w, n)
        scale = np.maximum(np.abs(cur), np.finfo(float).tiny)
        if np.all(np.abs(cur - prev) <= rtol * scale):
            return cur
        if n >= max_nodes:
            raise EvaluationError(
                "hyp2f1 quadrature did not converge",
                location={"a": a, "b": b, "c": c, "w_max": float(np.max(w))},
                nodes=n,
            )
        prev = cur


def hyp2f1(a: float, b: float, c: float, z, rtol: float = 1e-13, max_nodes: int = 4096):
    """
    Gauss hypergeometric ₂F₁(a, b; c; z) on z ≤ 0, c ≥ b > 0.

    The Euler integral below needs c > b. The edge c = b is accepted as well and
    returns (1 − z)^{−a} directly.

    Pfaff maps z to w = z/(z−1) in [0, 1), after which the Euler integral has a
    bounded smooth factor (1−wt)^{a−c}; the endpoint powers are absorbed by
    Gauss–Jacobi weights. Nodes double until the relative change is below rtol.
    """
    zz = np.asarray(z, dtype=float)
    if not (b > 0 and c >= b and np.isfinite(a)):
        raise DomainError("hyp2f1 requires c >= b > 0", a=a, b=b, c=c)
    if np.any(~np.isfinite(zz)) or np.any(zz > 0):
        raise DomainError("hyp2f1 requires finite z <= 0", a=a, b=b, c=c)

    if c == b:
        out = np.power(1.0 - zz, -a)
        return float(out) if out.ndim == 0 else out

    flat = zz.ravel()
    w = flat / (flat - 1.0)
    integral = np.empty_like(flat)
    for start in range(0, flat.size, _BLOCK):
        block = slice(start, start + _BLOCK)
        integral[block] = _converged_integral(a, b, c, w[block], rtol, max_nodes)

    log_norm = gammaln(c) - gammaln(b) - gammaln(c - b)
    out = (np.power(1.0 - flat, -b) * np.exp(log_norm) * integral).reshape(zz.shape)
    return float(out) if out.ndim == 0 else out

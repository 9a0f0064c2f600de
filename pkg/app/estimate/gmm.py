# app/estimate/gmm.py
"""Just-identified GMM: damped Newton on the sample mean moment and the sandwich variance."""
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from app.core.config import settings
from app.core.errors import DomainError, EvaluationError, IllConditionedError
from app.core.logging_utils import get_app_logger
from app.models import Theta
from app.moments.base import MomentFn
from app.numerics.linalg import invert, solve_linear
from app.panels.batch import PanelBatch, as_batch
from app.utils.parallel import chunk_bounds, map_chunks


# ---------- parameter codec ----------

def to_vector(theta) -> np.ndarray:
    if hasattr(theta, "as_vector"):
        return np.asarray(theta.as_vector(), dtype=float)
    return np.atleast_1d(np.asarray(theta, dtype=float)).copy()


def from_vector(template, vec: np.ndarray):
    """Rebuilds a parameter of the same kind as `template` (Theta or plain array)."""
    if isinstance(template, Theta):
        return Theta.from_vector(vec)
    if hasattr(template, "as_vector"):
        raise DomainError("only Theta and arrays are supported as GMM parameters", kind=type(template).__name__)
    return np.asarray(vec, dtype=float).copy()


# ---------- sample moments ----------

def moment_values(moment: MomentFn, theta, panel, workers: Optional[int] = None) -> np.ndarray:
    """φ at every unit, (n, dim); chunks follow CHUNK_SIZE so results do not depend on workers."""
    batch: PanelBatch = as_batch(panel)
    chunks = chunk_bounds(batch.n)
    if len(chunks) == 1:
        return moment(theta, batch)
    parts = map_chunks(lambda c: moment(theta, batch.take(slice(c[1], c[2]))), chunks, workers)
    return np.vstack(parts)


def mean_moment(moment: MomentFn, theta, panel, workers: Optional[int] = None) -> np.ndarray:
    return moment_values(moment, theta, panel, workers).mean(axis=0)


def mean_jacobian(moment: MomentFn, theta, panel, workers: Optional[int] = None) -> np.ndarray:
    """
    E[∂φ/∂θ] by central differences with step FD_REL_STEP·(1+|θ_k|), on the same
    panel for every evaluation.
    """
    vec = to_vector(theta)
    cols = []
    for k in range(vec.size):
        h = settings.FD_REL_STEP * (1.0 + abs(vec[k]))
        up, down = vec.copy(), vec.copy()
        up[k] += h
        down[k] -= h
        g_up = mean_moment(moment, from_vector(theta, up), panel, workers)
        g_down = mean_moment(moment, from_vector(theta, down), panel, workers)
        cols.append((g_up - g_down) / (2.0 * h))
    return np.column_stack(cols)


@dataclass
class GmmResult:
    """
    avar is per observation (H⁻¹VH⁻ᵀ); se = sqrt(diag(avar)/n) is the sampling
    standard error of theta_hat.
    """

    theta_hat: Any
    H: np.ndarray
    V: np.ndarray
    avar: np.ndarray
    se: np.ndarray
    n: int
    converged: bool
    iterations: int
    moment_norm: float
    warnings: list[str] = field(default_factory=list)

    @property
    def theta_vector(self) -> np.ndarray:
        return to_vector(self.theta_hat)

    def to_dict(self) -> dict:
        return {
            "theta_hat": self.theta_vector.tolist(),
            "se": self.se.tolist(),
            "avar": self.avar.tolist(),
            "H": self.H.tolist(),
            "V": self.V.tolist(),
            "n": self.n,
            "converged": self.converged,
            "iterations": self.iterations,
            "moment_norm": self.moment_norm,
            "warnings": list(self.warnings),
        }


def sandwich(H: np.ndarray, V: np.ndarray) -> np.ndarray:
    h_inv = invert(H)
    return h_inv @ V @ h_inv.T


def asymptotic_se(moment: MomentFn, panels, theta, workers: Optional[int] = None) -> GmmResult:
    """Variance fields at a given θ: H by central differences, V = mean φφ′."""
    batch = as_batch(panels)
    values = moment_values(moment, theta, batch, workers)
    H = mean_jacobian(moment, theta, batch, workers)
    V = values.T @ values / batch.n
    avar = sandwich(H, V)
    return GmmResult(
        theta_hat=theta, H=H, V=V, avar=avar,
        se=np.sqrt(np.diag(avar) / batch.n), n=batch.n,
        converged=True, iterations=0,
        moment_norm=float(np.linalg.norm(values.mean(axis=0))),
    )


def _try_mean(moment, template, vec, batch, workers) -> Optional[np.ndarray]:
    try:
        return mean_moment(moment, from_vector(template, vec), batch, workers)
    except (DomainError, EvaluationError):
        return None


def gmm_solve(
    moment: MomentFn,
    panels,
    theta_init,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    workers: Optional[int] = None,
) -> GmmResult:
    """
    Solves (1/n)Σφ_θ = 0 by Newton steps θ ← θ − λH⁻¹ḡ, halving λ until ‖ḡ‖
    decreases. A singular Jacobian raises IllConditionedError; running out of
    iterations returns converged=False.
    """
    logger = get_app_logger("gmm")
    tol = settings.NEWTON_TOL if tol is None else tol
    max_iter = settings.NEWTON_MAX_ITER if max_iter is None else max_iter
    batch = as_batch(panels)
    if batch.n == 0:
        raise DomainError("gmm_solve needs at least one panel")

    vec = to_vector(theta_init)
    if moment.dim != vec.size:
        raise DomainError("moment dimension must equal the parameter dimension", dim=moment.dim, params=int(vec.size))

    logger.info(f"🏁 GMM started: moment={moment.name}, n={batch.n}")
    g = mean_moment(moment, theta_init, batch, workers)
    norm = float(np.linalg.norm(g))
    iterations, converged, warnings = 0, norm <= tol, []

    while not converged and iterations < max_iter:
        H = mean_jacobian(moment, from_vector(theta_init, vec), batch, workers)
        step = solve_linear(H, g)
        lam, accepted = 1.0, False
        for _ in range(settings.NEWTON_MAX_HALVINGS + 1):
            cand = vec - lam * step
            g_c = _try_mean(moment, theta_init, cand, batch, workers)
            if g_c is not None and np.linalg.norm(g_c) < norm:
                accepted = True
                break
            lam *= 0.5
        iterations += 1
        if not accepted:
            warnings.append("line search could not reduce the moment norm")
            logger.warning("⚠️ Line search stalled", extra={"iteration": iterations, "moment_norm": norm})
            break
        vec, g = cand, g_c
        norm = float(np.linalg.norm(g))
        converged = norm <= tol
        logger.debug(f"Newton step {iterations}", extra={"moment_norm": norm, "damping": lam})

    theta_hat = from_vector(theta_init, vec)
    try:
        var = asymptotic_se(moment, batch, theta_hat, workers)
    except IllConditionedError:
        logger.exception("❌ Jacobian at the solution is singular")
        raise

    if not converged:
        logger.warning(f"⚠️ GMM did not converge after {iterations} iterations", extra={"moment_norm": norm})
    logger.info(
        f"✔ GMM finished: converged={converged}, iterations={iterations}",
        extra={"theta_hat": vec.tolist(), "moment_norm": norm},
    )
    return GmmResult(
        theta_hat=theta_hat, H=var.H, V=var.V, avar=var.avar, se=var.se, n=batch.n,
        converged=converged, iterations=iterations, moment_norm=norm, warnings=warnings,
    )

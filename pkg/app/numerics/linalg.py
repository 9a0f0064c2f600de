# app/numerics/linalg.py
import numpy as np
import scipy.linalg

from app.core.config import settings
from app.core.errors import IllConditionedError


def null_space(matrix, rel_tol: float = 1e-10) -> np.ndarray:
    """
    Orthonormal basis (columns) of the numerical null space.

    Singular values below rel_tol·σ_max count as zero; a zero matrix returns the
    identity basis.
    """
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    if a.size == 0 or not np.any(a):
        return np.eye(a.shape[1])
    return scipy.linalg.null_space(a, rcond=rel_tol)


def singular_values(matrix) -> np.ndarray:
    return scipy.linalg.svd(np.atleast_2d(np.asarray(matrix, dtype=float)), compute_uv=False)


def condition_number(matrix) -> float:
    s = singular_values(matrix)
    if s.size == 0 or s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def _checked(a: np.ndarray, cond_limit: float | None) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise IllConditionedError("matrix is not square", cond=float("inf"), shape=list(a.shape))
    limit = settings.COND_LIMIT if cond_limit is None else cond_limit
    cond = condition_number(a)
    if not np.isfinite(cond) or cond > limit:
        raise IllConditionedError("matrix is singular or ill-conditioned", cond=cond, limit=limit)
    return a


def solve_linear(a, b, cond_limit: float | None = None) -> np.ndarray:
    a = _checked(a, cond_limit)
    return scipy.linalg.solve(a, np.asarray(b, dtype=float))


def invert(a, cond_limit: float | None = None) -> np.ndarray:
    return scipy.linalg.inv(_checked(a, cond_limit))

# app/fhrcheck/checker.py
"""
Grid verification of the two FHR conditions for a candidate path function φ.

Mean condition: ∫φ·∏_t f(y_t | y_{t−1}, x_t, a) dy^{1:T} equals the target
(zero for scores) at every (a, y₀, x^{1:T}) grid point.
Invariance condition: for s = 2…T the partial integral over y^{s:T} does not
move when x^{s:T} changes with (y₀, y^{1:s−1}, x^{1:s−1}, a) held fixed.

Both are necessary conditions sampled on finite grids, not proofs.
"""
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional

import numpy as np

from app.core.errors import DomainError, EvaluationError
from app.core.logging_utils import get_app_logger
from app.fhrcheck.models import CheckerReport, ParametricModel, PathFn
from app.models import Theta
from app.mph import weibull_lambda
from app.numerics.linalg import null_space, singular_values
from app.numerics.quadrature import composite_gauss_legendre
from app.numerics.special import log_gamma
from app.profiler import StepProfiler
from app.utils.parallel import map_chunks

# log-offset window around each conditional log scale
U_LOWER = -35.0
U_UPPER = 5.0
PANEL_WIDTH = 2.5
PRUNE_REL = 1e-20

Target = Callable[[float], np.ndarray]


def _offsets(T: int, n_per_panel: Optional[int]) -> tuple[np.ndarray, np.ndarray]:
    n = n_per_panel or (10 if T == 2 else 4)
    return composite_gauss_legendre(n, U_LOWER, U_UPPER, PANEL_WIDTH)


def _x_block(x_path, m: int) -> np.ndarray:
    x = np.stack([np.atleast_1d(np.asarray(v, dtype=float)) for v in x_path])
    return np.broadcast_to(x, (m,) + x.shape).copy()


def _extend(model: ParametricModel, theta, a: float, y0: float, ys: np.ndarray, w: np.ndarray,
            x_t, offsets, prune: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Appends one period to every partial path and multiplies in its density weight."""
    period = ys.shape[1] + 1
    y_prev = ys[:, -1] if ys.shape[1] else np.full(ys.shape[0], y0)

    if model.is_discrete:
        support = np.asarray(model.support, dtype=float)
        dens = np.asarray(model.density(theta, support[None, :], y_prev[:, None], x_t, a), dtype=float)
        new_y = np.broadcast_to(support, dens.shape)
        new_w = w[:, None] * dens
    else:
        u, wu = offsets
        ls = np.asarray(model.log_scale(theta, y_prev, x_t, a), dtype=float).reshape(-1)
        new_y = np.exp(ls[:, None] + u[None, :])
        bad = ~(np.isfinite(new_y) & (new_y > 0))
        if np.any(bad):
            row, node = np.argwhere(bad)[0]
            raise EvaluationError(
                "outcome node outside floating range",
                location={"a": a, "y0": y0, "period": period, "y_prev": float(y_prev[row]), "node": int(node)},
            )
        dens = np.asarray(model.density(theta, new_y, y_prev[:, None], x_t, a), dtype=float)
        new_w = w[:, None] * wu[None, :] * new_y * dens

    bad = ~np.isfinite(new_w)
    if np.any(bad):
        row, node = np.argwhere(bad)[0]
        raise EvaluationError(
            "density weight is not finite",
            location={"a": a, "y0": y0, "period": period, "y_prev": float(y_prev[row]), "node": int(node)},
        )

    q = new_y.shape[1]
    ys = np.column_stack([np.repeat(ys, q, axis=0), new_y.reshape(-1)])
    w = new_w.reshape(-1)
    if prune and w.size:
        keep = w > PRUNE_REL * np.max(w)
        ys, w = ys[keep], w[keep]
    return ys, w


def _path_integral(model, theta, phi: PathFn, a, y0, x_path, prefix, offsets) -> np.ndarray:
    """∫φ·∏_{t > len(prefix)} f dy with y^{1:len(prefix)} fixed at prefix."""
    ys, w = np.asarray(prefix, dtype=float).reshape(1, -1), np.ones(1)
    for t in range(len(prefix), model.T):
        ys, w = _extend(model, theta, a, y0, ys, w, x_path[t], offsets)
    m = ys.shape[0]
    vals = np.asarray(phi(theta, np.full(m, float(y0)), ys, _x_block(x_path, m)), dtype=float).reshape(m, -1)
    finite = np.isfinite(vals)
    if not finite.all():
        row = int(np.argwhere(~finite)[0][0])
        raise EvaluationError(
            "candidate function is not finite on a grid path",
            location={"a": a, "y0": y0, "x": [np.ravel(v).tolist() for v in np.atleast_1d(x_path)],
                      "y": ys[row].tolist()},
        )
    return w @ vals


def _describe(a, y0, x_path, prefix=()) -> dict:
    return {
        "a": float(a),
        "y0": float(y0),
        "x": [np.asarray(v, dtype=float).ravel().tolist() for v in x_path],
        "y_prefix": [float(v) for v in prefix],
    }


# ---------- effect targets ----------

def ash_target(theta: Theta, eval_point=(1.0, 1.0, 1.0)) -> Target:
    """a ↦ λ_α(y)·e^{x′β + γy′}·e^a."""
    y, y_prev, x = eval_point
    level = weibull_lambda(theta.alpha, y) * np.exp(float(theta.index(np.asarray(x, dtype=float))) + theta.gamma * y_prev)
    return lambda a: np.array([level * np.exp(a)])


def asf_target(theta: Theta, eval_point=(1.0, 1.0, 1.0)) -> Target:
    """a ↦ Γ(1+1/α)·e^{−(x′β + γy′ + a)/α}, the mean duration at the assigned (y′, x)."""
    _, y_prev, x = eval_point
    s = 1.0 / theta.alpha
    idx = float(theta.index(np.asarray(x, dtype=float))) + theta.gamma * y_prev
    return lambda a: np.array([np.exp(log_gamma(1.0 + s) - s * (idx + a))])


# ---------- the checker ----------

def check_fhr(
    model: ParametricModel,
    phi: PathFn,
    theta,
    tol: float = 1e-6,
    target: Optional[Target] = None,
    workers: Optional[int] = None,
    n_per_panel: Optional[int] = None,
) -> CheckerReport:
    """Largest mean-condition residual and per-s invariance ranges over the model grids."""
    logger = get_app_logger("fhrcheck")
    profiler = StepProfiler().start()
    model.check_normalization(theta)
    profiler.step("normalization")

    offsets = None if model.is_discrete else _offsets(model.T, n_per_panel)
    x_paths = list(product(model.covariate_grid, repeat=model.T))
    warnings: list[str] = []
    if len(model.covariate_grid) < 2:
        warnings.append("covariate grid has a single value; the invariance condition holds trivially")

    # ---- Step 1: mean condition ----
    cells = list(product(model.a_grid, model.y0_grid, x_paths))
    logger.info(f"🏁 FHR check started: model={model.name}, grid points={len(cells)}")

    def mean_cell(cell):
        a, y0, x_path = cell
        value = _path_integral(model, theta, phi, a, y0, x_path, (), offsets)
        goal = 0.0 if target is None else np.asarray(target(a), dtype=float)
        return float(np.max(np.abs(value - goal)))

    residuals = map_chunks(mean_cell, cells, workers)
    worst = int(np.argmax(residuals))
    cond1 = float(residuals[worst])
    profiler.step("mean_condition", grid_points=len(cells))

    # ---- Step 2: invariance condition, s = 2…T ----
    y_grid = tuple(float(v) for v in model.support) if model.is_discrete else model.y_grid
    if not y_grid:
        raise DomainError("the invariance check needs a y grid", model=model.name)

    variation: dict[int, float] = {}
    locations: dict[int, dict] = {}
    for s in range(2, model.T + 1):
        heads = list(product(model.a_grid, model.y0_grid,
                             product(y_grid, repeat=s - 1),
                             product(model.covariate_grid, repeat=s - 1)))
        tails = list(product(model.covariate_grid, repeat=model.T - s + 1))

        def range_cell(cell, tails=tails):
            a, y0, prefix, x_head = cell
            values = np.stack([
                _path_integral(model, theta, phi, a, y0, x_head + tail, prefix, offsets)
                for tail in tails
            ])
            return float(np.max(values.max(axis=0) - values.min(axis=0)))

        ranges = map_chunks(range_cell, heads, workers) if heads else [0.0]
        at = int(np.argmax(ranges))
        variation[s] = float(ranges[at])
        if heads:
            a, y0, prefix, x_head = heads[at]
            locations[s] = _describe(a, y0, x_head, prefix)
        profiler.step(f"invariance_s{s}", grid_points=len(heads))

    report = CheckerReport(
        model=model.name,
        cond1_residual=cond1,
        cond1_location=_describe(*cells[worst]),
        cond2_variation=variation,
        cond2_location=locations,
        tol=tol,
        cond1_pass=cond1 <= tol,
        cond2_pass=all(v <= tol for v in variation.values()),
        grid_points=len(cells),
        warnings=warnings,
        profile=profiler.result(),
    )
    for w in warnings:
        logger.warning(f"⚠️ {w}", extra={"model": model.name})
    logger.info(
        f"✔ FHR check finished: mean={'pass' if report.cond1_pass else 'fail'}, "
        f"invariance={'pass' if report.cond2_pass else 'fail'}",
        extra={"cond1_residual": cond1, "cond2_variation": variation},
    )
    return report


# ---------- discrete null space ----------

@dataclass
class NullSpaceResult:
    """
    Basis (columns) of the FHR moment functions on a discrete model, indexed by
    `paths` = (y₀, x path, y path) value tuples.
    """

    basis: np.ndarray
    singular_values: np.ndarray
    paths: list[tuple]
    rows: int
    warnings: list[str] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[1])

    def path_values(self, phi: PathFn, theta) -> np.ndarray:
        """φ evaluated on every indexed path, (n_paths, d)."""
        y0 = np.array([p[0] for p in self.paths], dtype=float)
        x = np.array([p[1] for p in self.paths], dtype=float)
        y = np.array([p[2] for p in self.paths], dtype=float)
        out = np.asarray(phi(theta, y0, y, x), dtype=float)
        return out.reshape(len(self.paths), -1)

    def projection_share(self, values: np.ndarray) -> np.ndarray:
        """‖Π v‖/‖v‖ per column of v, Π the projector on the null space."""
        v = np.asarray(values, dtype=float).reshape(len(self.paths), -1)
        projected = self.basis @ (self.basis.T @ v)
        norms = np.linalg.norm(v, axis=0)
        return np.divide(np.linalg.norm(projected, axis=0), norms, out=np.zeros_like(norms), where=norms > 0)


def _path_key(y0, x_path, y_path) -> tuple:
    x = tuple(tuple(np.atleast_1d(np.asarray(v, dtype=float)).tolist()) for v in x_path)
    return float(y0), x, tuple(float(v) for v in y_path)


def discrete_null_space(model: ParametricModel, theta, rel_tol: float = 1e-10) -> NullSpaceResult:
    """
    Null space of the linear constraints both conditions impose on φ over a
    discrete support: one row per (a, y₀, x path) for the mean condition and
    one difference row per alternative x^{s:T} for the invariance condition.
    Rows are scaled to unit norm before the SVD.
    """
    if not model.is_discrete:
        raise DomainError("discrete_null_space needs a discrete outcome model", model=model.name)
    logger = get_app_logger("fhrcheck")
    support = np.asarray(model.support, dtype=float)
    q, T = support.size, model.T

    x_paths = list(product(model.covariate_grid, repeat=T))
    y_paths = list(product(support.tolist(), repeat=T))
    paths = [_path_key(y0, xp, yp) for y0 in model.y0_grid for xp in x_paths for yp in y_paths]
    column = {key: j for j, key in enumerate(paths)}

    warnings: list[str] = []
    needed = 2 * q ** T
    if len(model.a_grid) < needed:
        warnings.append(
            f"a-grid has {len(model.a_grid)} points, fewer than 2*|support|^T = {needed}; "
            "the computed null space may be larger than the true one"
        )

    rows: list[np.ndarray] = []
    for a in model.a_grid:
        for y0 in model.y0_grid:
            for xp in x_paths:
                ys, w = np.empty((1, 0)), np.ones(1)
                for t in range(T):
                    ys, w = _extend(model, theta, a, y0, ys, w, xp[t], None, prune=False)
                row = np.zeros(len(paths))
                row[[column[_path_key(y0, xp, y)] for y in ys]] = w
                rows.append(row)

            for s in range(2, T + 1):
                for prefix in product(support.tolist(), repeat=s - 1):
                    for x_head in product(model.covariate_grid, repeat=s - 1):
                        blocks = []
                        for tail in product(model.covariate_grid, repeat=T - s + 1):
                            xp = x_head + tail
                            ys, w = np.asarray(prefix, dtype=float).reshape(1, -1), np.ones(1)
                            for t in range(s - 1, T):
                                ys, w = _extend(model, theta, a, y0, ys, w, xp[t], None, prune=False)
                            block = np.zeros(len(paths))
                            block[[column[_path_key(y0, xp, y)] for y in ys]] = w
                            blocks.append(block)
                        rows.extend(b - blocks[0] for b in blocks[1:])

    matrix = np.array(rows) if rows else np.zeros((0, len(paths)))
    norms = np.linalg.norm(matrix, axis=1)
    matrix = matrix[norms > 0] / norms[norms > 0, None]
    basis = null_space(matrix, rel_tol) if matrix.size else np.eye(len(paths))
    spectrum = singular_values(matrix) if matrix.size else np.zeros(0)

    for w in warnings:
        logger.warning(f"⚠️ {w}", extra={"model": model.name})
    logger.info(
        f"📊 Discrete null space: dimension={basis.shape[1]}, paths={len(paths)}, rows={matrix.shape[0]}",
        extra={"model": model.name},
    )
    return NullSpaceResult(basis, spectrum, paths, int(matrix.shape[0]), warnings)


def basis_moment(result: NullSpaceResult, j: int) -> PathFn:
    """Path function taking the j-th basis vector's value on each indexed path, 0 elsewhere."""
    if not 0 <= j < result.dimension:
        raise DomainError("basis index out of range", j=j, dimension=result.dimension)
    lookup = {key: float(result.basis[i, j]) for i, key in enumerate(result.paths)}

    def phi(theta, y0, y, x):
        y0 = np.asarray(y0, dtype=float)
        out = np.array([
            lookup.get(_path_key(y0[i], x[i], y[i]), 0.0) for i in range(y0.size)
        ])
        return out[:, None]

    return phi


def two_period_phi(fn: Callable) -> PathFn:
    """Adapts fn(theta, y0, y1, y2, x1, x2) to the checker's path form."""

    def phi(theta, y0, y, x):
        return fn(theta, y0, y[:, 0], y[:, 1], x[:, 0, :], x[:, 1, :])

    return phi

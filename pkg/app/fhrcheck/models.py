# app/fhrcheck/models.py
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np
from pydantic import BaseModel
from scipy.special import expit
from scipy.stats import poisson

from app.core.errors import DomainError
from app.models import Theta
from app.mph import Hazard, WeibullHazard, mph_density
from app.numerics.quadrature import gauss_legendre, half_line, integrate
from app.panels.batch import PanelBatch

Density = Callable[[Any, np.ndarray, np.ndarray, Any, float], np.ndarray]
LogScale = Callable[[Any, np.ndarray, Any, float], np.ndarray]
# φ(theta, y0 (N,), y (N, T), x (N, T, k)) -> (N, d)
PathFn = Callable[[Any, np.ndarray, np.ndarray, np.ndarray], np.ndarray]

NORMALIZATION_TOL = 1e-8


class OutcomeKind:
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


def default_a_grid(nodes: int = 12, lo: float = -3.0, hi: float = 3.0) -> tuple[float, ...]:
    return tuple(float(a) for a in gauss_legendre(nodes, lo, hi).nodes)


@dataclass(frozen=True)
class ParametricModel:
    """
    f(y_t | y_{t−1}, x_t, a; θ) with the grids the checker sweeps.

    Continuous outcomes are integrated on a log-scale half-line rule centred at
    `log_scale(θ, y_prev, x_t, a)`, the log of a typical outcome. Discrete
    outcomes sum over `support`.
    """

    name: str
    density: Density
    outcome_kind: str
    covariate_grid: tuple
    a_grid: tuple[float, ...]
    y0_grid: tuple[float, ...]
    T: int = 2
    support: Optional[np.ndarray] = None
    log_scale: Optional[LogScale] = None
    y_grid: tuple[float, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.covariate_grid and self.a_grid and self.y0_grid):
            raise DomainError("model grids must be nonempty", model=self.name)
        if self.outcome_kind == OutcomeKind.DISCRETE and self.support is None:
            raise DomainError("discrete models need a support", model=self.name)
        if self.outcome_kind == OutcomeKind.CONTINUOUS and self.log_scale is None:
            raise DomainError("continuous models need a log_scale hint", model=self.name)

    @property
    def is_discrete(self) -> bool:
        return self.outcome_kind == OutcomeKind.DISCRETE

    def x_array(self, value) -> np.ndarray:
        return np.atleast_1d(np.asarray(value, dtype=float))

    def check_normalization(self, theta) -> float:
        """Largest |∫f − 1| over the grids; above 1e-8 is a DomainError."""
        worst = 0.0
        prev = self.support if self.is_discrete else np.asarray(self.y_grid or self.y0_grid, dtype=float)
        for a in self.a_grid:
            for x in self.covariate_grid:
                for y_prev in np.unique(np.concatenate([np.asarray(self.y0_grid, float), np.asarray(prev, float)])):
                    if self.is_discrete:
                        mass = float(np.sum(self.density(theta, self.support, y_prev, x, a)))
                    else:
                        rule = half_line(16, float(self.log_scale(theta, np.asarray(y_prev), x, a)), -35.0, 5.0, 1.0)
                        mass = integrate(lambda y: self.density(theta, y, y_prev, x, a), rule)
                    worst = max(worst, abs(mass - 1.0))
        if worst > NORMALIZATION_TOL:
            raise DomainError("density does not normalise to 1", model=self.name, gap=worst)
        return worst


def mph_model(
    a_grid: Sequence[float] | None = None,
    covariate_grid: Sequence = (0.0, 1.0),
    y0_grid: Sequence[float] = (0.5, 1.5),
    y_grid: Sequence[float] = (0.3, 1.0, 2.5),
    T: int = 2,
    hazard: Optional[Hazard] = None,
) -> ParametricModel:
    """
    Weibull MPH density with θ = Theta. The default a-grid is 12 Gauss–Legendre
    nodes on [−1, 1] rather than [−3, 3]. With γ > 0 and a near −3, tail nodes of
    the first period give Y₁ in the thousands, and the second-period outcome
    scale e^{−γY₁/α} underflows; the checker then stops with an EvaluationError
    naming a and the period. Reaching the wider grid needs path weights carried
    as log-densities and pruned before each extension.
    """

    def density(theta: Theta, y, y_prev, x, a):
        return mph_density(theta, y, y_prev, x, a, hazard)

    def log_scale(theta: Theta, y_prev, x, a):
        # Λ(y)·e^{γy′ + x′β + a} is of order one at this y
        lin = theta.gamma * np.asarray(y_prev, dtype=float) + theta.index(x)
        h = hazard or WeibullHazard(theta.alpha)
        return np.log(np.asarray(h.Lambda_inv(np.exp(-lin - a)), dtype=float))

    return ParametricModel(
        name="mph", density=density, outcome_kind=OutcomeKind.CONTINUOUS,
        covariate_grid=tuple(covariate_grid), a_grid=tuple(a_grid or default_a_grid(12, -1.0, 1.0)),
        y0_grid=tuple(y0_grid), T=T, log_scale=log_scale, y_grid=tuple(y_grid),
    )


def logit_model(
    a_grid: Sequence[float] | None = None,
    covariate_grid: Sequence = (0.0, 1.0),
    y0_grid: Sequence[float] = (0.0,),
    T: int = 2,
) -> ParametricModel:
    """P(Y_t = 1 | ·) = Λ(x_t′β + γy_{t−1} + a), θ = LogitTheta."""

    def density(theta, y, y_prev, x, a):
        p1 = expit(theta.index(np.asarray(x, dtype=float), y_prev) + a)
        y = np.asarray(y, dtype=float)
        return np.where(y > 0.5, p1, 1.0 - p1)

    return ParametricModel(
        name="logit", density=density, outcome_kind=OutcomeKind.DISCRETE,
        covariate_grid=tuple(covariate_grid), a_grid=tuple(a_grid or default_a_grid()),
        y0_grid=tuple(y0_grid), T=T, support=np.array([0.0, 1.0]),
    )


def poisson_model(
    a_grid: Sequence[float] | None = None,
    covariate_grid: Sequence = (0.0, 1.0),
    y0_grid: Sequence[float] = (1.0,),
    support_max: int = 20,
    T: int = 2,
) -> ParametricModel:
    """Poisson(exp(x_t′β + γy_{t−1} + a)) truncated to 0…support_max and renormalised."""
    support = np.arange(support_max + 1, dtype=float)

    def density(theta, y, y_prev, x, a):
        mu = np.exp(theta.index(np.asarray(x, dtype=float), y_prev) + a)
        mu = np.asarray(mu, dtype=float)
        kept = poisson.cdf(support_max, mu)
        return poisson.pmf(np.asarray(y, dtype=float), mu) / kept

    return ParametricModel(
        name="poisson", density=density, outcome_kind=OutcomeKind.DISCRETE,
        covariate_grid=tuple(covariate_grid), a_grid=tuple(a_grid or default_a_grid(12, -8.0, -3.5)),
        y0_grid=tuple(y0_grid), T=T, support=support, meta={"support_max": support_max},
    )


MODELS: dict[str, Callable[..., ParametricModel]] = {
    "mph": mph_model,
    "logit": logit_model,
    "poisson": poisson_model,
}


def batch_phi(moment) -> PathFn:
    """Adapts a panel MomentFn (theta, PanelBatch) to the checker's array form."""

    def phi(theta, y0, y, x):
        return moment(theta, PanelBatch(y0=y0, y=y, x=x))

    return phi


class CheckerReport(BaseModel):
    model: str
    cond1_residual: float
    cond1_location: dict = {}
    cond2_variation: dict[int, float] = {}
    cond2_location: dict[int, dict] = {}
    tol: float
    cond1_pass: bool
    cond2_pass: bool
    grid_points: int
    warnings: list[str] = []
    profile: dict = {}

    @property
    def passed(self) -> bool:
        return self.cond1_pass and self.cond2_pass

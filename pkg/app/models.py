import json
import math
from pathlib import Path
from typing import Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.core.config import settings
from app.core.errors import ConfigurationError, DomainError


class Regime:
    A = "A"
    B = "B"
    CUSTOM = "custom"


class MomentRegime:
    FHR = "fhr"
    STRICT_EXOGENEITY = "strict-exogeneity"


class EffectFlavor:
    EFFICIENT = "efficient"
    WORKING = "working"
    SIMPLE = "simple"


def linear_index(x, coef) -> np.ndarray:
    """
    x′c. With one coefficient, x is read elementwise unless it carries a
    trailing axis of length 1 on a 2-d or larger array.
    """
    x = np.asarray(x, dtype=float)
    c = np.asarray(coef, dtype=float)
    if c.size == 1:
        if x.ndim >= 2 and x.shape[-1] == 1:
            return x[..., 0] * c[0]
        return x * c[0]
    if x.ndim == 0 or x.shape[-1] != c.size:
        raise DomainError("covariate dimension does not match coefficients", k=int(c.size), shape=list(x.shape))
    return x @ c


def _as_tuple(v):
    if v is None:
        return ()
    if isinstance(v, (int, float)):
        return (float(v),)
    return tuple(float(b) for b in v)


class Theta(BaseModel):
    """θ = (α, β′, γ)′ of the Weibull MPH hazard. Vector order is [α, β..., γ]."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(gt=0)
    beta: tuple[float, ...] = (0.0,)
    gamma: float = 0.0

    @field_validator("beta", mode="before")
    @classmethod
    def _beta_tuple(cls, v):
        return _as_tuple(v)

    @field_validator("alpha", "gamma", "beta")
    @classmethod
    def _finite(cls, v):
        vals = v if isinstance(v, tuple) else (v,)
        if not all(math.isfinite(x) for x in vals):
            raise ValueError("must be finite")
        return v

    @property
    def k(self) -> int:
        return len(self.beta)

    @property
    def dim(self) -> int:
        return self.k + 2

    def as_vector(self) -> np.ndarray:
        return np.array([self.alpha, *self.beta, self.gamma], dtype=float)

    @classmethod
    def from_vector(cls, vec) -> "Theta":
        vec = np.asarray(vec, dtype=float).ravel()
        if vec.size < 3:
            raise DomainError("theta vector needs at least 3 entries", size=int(vec.size))
        if not vec[0] > 0:
            raise DomainError("alpha must be positive", alpha=float(vec[0]))
        return cls(alpha=float(vec[0]), beta=tuple(vec[1:-1]), gamma=float(vec[-1]))

    def index(self, x) -> np.ndarray:
        """x′β over the trailing axis; scalar covariates are accepted when k = 1."""
        return linear_index(x, self.beta)


class HeterogeneitySpec(BaseModel):
    """V = e^A ~ Gamma(kappa0, lambda0), shape–rate."""

    model_config = ConfigDict(frozen=True)

    kappa0: float = Field(default=5.0, gt=0)
    lambda0: float = Field(default=5.0, gt=0)

    @property
    def mean(self) -> float:
        return self.kappa0 / self.lambda0


class WorkingModel(BaseModel):
    """Researcher-chosen g̃ (Bernoulli p for X₂) with a vague Gamma prior π̃(v) = 1/v."""

    model_config = ConfigDict(frozen=True)

    p: float = Field(default=0.5, ge=0, le=1)
    vague_prior: bool = True

    @classmethod
    def from_panel(cls, batch) -> "WorkingModel":
        """p = sample frequency of X₂ = 1."""
        return cls(p=float(np.mean(batch.x[:, 1, 0])))


class ExperimentPosterior(BaseModel):
    """Gamma(T+κ₀, P̄+λ₀) posterior of V and the experiment whose X₂ law is used."""

    model_config = ConfigDict(frozen=True)

    kappa0: float = Field(default=5.0, gt=0)
    lambda0: float = Field(default=5.0, gt=0)
    regime: Literal["A", "B"] = Regime.B

    @classmethod
    def from_het(cls, het: HeterogeneitySpec, regime: str) -> "ExperimentPosterior":
        return cls(kappa0=het.kappa0, lambda0=het.lambda0, regime=regime)


TauFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class DgpConfig(BaseModel):
    """
    Generic MPH design. X₁ ~ Bernoulli(x1_prob); for t ≥ 2 the covariate is
    Bernoulli(1 − exp(−τ·V)) with τ from the feedback regime.

    A custom `tau` receives (y0, y_hist, x_hist) with the history observed before
    period t: y_hist = (Y₁…Y_{t−1}), x_hist = (X₁…X_{t−1}), both shaped (n, t−1).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    T: int = Field(default=2, ge=2)
    theta0: Theta
    y0_rate: float = Field(default=1.5, gt=0)
    x1_prob: float = Field(default=0.5, ge=0, le=1)
    het: HeterogeneitySpec = HeterogeneitySpec()
    feedback: Literal["A", "B", "custom"] = Regime.B
    tau: Optional[TauFn] = None

    @model_validator(mode="after")
    def _check_regime(self):
        if self.feedback in (Regime.A, Regime.B) and self.T != 2:
            raise ValueError(f"experiment {self.feedback} is defined for T = 2 only")
        if self.feedback == Regime.CUSTOM and self.tau is None:
            raise ValueError("custom feedback needs a tau function")
        if self.theta0.k != 1:
            raise ValueError("simulated designs use one binary covariate")
        return self


class MihTheta(BaseModel):
    """Mixed interactive hazards parameter; δ scales the heterogeneity exponent."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(gt=0)
    beta: tuple[float, ...] = (0.0,)
    gamma: float = 0.0
    delta: tuple[float, ...] = (0.0,)

    @field_validator("beta", "delta", mode="before")
    @classmethod
    def _tuples(cls, v):
        return _as_tuple(v)

    @property
    def base(self) -> Theta:
        return Theta(alpha=self.alpha, beta=self.beta, gamma=self.gamma)

    def exponent(self, x) -> np.ndarray:
        """1 + x′δ; must be positive on the covariate support."""
        out = 1.0 + linear_index(x, self.delta)
        if np.any(out <= 0):
            raise DomainError("1 + x'delta must be positive", min_value=float(np.min(out)))
        return out


class IndexTheta(BaseModel):
    """(β, γ) acting on z_t = (x_t′, y_{t−1})′ in count and binary models."""

    model_config = ConfigDict(frozen=True)

    beta: tuple[float, ...] = (0.0,)
    gamma: float = 0.0

    @field_validator("beta", mode="before")
    @classmethod
    def _beta_tuple(cls, v):
        return _as_tuple(v)

    def as_vector(self) -> np.ndarray:
        return np.array([*self.beta, self.gamma], dtype=float)

    def index(self, x, y_prev) -> np.ndarray:
        return linear_index(x, self.beta) + self.gamma * np.asarray(y_prev, dtype=float)


class PoissonTheta(IndexTheta):
    pass


class LogitTheta(IndexTheta):
    pass


class NonlinRegTheta(BaseModel):
    """
    Y_t = m_β(Y_{t−1}, X_t, A) + ε_t with ε_t ~ N(0, sigma2).

    `m_beta` must be strictly increasing in a. Objects exposing `affine(y_prev, x)`
    returning (intercept, slope) unlock the closed-form regularised inverse.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    m_beta: Callable
    sigma2: float = Field(gt=0)
    lam: float = Field(gt=0)


class RunConfig(BaseModel):
    """Resolved parameters of one CLI run. Unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    experiment: Literal["A", "B", "custom"] = Regime.B
    n: int = Field(default=settings.DEFAULT_N, ge=1)
    seed: int = Field(default=settings.DEFAULT_SEED, ge=0)
    T: int = Field(default=2, ge=2)
    theta0: dict[str, float | list[float]] = {}
    moment: str = "simple"
    p: Optional[float] = Field(default=None, ge=0, le=1)
    out: Optional[str] = None
    input: Optional[str] = None
    threads: Optional[int] = Field(default=None, ge=1)
    with_latent: bool = False
    model: str = "mph"
    phi: str = "ab"
    eval_point: tuple[float, float, float] = (1.0, 1.0, 1.0)
    flavor: Literal["efficient", "working", "simple"] = EffectFlavor.EFFICIENT

    @field_validator("theta0")
    @classmethod
    def _theta_keys(cls, v):
        unknown = set(v) - {"alpha", "beta", "gamma"}
        if unknown:
            raise ValueError(f"unknown theta0 keys: {sorted(unknown)}")
        return v

    @classmethod
    def load(cls, path: Optional[str] = None, **overrides) -> "RunConfig":
        """File values first, then non-None overrides (CLI flags)."""
        data: dict = {}
        if path:
            try:
                data = json.loads(Path(path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigurationError(f"cannot read config file: {e}", path=path) from e
            if not isinstance(data, dict):
                raise ConfigurationError("config file must hold a JSON object", path=path)
        data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**data)
        except ValidationError as e:
            raise ConfigurationError("invalid run configuration", errors=e.errors(include_url=False, include_context=False)) from e

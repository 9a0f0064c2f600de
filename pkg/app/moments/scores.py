# app/moments/scores.py
"""
Closed-form scores for T = 2 and one binary covariate.

All three families share one assembly: with pev standing for P̄·E[V | ·]
(the posterior mean of the heterogeneity scaled by P̄), the γ score is
Y₁ − α/(1+α)·C₂ − (Y₀(P̃−½) + Y₁(1−P̃) − d·C₂)·pev, the α score combines the
log-Helmert terms with the β and γ scores, and only the β score and pev differ
between the efficient, strict-exogeneity and locally efficient variants.
"""
from dataclasses import dataclass

import numpy as np

from app.core.errors import ConfigurationError
from app.models import ExperimentPosterior, Regime, Theta, WorkingModel
from app.moments.mph_moments import log_parts, require_two_periods
from app.mph import integrated_spells
from app.numerics.special import hyp2f1
from app.panels.batch import PanelBatch, as_batch


@dataclass(frozen=True)
class ScoreInputs:
    """Per-unit state entering the closed forms; arrays of shape (n,)."""

    y0: np.ndarray
    x1: np.ndarray
    y1: np.ndarray
    x2: np.ndarray
    ptilde: np.ndarray
    pbar: np.ndarray

    @classmethod
    def from_panel(cls, theta: Theta, panel) -> "ScoreInputs":
        batch: PanelBatch = as_batch(panel)
        require_two_periods(batch, "closed-form scores")
        if batch.k != 1 or theta.k != 1:
            raise ConfigurationError("closed-form scores need one covariate", k=batch.k)
        spells = integrated_spells(theta, batch)
        return cls(
            y0=batch.y0, x1=batch.x[:, 0, 0], y1=batch.y[:, 0], x2=batch.x[:, 1, 0],
            ptilde=spells.ptilde[:, 0], pbar=spells.pbar,
        )

    @classmethod
    def of(cls, **values) -> "ScoreInputs":
        """Inputs from scalars or arrays; x2 defaults to 0."""
        values.setdefault("x2", 0.0)
        arrays = {k: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in values.items()}
        return cls(**arrays)


@dataclass(frozen=True)
class CondExpectations:
    """
    Posterior expectations of the feedback terms:
    e_x2_pt = E[X₂ | Y₀,X₁,P̃,P̄], e_x2 = E[X₂ | Y₀,X₁,P̄],
    e_x2v_pt = E[X₂V | Y₀,X₁,P̃,P̄], e_x2_1mp_v = E[X₂(1−P̃)V | Y₀,X₁,P̄],
    e_v = E[V | Y₀,X₁,P̄].
    """

    e_x2_pt: np.ndarray
    e_x2: np.ndarray
    e_x2v_pt: np.ndarray
    e_x2_1mp_v: np.ndarray
    e_v: np.ndarray


def _posterior(post: ExperimentPosterior, pbar: np.ndarray, T: int = 2) -> tuple[float, np.ndarray]:
    return T + post.kappa0, post.lambda0 + pbar


def c2_factor(theta: Theta, y0, x1, pbar) -> np.ndarray:
    """C₂ = exp(−X₁β/α − γY₀/α)·P̄^{1/α}, so that Y₁ = C₂·P̃^{1/α}."""
    a = theta.alpha
    return np.exp(-(x1 * theta.beta[0] + theta.gamma * y0) / a) * np.power(pbar, 1.0 / a)


def _laplace_terms(K: float, R: np.ndarray, tau: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(E[X₂], E[X₂V]) when V ~ Gamma(K, R) and P(X₂=1 | V) = 1 − e^{−τV}."""
    log_ratio = -np.log1p(tau / R)
    e_x2 = -np.expm1(K * log_ratio)
    e_x2v = K / R - K / (R + tau) * np.exp(K * log_ratio)
    return e_x2, e_x2v


def conditional_expectations_A(theta: Theta, y0, x1, ptilde1, pbar, post: ExperimentPosterior) -> CondExpectations:
    """Without feedback τ = Y₀ + X₁ does not involve P̃, and E[X₂(1−P̃)V] = ½E[X₂V]."""
    y0, x1, pbar = (np.asarray(v, dtype=float) for v in (y0, x1, pbar))
    K, R = _posterior(post, pbar)
    e_x2, e_x2v = _laplace_terms(K, R, y0 + x1)
    return CondExpectations(
        e_x2_pt=e_x2, e_x2=e_x2, e_x2v_pt=e_x2v, e_x2_1mp_v=0.5 * e_x2v, e_v=K / R,
    )


def conditional_expectations_B(theta: Theta, y0, x1, ptilde1, pbar, post: ExperimentPosterior) -> CondExpectations:
    """
    Feedback through Y₁ = C₂·P̃^{1/α}: with C₁ = λ₀ + P̄ + Y₀ + X₁ and z = −C₂/C₁,
    E[X₂ | Y₀,X₁,P̄] = 1 − R^K·C₁^{−K}·₂F₁(K, α; 1+α; z) and
    E[X₂(1−P̃)V | ·] = ½K/R − K·R^K·C₁^{−(K+1)}·(₂F₁(K+1, α; 1+α; z) − ½·₂F₁(K+1, 2α; 1+2α; z)).
    """
    y0, x1, ptilde1, pbar = (np.asarray(v, dtype=float) for v in (y0, x1, ptilde1, pbar))
    a = theta.alpha
    K, R = _posterior(post, pbar)
    c2 = c2_factor(theta, y0, x1, pbar)
    y1 = c2 * np.power(ptilde1, 1.0 / a)
    e_x2_pt, e_x2v_pt = _laplace_terms(K, R, y0 + x1 + y1)

    c1 = R + y0 + x1
    z = -c2 / c1
    log_rc = np.log(R) - np.log(c1)
    e_x2 = 1.0 - np.exp(K * log_rc) * hyp2f1(K, a, 1.0 + a, z)
    f1 = hyp2f1(K + 1.0, a, 1.0 + a, z)
    f2 = hyp2f1(K + 1.0, 2.0 * a, 1.0 + 2.0 * a, z)
    e_x2_1mp_v = 0.5 * K / R - K / c1 * np.exp(K * log_rc) * (f1 - 0.5 * f2)
    return CondExpectations(
        e_x2_pt=e_x2_pt, e_x2=e_x2, e_x2v_pt=e_x2v_pt, e_x2_1mp_v=e_x2_1mp_v, e_v=K / R,
    )


def conditional_expectations(theta: Theta, s: ScoreInputs, post: ExperimentPosterior) -> CondExpectations:
    fn = conditional_expectations_A if post.regime == Regime.A else conditional_expectations_B
    return fn(theta, s.y0, s.x1, s.ptilde, s.pbar, post)


def strict_exog_posterior_mean(s: ScoreInputs, post: ExperimentPosterior) -> np.ndarray:
    """E[V | Y₀,X₁,X₂,P̄] with the no-feedback law of X₂ (τ = Y₀ + X₁)."""
    K, R = _posterior(post, s.pbar)
    tau = s.y0 + s.x1
    ratio = R / (R + tau)
    q = np.exp(K * np.log(ratio))
    treated = (K / R) * (1.0 - q * ratio) / (-np.expm1(K * np.log(ratio)))
    untreated = K / (R + tau)
    return np.where(s.x2 > 0.5, treated, untreated)


# ---------- assembly ----------

def _gamma_score(theta: Theta, s: ScoreInputs, pev: np.ndarray) -> np.ndarray:
    a = theta.alpha
    c2 = c2_factor(theta, s.y0, s.x1, s.pbar)
    d = a / (1.0 + a) - a / (1.0 + 2.0 * a)
    drift = s.y0 * (s.ptilde - 0.5) + s.y1 * (1.0 - s.ptilde) - d * c2
    return s.y1 - a / (1.0 + a) * c2 - drift * pev


def _alpha_score(theta: Theta, s: ScoreInputs, pev, phi_beta, phi_gamma) -> np.ndarray:
    a = theta.alpha
    log_p, log_1mp = log_parts(s.ptilde)
    entropy = s.ptilde * log_p + (1.0 - s.ptilde) * log_1mp + 0.5
    return (
        (2.0 + log_p + log_1mp) / a
        - entropy * pev / a
        - phi_beta * theta.beta[0] / a
        - phi_gamma * theta.gamma / a
    )


def _assemble(theta: Theta, s: ScoreInputs, pev, phi_beta) -> np.ndarray:
    phi_gamma = _gamma_score(theta, s, pev)
    phi_alpha = _alpha_score(theta, s, pev, phi_beta, phi_gamma)
    return np.column_stack([phi_alpha, phi_beta, phi_gamma])


def feedback_beta_score(s: ScoreInputs, ce: CondExpectations) -> np.ndarray:
    """Efficient β score allowing feedback."""
    centred = s.ptilde - 0.5
    return (
        -s.x1 * centred * s.pbar * ce.e_v
        + (ce.e_x2_pt - ce.e_x2)
        - s.pbar * ((1.0 - s.ptilde) * ce.e_x2v_pt - ce.e_x2_1mp_v)
    )


def no_feedback_beta_score(s: ScoreInputs, ce: CondExpectations) -> np.ndarray:
    """(P̃−½)·P̄·(E[X₂V|·] − X₁E[V|·]); equals feedback_beta_score when X₂ ignores Y₁."""
    return (s.ptilde - 0.5) * s.pbar * (ce.e_x2v_pt - s.x1 * ce.e_v)


def eff_feedback_from_inputs(theta: Theta, s: ScoreInputs, post: ExperimentPosterior) -> np.ndarray:
    ce = conditional_expectations(theta, s, post)
    pev = s.pbar * ce.e_v
    return _assemble(theta, s, pev, feedback_beta_score(s, ce))


def eff_strict_exog_from_inputs(theta: Theta, s: ScoreInputs, post: ExperimentPosterior) -> np.ndarray:
    pev = s.pbar * strict_exog_posterior_mean(s, post)
    phi_beta = (s.x2 - s.x1) * (s.ptilde - 0.5) * pev
    return _assemble(theta, s, pev, phi_beta)


def loceff_from_inputs(theta: Theta, s: ScoreInputs, wm: WorkingModel, T: int = 2) -> np.ndarray:
    """Vague prior: P̄·E[V | ·] = T, so the scores need no posterior."""
    pev = np.full_like(s.pbar, float(T))
    phi_beta = (wm.p - s.x1) * (s.ptilde - 0.5) * T
    return _assemble(theta, s, pev, phi_beta)


# ---------- panel-level entry points ----------

def eff_score_feedback(theta: Theta, panel, post: ExperimentPosterior) -> np.ndarray:
    """Efficient (α, β, γ) score under the experiment named by post.regime."""
    return eff_feedback_from_inputs(theta, ScoreInputs.from_panel(theta, panel), post)


def eff_score_strict_exog(theta: Theta, panel, post: ExperimentPosterior) -> np.ndarray:
    """Efficient score under strict exogeneity; its posterior is the experiment-A one."""
    if post.regime != Regime.A:
        raise ConfigurationError(
            "the strict-exogeneity score is derived for the experiment A posterior",
            regime=post.regime,
        )
    return eff_strict_exog_from_inputs(theta, ScoreInputs.from_panel(theta, panel), post)


def loceff_score(theta: Theta, panel, wm: WorkingModel, T: int = 2) -> np.ndarray:
    s = ScoreInputs.from_panel(theta, panel)
    if T != 2:
        raise ConfigurationError("locally efficient scores are implemented for T = 2", T=T)
    return loceff_from_inputs(theta, s, wm, T)

# app/dgp.py
"""Simulators for the two feedback experiments, a generic MPH design and the MIH design."""
import math
from typing import Optional

import numpy as np

from app.core.config import settings
from app.core.errors import ConfigurationError, DomainError
from app.core.logging_utils import get_app_logger
from app.models import DgpConfig, HeterogeneitySpec, MihTheta, Regime, Theta
from app.mph import invert_rho
from app.numerics.rng import (
    RngStream,
    sample_bernoulli,
    sample_exponential,
    sample_gamma,
)
from app.panels.batch import PanelBatch
from app.utils.parallel import chunk_bounds, map_chunks

EXPERIMENT_THETA0 = Theta(alpha=0.75, beta=(-0.1,), gamma=0.75 * math.log(2.0))

# 1 − exp(−x) is 1 to double precision past this point
TAU_V_CLAMP = 700.0


def experiment_config(
    name: str,
    theta0: Optional[Theta] = None,
    het: Optional[HeterogeneitySpec] = None,
) -> DgpConfig:
    """Experiment A (no feedback) or B (X₂ depends on Y₁), T = 2."""
    if name not in (Regime.A, Regime.B):
        raise DomainError(f"unknown experiment {name!r}", experiment=name)
    return DgpConfig(
        T=2,
        theta0=theta0 or EXPERIMENT_THETA0,
        het=het or HeterogeneitySpec(),
        feedback=name,
    )


def last_period_tau(y0: np.ndarray, y_hist: np.ndarray, x_hist: np.ndarray) -> np.ndarray:
    """τ_t = Y₀ + X_{t−1} + Y_{t−1}; at T = 2 this is Experiment B."""
    return y0 + x_hist[:, -1] + y_hist[:, -1]


def design_config(
    name: str,
    T: int = 2,
    theta0: Optional[Theta] = None,
    het: Optional[HeterogeneitySpec] = None,
) -> DgpConfig:
    """Named experiment (T = 2) or the custom design with last-period feedback for any T."""
    if name != Regime.CUSTOM:
        if T != 2:
            raise ConfigurationError(f"experiment {name} is defined for T = 2 only", experiment=name, T=T)
        return experiment_config(name, theta0, het)
    return DgpConfig(
        T=T,
        theta0=theta0 or EXPERIMENT_THETA0,
        het=het or HeterogeneitySpec(),
        feedback=Regime.CUSTOM,
        tau=last_period_tau,
    )


def _tau(config: DgpConfig, y0: np.ndarray, y_hist: np.ndarray, x_hist: np.ndarray) -> np.ndarray:
    if config.feedback == Regime.A:
        return y0 + x_hist[:, 0]
    if config.feedback == Regime.B:
        return y0 + x_hist[:, 0] + y_hist[:, 0]
    return np.asarray(config.tau(y0, y_hist, x_hist), dtype=float)


def success_prob(tau, v) -> np.ndarray:
    """1 − exp(−τv), clamped to 1 once τv exceeds TAU_V_CLAMP."""
    tv = np.asarray(tau, dtype=float) * np.asarray(v, dtype=float)
    if np.any(tv < 0):
        raise DomainError("tau * v must be nonnegative")
    return np.where(tv > TAU_V_CLAMP, 1.0, -np.expm1(-np.minimum(tv, TAU_V_CLAMP)))


def feedback_prob(config: DgpConfig, y0, x1, y1, v):
    """Success probability of X₂ given (Y₀, X₁, Y₁, V) under the configured regime."""
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    x_hist = np.atleast_1d(np.asarray(x1, dtype=float))[:, None]
    y_hist = np.atleast_1d(np.asarray(y1, dtype=float))[:, None]
    prob = success_prob(_tau(config, y0, y_hist, x_hist), v)
    return float(prob[0]) if np.ndim(v) == 0 and prob.size == 1 else prob


def _simulate_chunk(config: DgpConfig, seed: int, chunk: tuple[int, int, int]) -> PanelBatch:
    idx, start, stop = chunk
    m = stop - start
    gen = RngStream(seed, idx).generator()
    theta = config.theta0

    v = sample_gamma(config.het.kappa0, config.het.lambda0, gen, m)
    y0 = sample_exponential(config.y0_rate, gen, m)
    x = np.empty((m, config.T))
    y = np.empty((m, config.T))

    x[:, 0] = sample_bernoulli(config.x1_prob, gen, m)
    y_prev = y0
    for t in range(config.T):
        if t > 0:
            tau = _tau(config, y0, y[:, :t], x[:, :t])
            x[:, t] = sample_bernoulli(success_prob(tau, v), gen)
        p_t = sample_exponential(v, gen)
        y[:, t] = invert_rho(theta, p_t, y_prev, x[:, t])
        y_prev = y[:, t]
    return PanelBatch(y0=y0, y=y, x=x, v=v)


def simulate_panel(
    config: DgpConfig,
    n: int,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> PanelBatch:
    """
    n units of the configured design with V recorded.

    Chunk i draws from RngStream(seed, i); chunk boundaries depend on chunk_size
    only, so the panel does not depend on the worker count.
    """
    if n < 1:
        raise DomainError("n must be >= 1", n=n)
    seed = settings.DEFAULT_SEED if seed is None else seed
    logger = get_app_logger("dgp")
    chunks = chunk_bounds(n, chunk_size)
    logger.info(
        "🎲 Simulating panel",
        extra={"n": n, "T": config.T, "feedback": config.feedback, "seed": seed, "chunks": len(chunks)},
    )
    parts = map_chunks(lambda c: _simulate_chunk(config, seed, c), chunks, workers)
    batch = PanelBatch.concat(parts)
    logger.info("✔ Panel simulated", extra={"n": batch.n})
    return batch


# ---------- mixed interactive hazards ----------

def _simulate_mih_chunk(theta: MihTheta, het: HeterogeneitySpec, y0_rate: float, x1_prob: float,
                        seed: int, chunk: tuple[int, int, int]) -> PanelBatch:
    idx, start, stop = chunk
    m = stop - start
    gen = RngStream(seed, idx).generator()
    base = theta.base

    v = sample_gamma(het.kappa0, het.lambda0, gen, m)
    y0 = sample_exponential(y0_rate, gen, m)
    x1 = sample_bernoulli(x1_prob, gen, m).astype(float)
    p1 = sample_exponential(np.power(v, theta.exponent(x1)), gen)
    y1 = invert_rho(base, p1, y0, x1)
    x2 = sample_bernoulli(success_prob(y0 + x1 + y1, v), gen).astype(float)
    p2 = sample_exponential(np.power(v, theta.exponent(x2)), gen)
    y2 = invert_rho(base, p2, y1, x2)
    return PanelBatch(y0=y0, y=np.column_stack([y1, y2]), x=np.column_stack([x1, x2]), v=v)


def simulate_mih(
    theta: MihTheta,
    n: int,
    seed: Optional[int] = None,
    het: Optional[HeterogeneitySpec] = None,
    y0_rate: float = 1.5,
    x1_prob: float = 0.5,
    workers: Optional[int] = None,
) -> PanelBatch:
    """
    MIH design with T = 2: P_t | V ~ Exponential(V^{1+x_t′δ}) and X₂ drawn with
    the feedback of experiment B.
    """
    if n < 1:
        raise DomainError("n must be >= 1", n=n)
    seed = settings.DEFAULT_SEED if seed is None else seed
    het = het or HeterogeneitySpec()
    chunks = chunk_bounds(n)
    get_app_logger("dgp").info("🎲 Simulating MIH panel", extra={"n": n, "delta": list(theta.delta), "seed": seed})
    parts = map_chunks(lambda c: _simulate_mih_chunk(theta, het, y0_rate, x1_prob, seed, c), chunks, workers)
    return PanelBatch.concat(parts)

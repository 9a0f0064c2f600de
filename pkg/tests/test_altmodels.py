import math

import numpy as np
import pytest

from app.altmodels import (
    KERNELS,
    LinearIndex,
    PolynomialInA,
    deconv_kernel,
    exact_conditional_mean,
    linear_score_psi,
    mih_moment,
    mih_psi,
    mih_ratio,
    nonlin_reg_moment,
    poisson_cw_moment,
    poisson_score_psi,
    poisson_second_moment,
    poisson_second_psi,
    poisson_taylor_moment,
)
from app.altmodels.nonlinreg import SINC, TRIWEIGHT, default_a_grid, inverse_heat_weights
from app.core.errors import DomainError, UnsupportedInputError
from app.dgp import simulate_mih
from app.models import MihTheta, NonlinRegTheta, PoissonTheta
from app.mph import integrated_spells
from app.panels import PanelBatch


# ---------- Poisson counts ----------

def _poisson_configs(n=10, seed=5):
    gen = np.random.default_rng(seed)
    for _ in range(n):
        theta = PoissonTheta(beta=(gen.uniform(-0.5, 0.5),), gamma=gen.uniform(-0.3, 0.05))
        yield theta, gen.uniform(-1.0, 1.0), float(gen.integers(0, 3)), float(gen.integers(0, 2)), float(gen.integers(0, 2))


@pytest.mark.parametrize("moment", [poisson_cw_moment, poisson_second_moment])
def test_poisson_moments_have_exact_mean_zero(moment):
    for theta, a, y0, x1, x2 in _poisson_configs():
        mean = exact_conditional_mean(moment, theta, a, y0, x1, x2, tol=1e-14)
        assert np.max(np.abs(mean)) <= 1e-10, (theta, a, y0, x1, x2, mean)


def test_poisson_off_truth_is_not_mean_zero():
    truth = PoissonTheta(beta=(0.2,), gamma=-0.1)
    off = PoissonTheta(beta=(0.6,), gamma=-0.1)

    def at_off(theta, y0, y1, y2, x1, x2):
        return poisson_cw_moment(off, y0, y1, y2, x1, x2)

    mean = exact_conditional_mean(at_off, truth, 0.1, 1.0, 1.0, 0.0)
    assert np.max(np.abs(mean)) > 1e-3


def _count_data(n=40, seed=3):
    gen = np.random.default_rng(seed)
    return (
        gen.integers(0, 4, n).astype(float),
        gen.integers(0, 6, n).astype(float),
        gen.integers(0, 6, n).astype(float),
        gen.integers(0, 2, n).astype(float),
        gen.integers(0, 2, n).astype(float),
    )


def test_taylor_construction_reproduces_named_moments():
    theta = PoissonTheta(beta=(0.3,), gamma=-0.2)
    y0, y1, y2, x1, x2 = _count_data()
    np.testing.assert_allclose(
        poisson_taylor_moment(theta, poisson_score_psi(), y0, y1, y2, x1, x2),
        poisson_cw_moment(theta, y0, y1, y2, x1, x2),
        rtol=1e-12, atol=1e-12,
    )
    np.testing.assert_allclose(
        poisson_taylor_moment(theta, poisson_second_psi(), y0, y1, y2, x1, x2),
        poisson_second_moment(theta, y0, y1, y2, x1, x2),
        rtol=1e-12, atol=1e-12,
    )


def test_second_moment_with_instrument():
    theta = PoissonTheta(beta=(0.3,), gamma=-0.2)
    y0, y1, y2, x1, x2 = _count_data()

    def inst(z1):
        return np.column_stack([np.ones(z1.shape[0]), z1[:, 1]])

    got = poisson_second_moment(theta, y0, y1, y2, x1, x2, m=inst)
    assert got.shape == (y0.size, 2)
    np.testing.assert_allclose(got[:, 1], got[:, 0] * y0, rtol=1e-14)
    np.testing.assert_allclose(
        poisson_taylor_moment(theta, poisson_second_psi(inst), y0, y1, y2, x1, x2), got, rtol=1e-12, atol=1e-12,
    )


def test_taylor_construction_needs_a_polynomial():
    theta = PoissonTheta(beta=(0.3,), gamma=-0.2)
    y0, y1, y2, x1, x2 = _count_data(5)
    with pytest.raises(UnsupportedInputError):
        poisson_taylor_moment(theta, lambda v: np.sin(v), y0, y1, y2, x1, x2)


# ---------- mixed interactive hazards ----------

def test_mih_without_interaction_is_a_plain_difference():
    theta = MihTheta(alpha=0.75, beta=(-0.1,), gamma=0.5, delta=(0.0,))
    batch = simulate_mih(theta, 500, seed=2)
    p = integrated_spells(theta.base, batch).p
    np.testing.assert_allclose(mih_moment(theta, batch, b=1.0)[:, 0], p[:, 0] - p[:, 1], rtol=1e-12)


@pytest.mark.parametrize("b", [0.5, 1.0, 1.5])
def test_mih_moment_mean_zero(b, mean_zero):
    theta = MihTheta(alpha=0.75, beta=(-0.1,), gamma=0.5, delta=(0.25,))
    batch = simulate_mih(theta, 200_000, seed=13)
    values = mih_moment(theta, batch, b=b, m=lambda y0, x1: np.column_stack([np.ones_like(y0), x1[:, 0]]))
    assert values.shape == (batch.n, 2)
    mean_zero(values)


def test_mih_ratio():
    theta = MihTheta(alpha=1.0, delta=(0.5,))
    np.testing.assert_allclose(mih_ratio(theta, np.array([0.0, 1.0]), np.array([1.0, 0.0])), [1 / 1.5, 1.5])


def test_mih_psi_mean_zero(rng, mean_zero):
    theta = MihTheta(alpha=1.0, delta=(0.5,))
    a, x1 = 0.3, 1.0
    p1 = rng.exponential(1.0 / math.exp(a * 1.5), 200_000)
    mean_zero(mih_psi(theta, b=0.7)(p1, x1, a))


def test_mih_rejects_bad_arguments():
    theta = MihTheta(alpha=0.75, delta=(0.25,))
    batch = PanelBatch(y0=[1.0], y=[[1.0, 2.0]], x=[[0.0, 1.0]])
    with pytest.raises(DomainError):
        mih_moment(theta, batch, b=0.0)
    with pytest.raises(DomainError):
        mih_moment(theta, PanelBatch(y0=[1.0], y=[[1.0, 2.0, 3.0]], x=[[0.0, 1.0, 0.0]]))
    with pytest.raises(DomainError):
        mih_moment(MihTheta(alpha=0.75, delta=(-2.0,)), batch)


# ---------- nonlinear regression ----------

def _nonlin_theta(lam, sigma2=0.3, gamma=0.4, beta=(-0.2,)):
    return NonlinRegTheta(m_beta=LinearIndex(gamma=gamma, beta=beta), sigma2=sigma2, lam=lam)


def _regression_data(n=50, seed=8, gamma=0.4, beta=-0.2, sigma2=0.3):
    gen = np.random.default_rng(seed)
    a = gen.normal(0.0, 1.0, n)
    y0 = gen.normal(0.0, 1.0, n)
    x1 = gen.integers(0, 2, n).astype(float)
    y1 = gamma * y0 + beta * x1 + a + gen.normal(0.0, math.sqrt(sigma2), n)
    x2 = (y1 > 0).astype(float)
    y2 = gamma * y1 + beta * x2 + a + gen.normal(0.0, math.sqrt(sigma2), n)
    return y0, y1, y2, x1, x2


@pytest.mark.parametrize("lam", [1.0, 0.5, 0.25, 0.125])
def test_linear_score_closed_form_is_the_differenced_moment(lam):
    theta = _nonlin_theta(lam)
    index = theta.m_beta
    y0, y1, y2, x1, x2 = _regression_data()
    result = nonlin_reg_moment(theta, linear_score_psi(index), y0, y1, y2, x1, x2)
    assert result.method == "closed-form"
    z1 = np.column_stack([x1, y0])
    diff = (y1 - 0.4 * y0 + 0.2 * x1) - (y2 - 0.4 * y1 + 0.2 * x2)
    np.testing.assert_allclose(result.values, z1 * diff[:, None], rtol=1e-12, atol=1e-12)


def test_quadratic_psi_is_unbiased_for_a_squared(rng, mean_zero):
    theta = _nonlin_theta(0.5)
    n, a = 200_000, 0.7
    y1 = rng.normal(0.0, 1.0, n)
    x2 = np.zeros(n)
    y2 = 0.4 * y1 + a + rng.normal(0.0, math.sqrt(theta.sigma2), n)

    def coeffs(y0, y1, x1):
        c = np.zeros((np.size(y1), 3))
        c[:, 2] = 1.0
        return c

    values = nonlin_reg_moment(theta, PolynomialInA(coeffs), np.zeros(n), y1, y2, np.zeros(n), x2).values
    mean_zero(values, target=a * a)


def test_quadrature_matches_closed_form_on_a_wide_grid():
    theta = NonlinRegTheta(m_beta=LinearIndex(gamma=0.4, beta=(-0.2,)), sigma2=0.1, lam=0.5)
    psi = linear_score_psi(theta.m_beta)
    y0, y1, x1, x2 = np.array([0.3]), np.array([1.1]), np.array([1.0]), np.array([0.0])
    y2 = np.array([0.8])
    center = float(y2[0] - 0.4 * y1[0])
    grid = default_a_grid(center=center, scale=6.0, nodes=1500)
    exact = nonlin_reg_moment(theta, psi, y0, y1, y2, x1, x2, exact=True).values
    quad = nonlin_reg_moment(theta, psi, y0, y1, y2, x1, x2, a_grid=grid, kernel=TRIWEIGHT, exact=False).values
    np.testing.assert_allclose(quad, exact, rtol=1e-5, atol=1e-6)


def test_narrow_grid_warns():
    theta = _nonlin_theta(0.5)
    y0, y1, y2, x1, x2 = _regression_data(n=5)
    result = nonlin_reg_moment(
        theta, linear_score_psi(theta.m_beta), y0, y1, y2, x1, x2,
        a_grid=default_a_grid(scale=0.1, nodes=80), exact=False,
    )
    assert result.method == "quadrature"
    assert any("a-grid too narrow" in w for w in result.warnings)


def test_sinc_kernel_without_noise():
    z = np.array([0.3, 1.0, 5.0, 12.0])
    np.testing.assert_allclose(deconv_kernel(z, 1.0, 0.0, SINC), np.sin(z) / (np.pi * z), rtol=1e-12)
    assert deconv_kernel(0.0, 1.0, 0.0, SINC) == pytest.approx(1.0 / np.pi)


def test_inverse_heat_weights():
    sinc = inverse_heat_weights(0.5, 0.2, SINC, 3)
    np.testing.assert_allclose(sinc, [1.0, -0.1, 0.005, -0.1 ** 3 / 6.0])
    tri = inverse_heat_weights(0.5, 0.2, KERNELS["triweight"], 1)
    np.testing.assert_allclose(tri, [1.0, 0.65])


def test_nonlinear_regression_errors():
    with pytest.raises(DomainError):
        deconv_kernel(1.0, 0.0, 0.1)

    class Bent:
        def __call__(self, y_prev, x, a):
            return np.asarray(a, dtype=float) ** 3

    theta = NonlinRegTheta(m_beta=Bent(), sigma2=0.1, lam=0.5)
    y0, y1, y2, x1, x2 = _regression_data(n=3)
    with pytest.raises(DomainError):
        nonlin_reg_moment(theta, linear_score_psi(LinearIndex(0.4)), y0, y1, y2, x1, x2, exact=True)

    class Falling:
        def __call__(self, y_prev, x, a):
            return -np.asarray(a, dtype=float) + 0.0 * np.asarray(y_prev, dtype=float)

    falling = NonlinRegTheta(m_beta=Falling(), sigma2=0.1, lam=0.5)
    with pytest.raises(DomainError):
        nonlin_reg_moment(falling, linear_score_psi(LinearIndex(0.4)), y0, y1, y2, x1, x2,
                          a_grid=default_a_grid(nodes=40))


@pytest.mark.slow
def test_bias_shrinks_with_the_bandwidth():
    # ψ = e^{σ²/2}·cos(y₁) − cos(a) has mean zero given a but is not polynomial in a,
    # so φ^λ keeps a bias of (1 − κ(λ))·E[cos A] under the triweight kernel
    sigma2, n = 0.05, 10_000
    gen = np.random.default_rng(44)
    a = gen.normal(0.0, 0.5, n)
    y0, x1 = np.zeros(n), np.zeros(n)
    y1 = a + gen.normal(0.0, math.sqrt(sigma2), n)
    x2 = gen.integers(0, 2, n).astype(float)
    y2 = 0.4 * y1 - 0.2 * x2 + a + gen.normal(0.0, math.sqrt(sigma2), n)

    def psi(y0, y1, x1, a_nodes):
        return math.exp(sigma2 / 2.0) * np.cos(np.asarray(y1))[:, None] - np.cos(a_nodes)[None, :]

    grid = default_a_grid(nodes=200)
    means = []
    for lam in (1.0, 0.5, 0.25, 0.125):
        theta = _nonlin_theta(lam, sigma2=sigma2)
        values = nonlin_reg_moment(theta, psi, y0, y1, y2, x1, x2, a_grid=grid, kernel=TRIWEIGHT).values
        means.append(abs(float(values.mean())))

    assert all(later <= earlier for earlier, later in zip(means, means[1:])), means
    assert means[-1] < 0.1 * means[0]
    assert means[0] == pytest.approx(math.exp(-0.125), abs=0.05)

from dataclasses import dataclass

import numpy as np
import pytest
from scipy import stats

from app.core.errors import DomainError
from app.dgp import EXPERIMENT_THETA0, simulate_panel
from app.models import DgpConfig, HeterogeneitySpec, Theta
from app.mph import (
    gamma_moment_pbar,
    helmert_forward,
    helmert_inverse,
    helmert_jacobian_det,
    helmert_part_law,
    integrated_spells,
    invert_rho,
    mph_density,
    pbar_law,
    rho,
    weibull_Lambda,
    weibull_Lambda_inv,
    weibull_lambda,
)
from app.numerics import half_line, integrate


@dataclass(frozen=True)
class ExpHazard:
    """Λ(y) = e^y − 1."""

    def Lambda(self, y):
        return np.expm1(y)

    def lam(self, y):
        return np.exp(y)

    def Lambda_inv(self, p):
        return np.log1p(p)


# ---------- baseline and ρ ----------

def test_weibull_pieces_are_consistent():
    y = np.array([0.2, 1.0, 3.5])
    np.testing.assert_allclose(weibull_Lambda_inv(0.75, weibull_Lambda(0.75, y)), y, rtol=1e-14)
    h = 1e-6
    fd = (weibull_Lambda(0.75, y + h) - weibull_Lambda(0.75, y - h)) / (2 * h)
    np.testing.assert_allclose(weibull_lambda(0.75, y), fd, rtol=1e-8)


def test_weibull_rejects_nonpositive_duration():
    with pytest.raises(DomainError):
        weibull_Lambda(0.75, [1.0, 0.0])


def test_rho_roundtrip(rng):
    y = rng.exponential(1.0, 50) + 1e-3
    y_prev = rng.exponential(1.0, 50) + 1e-3
    x = rng.integers(0, 2, 50).astype(float)
    p = rho(EXPERIMENT_THETA0, y, y_prev, x)
    np.testing.assert_allclose(invert_rho(EXPERIMENT_THETA0, p, y_prev, x), y, rtol=1e-12)


def test_rho_at_unit_point():
    p = rho(EXPERIMENT_THETA0, 1.0, 1.0, 1.0)
    assert p == pytest.approx(1.521750, rel=1e-6)
    assert p == pytest.approx(np.exp(-0.1 + 0.75 * np.log(2.0)), rel=1e-14)
    assert invert_rho(EXPERIMENT_THETA0, 1.521750, 1.0, 1.0) == pytest.approx(1.0, rel=1e-6)


def test_rho_with_custom_hazard():
    theta = Theta(alpha=1.0, beta=(0.3,), gamma=-0.2)
    p = rho(theta, 0.7, 1.2, 1.0, hazard=ExpHazard())
    assert p == pytest.approx(np.expm1(0.7) * np.exp(-0.24 + 0.3))
    assert invert_rho(theta, p, 1.2, 1.0, hazard=ExpHazard()) == pytest.approx(0.7, rel=1e-13)


@pytest.mark.parametrize("a", [-1.0, 0.0, 0.3, 1.5])
def test_density_integrates_to_one(a):
    rule = half_line(16)
    mass = integrate(lambda y: mph_density(EXPERIMENT_THETA0, y, 1.0, 1.0, a), rule)
    assert mass == pytest.approx(1.0, abs=1e-8)


# ---------- Helmert transform ----------

@pytest.mark.parametrize("T", [2, 3, 4])
def test_helmert_roundtrip(T, rng):
    p = rng.exponential(1.0, (25, T)) + 1e-6
    ptilde, pbar = helmert_forward(p)
    assert ptilde.shape == (25, T - 1)
    np.testing.assert_allclose(pbar, p.sum(axis=1), rtol=1e-14)
    np.testing.assert_allclose(helmert_inverse(ptilde, pbar), p, rtol=1e-12)


@pytest.mark.parametrize("T", [2, 3, 4])
def test_jacobian_determinant_matches_finite_differences(T, rng):
    h = 1e-6
    for _ in range(20):
        ptilde = rng.uniform(0.1, 0.9, T - 1)
        pbar = rng.uniform(0.5, 3.0)
        point = np.append(ptilde, pbar)

        def forward(z):
            return helmert_inverse(z[:-1], z[-1])

        jac = np.empty((T, T))
        for j in range(T):
            step = np.zeros(T)
            step[j] = h
            jac[:, j] = (forward(point + step) - forward(point - step)) / (2 * h)
        fd = abs(np.linalg.det(jac))
        assert helmert_jacobian_det(ptilde, pbar) == pytest.approx(fd, rel=1e-6)


def test_helmert_rejects_parts_outside_unit_interval():
    with pytest.raises(DomainError):
        helmert_inverse([1.0], 2.0)
    with pytest.raises(DomainError):
        helmert_forward(np.array([[1.0]]))


def test_jacobian_checks_part_count():
    with pytest.raises(DomainError):
        helmert_jacobian_det([0.5, 0.5], 1.0, T=2)


# ---------- laws of the parts ----------

@pytest.mark.parametrize("delta, T, a", [(1.0, 2, 0.0), (-0.5, 2, 0.4), (0.75, 3, -0.3)])
def test_gamma_moment_pbar(delta, T, a):
    law = stats.gamma(T, scale=np.exp(-a))
    want = law.expect(lambda p: p ** delta)
    assert gamma_moment_pbar(delta, T, a) == pytest.approx(want, rel=1e-6)


def test_gamma_moment_pbar_domain():
    with pytest.raises(DomainError):
        gamma_moment_pbar(-2.0, 2, 0.0)


def test_part_laws():
    assert helmert_part_law(1, 2) == (1.0, 1.0)
    assert helmert_part_law(1, 4) == (1.0, 3.0)
    assert helmert_part_law(3, 4) == (1.0, 1.0)
    with pytest.raises(DomainError):
        helmert_part_law(2, 2)
    shape, rate = pbar_law(3, 2.0)
    assert (shape, rate) == (3.0, 2.0)


def _check_parts_law(batch, theta, T):
    spells = integrated_spells(theta, batch)
    for t in range(1, T):
        _, b = helmert_part_law(t, T)
        res = stats.kstest(spells.ptilde[:, t - 1], stats.beta(1.0, b).cdf)
        assert res.pvalue > 1e-3, f"P~_{t}: {res}"
    scaled = spells.pbar * batch.v
    assert stats.kstest(scaled, stats.gamma(T).cdf).pvalue > 1e-3
    for t in range(1, T):
        rho_s = stats.spearmanr(spells.ptilde[:, t - 1], spells.pbar).statistic
        assert abs(rho_s) < 0.01
        rho_v = stats.spearmanr(spells.ptilde[:, t - 1], batch.v).statistic
        assert abs(rho_v) < 0.01


def test_parts_law_under_feedback(panel_b, theta0):
    _check_parts_law(panel_b, theta0, 2)


def test_parts_law_without_feedback(panel_a, theta0):
    _check_parts_law(panel_a, theta0, 2)


def test_parts_law_three_periods(theta0):
    config = DgpConfig(
        T=3,
        theta0=theta0,
        het=HeterogeneitySpec(),
        feedback="custom",
        tau=lambda y0, y_hist, x_hist: y0 + y_hist[:, -1] + x_hist[:, -1],
    )
    batch = simulate_panel(config, 200_000, seed=31)
    _check_parts_law(batch, theta0, 3)

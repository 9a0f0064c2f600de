import math

import numpy as np
import pytest
from scipy import special

from app.core.errors import DomainError, EvaluationError, IllConditionedError
from app.numerics import (
    RngStream,
    gauss_legendre,
    half_line,
    hyp2f1,
    integrate,
    invert,
    log_gamma,
    null_space,
    sample_bernoulli,
    sample_exponential,
    sample_gamma,
    solve_linear,
)
from app.numerics.linalg import condition_number


# ---------- special functions ----------

@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 1.75, 7.0, 8.0, 123.4])
def test_log_gamma_matches_lgamma(x):
    assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("x", [0.0, -1.0, float("nan")])
def test_log_gamma_rejects_nonpositive(x):
    with pytest.raises(DomainError):
        log_gamma(x)


@pytest.mark.parametrize("a, b, c", [
    (7.0, 0.75, 1.75),
    (8.0, 0.75, 1.75),
    (8.0, 1.5, 2.5),
    (7.25, 0.5, 3.0),
])
def test_hyp2f1_matches_scipy_on_nonpositive_axis(a, b, c):
    z = -np.array([0.0, 1e-3, 0.3, 1.0, 4.0, 25.0])
    got = hyp2f1(a, b, c, z)
    want = special.hyp2f1(a, b, c, z)
    np.testing.assert_allclose(got, want, rtol=1e-10)


def test_hyp2f1_b_equal_c_is_a_power():
    z = -np.linspace(0.0, 10.0, 7)
    np.testing.assert_allclose(hyp2f1(2.5, 1.0, 1.0, z), (1.0 - z) ** -2.5, rtol=1e-14)
    assert hyp2f1(0.5, 2.0, 2.0, -1.5) == pytest.approx(special.hyp2f1(0.5, 2.0, 2.0, -1.5), rel=1e-13)


def test_hyp2f1_scalar_in_scalar_out():
    assert isinstance(hyp2f1(7.0, 0.75, 1.75, -2.0), float)


@pytest.mark.parametrize("args", [(1.0, 0.75, 1.75, 0.5), (1.0, 2.0, 1.0, -1.0), (1.0, 0.0, 1.0, -1.0)])
def test_hyp2f1_domain(args):
    with pytest.raises(DomainError):
        hyp2f1(*args)


# ---------- quadrature ----------

def test_gauss_legendre_exact_for_degree_2n_minus_1():
    rule = gauss_legendre(6, -2.0, 3.0)
    poly = np.polynomial.Polynomial(np.arange(1.0, 13.0))
    exact = poly.integ()(3.0) - poly.integ()(-2.0)
    assert integrate(poly, rule) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0, 4.25])
def test_half_line_gamma_integral(c):
    rule = half_line(16, 0.0)
    assert integrate(lambda p: p ** (c - 1.0) * np.exp(-p), rule) == pytest.approx(math.gamma(c), rel=1e-10)


def test_half_line_log_scale_shifts_window():
    rate = math.exp(-12.0)
    rule = half_line(16, 12.0)
    assert integrate(lambda p: rate * np.exp(-rate * p), rule) == pytest.approx(1.0, rel=1e-10)


def test_refined_rule_doubles_nodes():
    rule = gauss_legendre(8, 0.0, 1.0)
    assert rule.refined().size == 16
    assert half_line(4).refined().size == 2 * half_line(4).size


def test_integrate_reports_failing_node():
    rule = gauss_legendre(4, 0.0, 1.0)
    with pytest.raises(EvaluationError) as err:
        integrate(lambda x: np.where(x > 0.5, np.nan, x), rule)
    assert err.value.location["node"] > 0.5


def test_vector_valued_integrand():
    rule = gauss_legendre(5)
    out = integrate(lambda x: np.column_stack([np.ones_like(x), x ** 2]), rule)
    np.testing.assert_allclose(out, [2.0, 2.0 / 3.0], rtol=1e-13)


# ---------- random streams ----------

def test_streams_are_reproducible_and_distinct():
    a = RngStream(7, 3).generator().random(5)
    b = RngStream(7, 3).generator().random(5)
    c = RngStream(7, 4).generator().random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_stream_rejects_negative_seed():
    with pytest.raises(DomainError):
        RngStream(-1)


def test_gamma_and_exponential_use_rates():
    gen = RngStream(1).generator()
    g = sample_gamma(5.0, 5.0, gen, 400_000)
    e = sample_exponential(1.5, gen, 400_000)
    assert g.mean() == pytest.approx(1.0, abs=4 * math.sqrt(0.2 / g.size))
    assert g.var() == pytest.approx(0.2, rel=0.02)
    assert e.mean() == pytest.approx(1 / 1.5, rel=0.01)


def test_bernoulli_is_integer_valued():
    draws = sample_bernoulli(np.array([0.0, 1.0, 0.5]), RngStream(3))
    assert draws.dtype == np.int64
    assert draws[0] == 0 and draws[1] == 1


def test_samplers_reject_bad_parameters():
    gen = RngStream(1).generator()
    with pytest.raises(DomainError):
        sample_gamma(0.0, 1.0, gen)
    with pytest.raises(DomainError):
        sample_bernoulli(1.5, gen)


# ---------- linear algebra ----------

def test_null_space_dimension_and_orthogonality():
    a = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    basis = null_space(a)
    assert basis.shape == (3, 1)
    np.testing.assert_allclose(a @ basis, 0.0, atol=1e-14)


def test_null_space_of_zero_matrix_is_everything():
    assert null_space(np.zeros((2, 4))).shape == (4, 4)


def test_solve_rejects_singular_matrix():
    with pytest.raises(IllConditionedError) as err:
        solve_linear(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))
    assert err.value.cond > 1e12


def test_invert_and_condition_number():
    m = np.array([[2.0, 0.0], [0.0, 0.5]])
    np.testing.assert_allclose(invert(m), np.diag([0.5, 2.0]))
    assert condition_number(m) == pytest.approx(4.0)

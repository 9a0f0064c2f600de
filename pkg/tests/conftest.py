import numpy as np
import pytest

from app.dgp import EXPERIMENT_THETA0, experiment_config, simulate_panel
from app.models import ExperimentPosterior, HeterogeneitySpec

N_FAST = 200_000
N_SLOW = 1_000_000


@pytest.fixture(scope="session")
def theta0():
    return EXPERIMENT_THETA0


@pytest.fixture(scope="session")
def het():
    return HeterogeneitySpec()


@pytest.fixture(scope="session")
def panel_a():
    return simulate_panel(experiment_config("A"), N_FAST, seed=11)


@pytest.fixture(scope="session")
def panel_b():
    return simulate_panel(experiment_config("B"), N_FAST, seed=12)


@pytest.fixture(scope="session")
def big_panel_a():
    return simulate_panel(experiment_config("A"), N_SLOW, seed=21)


@pytest.fixture(scope="session")
def big_panel_b():
    return simulate_panel(experiment_config("B"), N_SLOW, seed=22)


@pytest.fixture(scope="session")
def post_a():
    return ExperimentPosterior(regime="A")


@pytest.fixture(scope="session")
def post_b():
    return ExperimentPosterior(regime="B")


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def assert_mean_zero(values, target=0.0, k=4.0):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    mean = values.mean(axis=0)
    se = values.std(axis=0, ddof=1) / np.sqrt(values.shape[0])
    t = (mean - np.asarray(target, dtype=float)) / se
    assert np.all(np.abs(t) <= k), f"t-stats {t}"


@pytest.fixture
def mean_zero():
    return assert_mean_zero

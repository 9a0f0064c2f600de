"""FHR moments beyond the MPH model: Poisson counts, interactive hazards, nonlinear regression."""
from app.altmodels.mih import mih_moment, mih_psi, mih_ratio
from app.altmodels.nonlinreg import (
    KERNELS,
    LinearIndex,
    NonlinRegResult,
    PolynomialInA,
    deconv_kernel,
    linear_score_psi,
    nonlin_reg_moment,
    outcome_kernel,
)
from app.altmodels.poisson import (
    PolynomialPsi,
    exact_conditional_mean,
    poisson_cw_moment,
    poisson_score_psi,
    poisson_second_moment,
    poisson_second_psi,
    poisson_taylor_moment,
)

__all__ = [
    "KERNELS",
    "LinearIndex",
    "NonlinRegResult",
    "PolynomialInA",
    "PolynomialPsi",
    "deconv_kernel",
    "exact_conditional_mean",
    "linear_score_psi",
    "mih_moment",
    "mih_psi",
    "mih_ratio",
    "nonlin_reg_moment",
    "outcome_kernel",
    "poisson_cw_moment",
    "poisson_score_psi",
    "poisson_second_moment",
    "poisson_second_psi",
    "poisson_taylor_moment",
]

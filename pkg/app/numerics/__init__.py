from app.numerics.linalg import invert, null_space, solve_linear
from app.numerics.quadrature import QuadratureRule, gauss_legendre, half_line, integrate
from app.numerics.rng import (
    RngStream,
    sample_bernoulli,
    sample_beta,
    sample_exponential,
    sample_gamma,
    sample_uniform,
)
from app.numerics.special import hyp2f1, log_gamma

__all__ = [
    "QuadratureRule",
    "RngStream",
    "gauss_legendre",
    "half_line",
    "hyp2f1",
    "integrate",
    "invert",
    "log_gamma",
    "null_space",
    "sample_bernoulli",
    "sample_beta",
    "sample_exponential",
    "sample_gamma",
    "sample_uniform",
    "solve_linear",
]

# app/fhrcheck/__init__.py
from app.fhrcheck.checker import (
    NullSpaceResult,
    asf_target,
    ash_target,
    basis_moment,
    check_fhr,
    discrete_null_space,
    two_period_phi,
)
from app.fhrcheck.models import (
    MODELS,
    CheckerReport,
    OutcomeKind,
    ParametricModel,
    batch_phi,
    default_a_grid,
    logit_model,
    mph_model,
    poisson_model,
)

__all__ = [
    "MODELS",
    "CheckerReport",
    "NullSpaceResult",
    "OutcomeKind",
    "ParametricModel",
    "asf_target",
    "ash_target",
    "basis_moment",
    "batch_phi",
    "check_fhr",
    "default_a_grid",
    "discrete_null_space",
    "logit_model",
    "mph_model",
    "poisson_model",
    "two_period_phi",
]

# app/estimate/__init__.py
from app.estimate.bounds import BoundResult, efficiency_bound, information_gap
from app.estimate.effects import EffectResult, average_effect, influence_function
from app.estimate.gmm import (
    GmmResult,
    asymptotic_se,
    gmm_solve,
    mean_jacobian,
    mean_moment,
    moment_values,
)
from app.estimate.tables import SeTable, make_tables

__all__ = [
    "BoundResult",
    "EffectResult",
    "GmmResult",
    "SeTable",
    "asymptotic_se",
    "average_effect",
    "efficiency_bound",
    "gmm_solve",
    "influence_function",
    "information_gap",
    "make_tables",
    "mean_jacobian",
    "mean_moment",
    "moment_values",
]

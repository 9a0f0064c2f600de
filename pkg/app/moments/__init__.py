# app/moments/__init__.py
"""Moment families addressable by stable identifiers."""
from functools import partial
from typing import Optional

from app.core.errors import ConfigurationError
from app.models import ExperimentPosterior, MomentRegime, WorkingModel
from app.moments.base import MomentFn, MomentKind, mc_mean_se, t_stats
from app.moments.mph_moments import (
    EvalPoint,
    Instrument,
    ab_moment,
    asf_moment,
    asf_p1_moment,
    ash_moment,
    simple_moment,
)
from app.moments.scores import (
    conditional_expectations_A,
    conditional_expectations_B,
    eff_score_feedback,
    eff_score_strict_exog,
    loceff_score,
)

THETA_LABELS = ("alpha", "beta", "gamma")

MOMENT_IDS = ("simple", "ab", "loceff", "eff-fb", "eff-se", "ash", "asf", "asf-p1")


def build_moment(
    name: str,
    *,
    posterior: Optional[ExperimentPosterior] = None,
    working: Optional[WorkingModel] = None,
    eval_point: EvalPoint = (1.0, 1.0, 1.0),
    instrument: Optional[Instrument] = None,
    instrument_dim: int = 3,
) -> MomentFn:
    """
    MomentFn for an identifier. Score families have dim 3 (one covariate, T = 2);
    "ab" with a custom instrument needs instrument_dim.
    """
    if name == "simple":
        return MomentFn(name, 3, simple_moment, labels=THETA_LABELS)
    if name == "ab":
        return MomentFn(name, instrument_dim, partial(ab_moment, m=instrument), labels=THETA_LABELS)
    if name == "loceff":
        wm = working or WorkingModel()
        return MomentFn(name, 3, partial(loceff_score, wm=wm), requires=wm, labels=THETA_LABELS)
    if name in ("eff-fb", "eff-se"):
        if posterior is None:
            raise ConfigurationError(f"moment {name} needs an experiment posterior")
        if name == "eff-fb":
            return MomentFn(name, 3, partial(eff_score_feedback, post=posterior),
                            posterior=posterior, labels=THETA_LABELS)
        return MomentFn(name, 3, partial(eff_score_strict_exog, post=posterior),
                        regime=MomentRegime.STRICT_EXOGENEITY, posterior=posterior, labels=THETA_LABELS)
    effects = {"ash": ash_moment, "asf": asf_moment, "asf-p1": asf_p1_moment}
    if name in effects:
        return MomentFn(name, 1, partial(effects[name], eval_point=tuple(eval_point)),
                        kind=MomentKind.EFFECT, labels=(name,))
    raise ConfigurationError(f"unknown moment family {name!r}", known=list(MOMENT_IDS))


__all__ = [
    "MOMENT_IDS",
    "MomentFn",
    "MomentKind",
    "THETA_LABELS",
    "ab_moment",
    "asf_moment",
    "asf_p1_moment",
    "ash_moment",
    "build_moment",
    "conditional_expectations_A",
    "conditional_expectations_B",
    "eff_score_feedback",
    "eff_score_strict_exog",
    "loceff_score",
    "mc_mean_se",
    "simple_moment",
    "t_stats",
]

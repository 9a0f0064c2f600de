# app/cli.py
"""
Command-line front end.

    fhr simulate --experiment B --n 1000 --seed 7 --out panel.csv
    fhr estimate --input panel.csv --moment loceff
    fhr bounds | tables | check | ash

Every command prints a JSON report on stdout with the resolved configuration;
repeated runs with the same configuration print the same bytes. Step timings
go to the log, and into the report only with --profile. Exit status: 0 ok,
1 library error (or a non-converged estimate), 2 bad arguments.
"""
import argparse
import json
import sys
import uuid
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from app.core.config import settings
from app.core.errors import ConfigurationError, FhrError
from app.core.logging import run_id_ctx, setup_logging
from app.core.logging_utils import get_app_logger
from app.dgp import EXPERIMENT_THETA0, design_config, simulate_panel
from app.estimate import average_effect, efficiency_bound, gmm_solve, make_tables
from app.fhrcheck import (
    asf_target,
    ash_target,
    batch_phi,
    check_fhr,
    discrete_null_space,
    logit_model,
    mph_model,
    poisson_model,
    two_period_phi,
)
from app.altmodels import poisson_cw_moment, poisson_second_moment
from app.models import (
    EffectFlavor,
    ExperimentPosterior,
    HeterogeneitySpec,
    LogitTheta,
    PoissonTheta,
    Regime,
    RunConfig,
    Theta,
    WorkingModel,
)
from app.moments import MOMENT_IDS, THETA_LABELS, MomentKind, build_moment
from app.mph import rho
from app.panels import PanelBatch, read_panel_csv, write_panel_csv
from app.profiler import StepProfiler

Report = tuple[dict, int]

FLAVOR_SCORE = {
    EffectFlavor.EFFICIENT: "eff-fb",
    EffectFlavor.WORKING: "loceff",
    EffectFlavor.SIMPLE: "simple",
}


# ---------- helpers ----------

def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "model_dump"):
        return obj.model_dump()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def resolve_theta0(config: RunConfig) -> Theta:
    """Experiment θ₀ with the config's overrides applied."""
    values = {"alpha": EXPERIMENT_THETA0.alpha, "beta": EXPERIMENT_THETA0.beta, "gamma": EXPERIMENT_THETA0.gamma}
    values.update(config.theta0)
    return Theta(**values)


def _labelled(vec) -> dict:
    return dict(zip(THETA_LABELS, np.asarray(vec, dtype=float).tolist()))


def _posterior(config: RunConfig, regime: Optional[str] = None) -> ExperimentPosterior:
    # the custom design feeds back like B
    default = Regime.A if config.experiment == Regime.A else Regime.B
    return ExperimentPosterior.from_het(HeterogeneitySpec(), regime or default)


def _working(config: RunConfig, panel: PanelBatch) -> WorkingModel:
    return WorkingModel(p=config.p) if config.p is not None else WorkingModel.from_panel(panel)


def load_or_simulate(config: RunConfig, profiler: StepProfiler) -> PanelBatch:
    if config.input:
        try:
            panel = read_panel_csv(config.input)
        except OSError as e:
            raise ConfigurationError(f"cannot read input: {e}", path=config.input) from e
        profiler.step("read_input", n=panel.n)
        return panel
    dgp = design_config(config.experiment, config.T, resolve_theta0(config))
    panel = simulate_panel(dgp, config.n, config.seed, config.threads).without_latent()
    profiler.step("simulate", n=panel.n)
    return panel


def _score_moment(config: RunConfig, name: str, panel: PanelBatch, warnings: list[str]):
    if name == "eff-se" and config.experiment != Regime.A:
        warnings.append(
            f"eff-se assumes no feedback but experiment {config.experiment} has feedback; "
            "the estimate is not consistent here"
        )
        return build_moment(name, posterior=_posterior(config, Regime.A))
    return build_moment(name, posterior=_posterior(config), working=_working(config, panel))


# ---------- commands ----------

def cmd_simulate(config: RunConfig, profiler: StepProfiler) -> Report:
    if not config.out:
        raise ConfigurationError("simulate needs --out")
    dgp = design_config(config.experiment, config.T, resolve_theta0(config))
    panel = simulate_panel(dgp, config.n, config.seed, config.threads)
    profiler.step("simulate", n=panel.n)
    try:
        path = write_panel_csv(panel, config.out, with_latent=config.with_latent)
    except OSError as e:
        raise ConfigurationError(f"cannot write output: {e}", path=config.out) from e
    profiler.step("write_csv")
    return {"out": str(path), "n": panel.n, "T": panel.T}, 0


def cmd_estimate(config: RunConfig, profiler: StepProfiler) -> Report:
    if config.moment not in MOMENT_IDS:
        raise ConfigurationError(f"unknown moment family {config.moment!r}", known=list(MOMENT_IDS))
    panel = load_or_simulate(config, profiler)
    warnings: list[str] = []
    moment = _score_moment(config, config.moment, panel, warnings)
    if moment.kind != MomentKind.SCORE:
        raise ConfigurationError(f"{config.moment} is an effect moment; use the ash command")
    result = gmm_solve(moment, panel, resolve_theta0(config), workers=config.threads)
    profiler.step("gmm", iterations=result.iterations)
    report = {
        "moment": moment.name,
        "theta_hat": _labelled(result.theta_vector),
        "se": _labelled(result.se),
        "converged": result.converged,
        "iterations": result.iterations,
        "moment_norm": result.moment_norm,
        "n": result.n,
        "warnings": warnings + result.warnings,
    }
    return report, 0 if result.converged else 1


def cmd_bounds(config: RunConfig, profiler: StepProfiler) -> Report:
    panel = load_or_simulate(config, profiler)
    theta = resolve_theta0(config)
    names = ["eff-fb"] + (["eff-se"] if config.experiment == Regime.A else [])
    bounds = {}
    for name in names:
        res = efficiency_bound(build_moment(name, posterior=_posterior(config)), panel, theta, config.threads)
        bounds[name] = {"bound_se": _labelled(res.bound_se), "info": res.info.tolist()}
    profiler.step("bounds")
    return {"theta": _labelled(theta.as_vector()), "n": panel.n, "bounds": bounds}, 0


def cmd_tables(config: RunConfig, profiler: StepProfiler) -> Report:
    if config.experiment == Regime.CUSTOM:
        raise ConfigurationError("tables are defined for experiments A and B")
    table = make_tables(
        config.experiment, config.n, config.seed, resolve_theta0(config),
        p=config.p, eval_point=config.eval_point, workers=config.threads,
    )
    profiler.step("tables")
    report = table.to_dict()
    if config.out:
        out = Path(config.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(table.to_csv(), encoding="utf-8")
        raw = out.with_name(f"{out.stem}_raw{out.suffix or '.csv'}")
        raw.write_text(table.to_csv(raw=True), encoding="utf-8")
        text = out.with_suffix(".txt")
        text.write_text(table.render(), encoding="utf-8")
        report["files"] = [str(out), str(raw), str(text)]
    else:
        print(table.render(), file=sys.stderr)
    return report, 0


def _discrete_theta(config: RunConfig, cls, beta: float, gamma: float):
    values = {"beta": beta, "gamma": gamma}
    values.update({k: v for k, v in config.theta0.items() if k in values})
    return cls(**values)


def cmd_check(config: RunConfig, profiler: StepProfiler) -> Report:
    if config.model == "logit" or config.phi == "null-space":
        if config.model == "logit":
            model, theta = logit_model(), _discrete_theta(config, LogitTheta, 0.7, 0.3)
        elif config.model == "poisson":
            model, theta = poisson_model(), _discrete_theta(config, PoissonTheta, 0.5, 0.2)
        else:
            raise ConfigurationError("null-space reports need a discrete model (logit or poisson)")
        result = discrete_null_space(model, theta)
        profiler.step("null_space")
        return {
            "model": model.name,
            "dimension": result.dimension,
            "paths": len(result.paths),
            "rows": result.rows,
            "singular_values": result.singular_values.tolist(),
            "warnings": result.warnings,
        }, 0

    if config.model == "poisson":
        fns = {"cw": poisson_cw_moment, "second": poisson_second_moment}
        if config.phi not in fns:
            raise ConfigurationError(f"unknown Poisson moment {config.phi!r}", known=sorted(fns))
        model, theta = poisson_model(), _discrete_theta(config, PoissonTheta, 0.5, 0.2)
        report = check_fhr(model, two_period_phi(fns[config.phi]), theta, workers=config.threads)
    elif config.model == "mph":
        theta = resolve_theta0(config)
        target = None
        if config.phi == "broken":
            phi = broken_phi
        else:
            moment = build_moment(
                config.phi, posterior=_posterior(config, Regime.A if config.phi == "eff-se" else None),
                working=WorkingModel(p=config.p if config.p is not None else 0.5),
                eval_point=config.eval_point,
            )
            phi = batch_phi(moment)
            if config.phi == "ash":
                target = ash_target(theta, config.eval_point)
            elif config.phi in ("asf", "asf-p1"):
                target = asf_target(theta, config.eval_point)
        report = check_fhr(mph_model(), phi, theta, target=target, workers=config.threads)
    else:
        raise ConfigurationError(f"unknown model {config.model!r}", known=["mph", "logit", "poisson"])
    profiler.step("check", grid_points=report.grid_points, checker_steps=report.profile.get("steps", []))
    return {**report.model_dump(exclude={"profile"}), "passed": report.passed}, 0


def broken_phi(theta: Theta, y0, y, x) -> np.ndarray:
    """P₂ − 2P₁, a difference whose conditional mean is −e^{−a}."""
    p1 = rho(theta, y[:, 0], y0, x[:, 0, :])
    p2 = rho(theta, y[:, 1], y[:, 0], x[:, 1, :])
    return (np.asarray(p2) - 2.0 * np.asarray(p1))[:, None]


def cmd_ash(config: RunConfig, profiler: StepProfiler) -> Report:
    panel = load_or_simulate(config, profiler)
    warnings: list[str] = []
    score = _score_moment(config, FLAVOR_SCORE[config.flavor], panel, warnings)
    fit = gmm_solve(score, panel, resolve_theta0(config), workers=config.threads)
    profiler.step("gmm", iterations=fit.iterations)
    ash = build_moment("ash", eval_point=config.eval_point)
    effect = average_effect(ash, score, panel, fit.theta_hat, config.flavor, config.threads)
    profiler.step("average_effect")

    report = {**effect.to_dict(), "theta_hat": _labelled(fit.theta_vector), "converged": fit.converged,
              "warnings": warnings + fit.warnings}
    if not config.input:
        theta0 = resolve_theta0(config)
        het = design_config(config.experiment, config.T).het
        report["target"] = float(ash_target(theta0, config.eval_point)(0.0)[0] * het.mean)
    return report, 0 if fit.converged else 1


COMMANDS: dict[str, Callable[[RunConfig, StepProfiler], Report]] = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "bounds": cmd_bounds,
    "tables": cmd_tables,
    "check": cmd_check,
    "ash": cmd_ash,
}


# ---------- argument parsing ----------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--experiment", choices=[Regime.A, Regime.B, Regime.CUSTOM])
    common.add_argument("--T", type=int, help="periods of the custom design")
    common.add_argument("--n", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--moment")
    common.add_argument("--p", type=float, help="working-model probability of X2 = 1")
    common.add_argument("--out")
    common.add_argument("--input")
    common.add_argument("--threads", type=int)
    common.add_argument("--with-latent", action="store_true", default=None)
    common.add_argument("--model", choices=["mph", "logit", "poisson"])
    common.add_argument("--phi")
    common.add_argument("--y", type=float)
    common.add_argument("--yprev", type=float)
    common.add_argument("--x", type=float)
    common.add_argument("--flavor", choices=[EffectFlavor.EFFICIENT, EffectFlavor.WORKING, EffectFlavor.SIMPLE])
    common.add_argument("--log-level", default=None)
    common.add_argument("--profile", action="store_true", help="add step timings to the report")

    parser = argparse.ArgumentParser(prog="fhr", description="FHR moments for nonlinear panel models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """File values, then flags."""
    base = RunConfig.load(args.config)
    eval_point = list(base.eval_point)
    for i, flag in enumerate(("y", "yprev", "x")):
        if getattr(args, flag) is not None:
            eval_point[i] = getattr(args, flag)
    return RunConfig.load(
        args.config,
        experiment=args.experiment, T=args.T, n=args.n, seed=args.seed, moment=args.moment, p=args.p,
        out=args.out, input=args.input, threads=args.threads, with_latent=args.with_latent,
        model=args.model, phi=args.phi, flavor=args.flavor, eval_point=tuple(eval_point),
    )


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    token = run_id_ctx.set(f"run-{uuid.uuid4().hex[:12]}")
    logger = get_app_logger("cli")
    profiler = StepProfiler().start()
    try:
        config = resolve_config(args)
        profiler.step("resolve_config")
        logger.info(f"🏁 {args.command} started", extra={"config": config.model_dump()})
        body, code = COMMANDS[args.command](config, profiler)
        report = {
            "command": args.command,
            "app_version": settings.APP_VERSION,
            **body,
            "config": config.model_dump(),
        }
        profile = profiler.result()
        if args.profile:
            report["profile"] = profile
        print(json.dumps(report, indent=2, default=_jsonable))
        logger.info(f"✔ {args.command} finished", extra={"exit_code": code, "profile": profile})
        return code
    except FhrError as e:
        logger.exception(f"❌ {args.command} failed: {e.detail}")
        print(json.dumps({"command": args.command, **e.to_dict()}, default=_jsonable), file=sys.stderr)
        return 1
    finally:
        run_id_ctx.reset(token)


if __name__ == "__main__":
    sys.exit(main())

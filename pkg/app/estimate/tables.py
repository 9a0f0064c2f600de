# app/estimate/tables.py
"""Relative standard-error tables for the two feedback experiments."""
import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from rich.console import Console
from rich.table import Table

from app.core.config import settings
from app.core.logging_utils import get_app_logger
from app.dgp import experiment_config, simulate_panel
from app.estimate.bounds import efficiency_bound
from app.estimate.effects import average_effect
from app.estimate.gmm import asymptotic_se
from app.models import EffectFlavor, ExperimentPosterior, Regime, Theta, WorkingModel
from app.moments import build_moment
from app.profiler import StepProfiler

# display order α, γ, β over the theta vector [α, β, γ]
DISPLAY = (("alpha", 0), ("gamma", 2), ("beta", 1))


@dataclass
class SeTable:
    """Per-observation SEs (`raw`) and the same rows divided by the benchmark row (`ratios`)."""

    experiment: str
    rows: list[str]
    columns: list[str]
    raw: np.ndarray
    benchmark: str
    n: int
    seed: int
    profile: dict = field(default_factory=dict)

    @property
    def ratios(self) -> np.ndarray:
        return self.raw / self.raw[self.rows.index(self.benchmark)]

    def ratio(self, row: str, column: str) -> float:
        return float(self.ratios[self.rows.index(row), self.columns.index(column)])

    def to_csv(self, digits: Optional[int] = None, raw: bool = False) -> str:
        digits = digits or settings.CSV_SIG_DIGITS
        values = self.raw if raw else self.ratios
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["row", *self.columns])
        for name, vals in zip(self.rows, values):
            writer.writerow([name, *(f"{v:.{digits}g}" for v in vals)])
        return buf.getvalue()

    def render(self) -> str:
        table = Table(title=f"Experiment {self.experiment}: SE relative to {self.benchmark} (n={self.n})")
        table.add_column("estimator")
        for c in self.columns:
            table.add_column(c, justify="right")
        for name, vals in zip(self.rows, self.ratios):
            table.add_row(name, *(f"{v:.3f}" for v in vals))
        console = Console(record=True, width=100, file=io.StringIO())
        console.print(table)
        return console.export_text()

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "rows": self.rows,
            "columns": self.columns,
            "benchmark": self.benchmark,
            "raw_se": self.raw.tolist(),
            "ratios": self.ratios.tolist(),
            "n": self.n,
            "seed": self.seed,
        }


def _display(se: np.ndarray) -> list[float]:
    return [float(se[i]) for _, i in DISPLAY]


def make_tables(
    experiment: str,
    n: Optional[int] = None,
    seed: Optional[int] = None,
    theta0: Optional[Theta] = None,
    p: Optional[float] = None,
    eval_point=(1.0, 1.0, 1.0),
    workers: Optional[int] = None,
) -> SeTable:
    """
    Per-observation SEs at θ₀ on one simulated panel.

    A: SE bound, FB bound, working-model GMM, simple GMM; benchmark SE bound.
    B: FB bound, working-model GMM, simple GMM plus an ASH column; benchmark FB bound.
    """
    logger = get_app_logger("tables")
    profiler = StepProfiler().start()
    n = n or settings.DEFAULT_N
    seed = settings.DEFAULT_SEED if seed is None else seed
    config = experiment_config(experiment, theta0)
    theta = config.theta0

    # ---- Step 1: Simulate ----
    logger.info(f"🏁 Building table for experiment {experiment}", extra={"n": n, "seed": seed})
    panel = simulate_panel(config, n, seed, workers).without_latent()
    profiler.step("simulate", n=n)

    # ---- Step 2: Moments ----
    post = ExperimentPosterior.from_het(config.het, experiment)
    wm = WorkingModel(p=p) if p is not None else WorkingModel.from_panel(panel)
    eff_fb = build_moment("eff-fb", posterior=post)
    loceff = build_moment("loceff", working=wm)
    simple = build_moment("simple")

    # ---- Step 3: Standard errors ----
    fb_bound = efficiency_bound(eff_fb, panel, theta, workers)
    working = asymptotic_se(loceff, panel, theta, workers)
    plain = asymptotic_se(simple, panel, theta, workers)
    per_obs = {
        "FB bound": fb_bound.bound_se,
        "working GMM": np.sqrt(np.diag(working.avar)),
        "simple GMM": np.sqrt(np.diag(plain.avar)),
    }
    columns = [name for name, _ in DISPLAY]

    if experiment == Regime.A:
        se_bound = efficiency_bound(build_moment("eff-se", posterior=post), panel, theta, workers)
        rows = ["SE bound", "FB bound", "working GMM", "simple GMM"]
        raw = np.array([_display(se_bound.bound_se)] + [_display(per_obs[r]) for r in rows[1:]])
        benchmark = "SE bound"
    else:
        ash = build_moment("ash", eval_point=eval_point)
        flavours = {
            "FB bound": (eff_fb, EffectFlavor.EFFICIENT),
            "working GMM": (loceff, EffectFlavor.WORKING),
            "simple GMM": (simple, EffectFlavor.SIMPLE),
        }
        rows = list(flavours)
        raw = np.array([
            _display(per_obs[r]) + [average_effect(ash, score, panel, theta, flavor, workers).sd]
            for r, (score, flavor) in flavours.items()
        ])
        columns.append("ASH")
        benchmark = "FB bound"
    profiler.step("standard_errors")

    table = SeTable(experiment, rows, columns, raw, benchmark, n, seed, profiler.result())
    logger.info("✔ Table ready", extra={"experiment": experiment, "ratios": table.ratios.tolist()})
    return table

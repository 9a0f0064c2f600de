# app/panels/batch.py
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app.core.errors import DomainError


def _check_durations(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        bad = np.argwhere(~(np.isfinite(arr) & (arr > 0)))[0]
        raise DomainError(f"{name} must be positive and finite", location={"unit": int(bad[0])})


@dataclass(frozen=True)
class PanelPath:
    """One unit: y0, durations y₁…y_T, covariates x₁…x_T (T×k) and optional latent V."""

    y0: float
    y: np.ndarray
    x: np.ndarray
    v: Optional[float] = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        if y.size < 2:
            raise DomainError("a panel path needs T >= 2", T=int(y.size))
        if x.shape[0] != y.size:
            raise DomainError("x must have one row per period", T=int(y.size), rows=int(x.shape[0]))
        _check_durations("y0", np.atleast_1d(float(self.y0)))
        _check_durations("y", y)
        if self.v is not None and not self.v > 0:
            raise DomainError("v must be positive", v=self.v)

    @property
    def T(self) -> int:
        return int(self.y.size)

    def to_batch(self) -> "PanelBatch":
        return PanelBatch(
            y0=np.array([float(self.y0)]),
            y=self.y[None, :],
            x=self.x[None, :, :],
            v=None if self.v is None else np.array([float(self.v)]),
        )


@dataclass(frozen=True)
class PanelBatch:
    """
    Struct-of-arrays panel: y0 (n,), y (n, T), x (n, T, k), v (n,) or None.
    Every moment evaluator works on a batch and returns (n, dim).
    """

    y0: np.ndarray
    y: np.ndarray
    x: np.ndarray
    v: Optional[np.ndarray] = None

    def __post_init__(self):
        y0 = np.asarray(self.y0, dtype=float).ravel()
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 2:
            x = x[:, :, None]
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        if self.v is not None:
            object.__setattr__(self, "v", np.asarray(self.v, dtype=float).ravel())

        n, T = y.shape
        if T < 2:
            raise DomainError("panels need T >= 2", T=T)
        if y0.shape != (n,) or x.shape[:2] != (n, T):
            raise DomainError(
                "inconsistent panel shapes",
                y0=list(y0.shape), y=list(y.shape), x=list(x.shape),
            )
        if self.v is not None and self.v.shape != (n,):
            raise DomainError("v must have one entry per unit", v=list(self.v.shape))
        _check_durations("y0", y0)
        _check_durations("y", y)

    @property
    def n(self) -> int:
        return int(self.y0.size)

    @property
    def T(self) -> int:
        return int(self.y.shape[1])

    @property
    def k(self) -> int:
        return int(self.x.shape[2])

    def __len__(self) -> int:
        return self.n

    def y_prev(self) -> np.ndarray:
        """(n, T) lagged durations (y₀, y₁, …, y_{T−1})."""
        return np.column_stack([self.y0, self.y[:, :-1]])

    def path(self, i: int) -> PanelPath:
        return PanelPath(
            y0=float(self.y0[i]), y=self.y[i], x=self.x[i],
            v=None if self.v is None else float(self.v[i]),
        )

    def take(self, idx) -> "PanelBatch":
        return PanelBatch(
            y0=self.y0[idx], y=self.y[idx], x=self.x[idx],
            v=None if self.v is None else self.v[idx],
        )

    def without_latent(self) -> "PanelBatch":
        return PanelBatch(self.y0, self.y, self.x, None)

    @classmethod
    def concat(cls, parts: Sequence["PanelBatch"]) -> "PanelBatch":
        if not parts:
            raise DomainError("nothing to concatenate")
        has_v = all(p.v is not None for p in parts)
        return cls(
            y0=np.concatenate([p.y0 for p in parts]),
            y=np.concatenate([p.y for p in parts]),
            x=np.concatenate([p.x for p in parts]),
            v=np.concatenate([p.v for p in parts]) if has_v else None,
        )

    @classmethod
    def from_paths(cls, paths: Sequence[PanelPath]) -> "PanelBatch":
        return cls.concat([p.to_batch() for p in paths])


def as_batch(panel) -> PanelBatch:
    if isinstance(panel, PanelBatch):
        return panel
    if isinstance(panel, PanelPath):
        return panel.to_batch()
    if isinstance(panel, (list, tuple)):
        return PanelBatch.from_paths(panel)
    raise DomainError(f"cannot read a panel from {type(panel).__name__}")

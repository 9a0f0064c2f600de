import time
from contextlib import contextmanager


class StepProfiler:
    """Wall-clock timings of named pipeline steps, logged at the end of each run."""

    def __init__(self):
        self.steps: list[dict] = []
        self._last: float | None = None

    def start(self) -> "StepProfiler":
        self._last = time.perf_counter()
        return self

    def step(self, name: str, **info) -> float:
        """Close the current step under `name`; returns its duration in seconds."""
        now = time.perf_counter()
        duration = now - (self._last if self._last is not None else now)
        self.steps.append({"step": name, "duration_sec": round(duration, 4), **info})
        self._last = now
        return duration

    @contextmanager
    def track(self, name: str, **info):
        self._last = time.perf_counter()
        try:
            yield self
        finally:
            self.step(name, **info)

    def result(self) -> dict:
        total = sum(s["duration_sec"] for s in self.steps)
        return {"steps": [dict(s) for s in self.steps], "total_sec": round(total, 4)}

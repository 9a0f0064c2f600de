# app/core/logging_utils.py

import logging
import socket
import time
import uuid
from typing import Optional

from app.core.config import settings
from app.core.logging import run_id_ctx


HOSTNAME = socket.gethostname()


class RunLogger:
    """
    Wraps a base logger and injects into every record:
      - run_id
      - hostname / environment / app
      - elapsed_ms since the logger was created
    """

    def __init__(self, base_logger: logging.Logger, run_id: Optional[str] = None):
        self._base_logger = base_logger
        self.start_time = time.perf_counter()
        self.run_id = run_id or run_id_ctx.get() or f"run-{uuid.uuid4().hex[:12]}"

    @property
    def name(self) -> str:
        return self._base_logger.name

    def _inject(self, extra: Optional[dict]) -> dict:
        extra = dict(extra or {})
        elapsed = (time.perf_counter() - self.start_time) * 1000
        extra.update({
            "run_id": self.run_id,
            "hostname": HOSTNAME,
            "environment": settings.APP_ENV,
            "app": settings.APP_NAME,
            "elapsed_ms": round(elapsed, 2),
        })
        return extra

    def _log(self, level, msg, *args, extra=None, **kwargs):
        self._base_logger.log(level, msg, *args, extra=self._inject(extra), **kwargs)

    def debug(self, msg, *a, **kw): self._log(logging.DEBUG, msg, *a, **kw)
    def info(self, msg, *a, **kw): self._log(logging.INFO, msg, *a, **kw)
    def warning(self, msg, *a, **kw): self._log(logging.WARNING, msg, *a, **kw)
    def error(self, msg, *a, **kw): self._log(logging.ERROR, msg, *a, **kw)
    def exception(self, msg, *a, **kw): self._log(logging.ERROR, msg, *a, exc_info=True, **kw)


def get_app_logger(name: Optional[str] = None, run_id: Optional[str] = None) -> RunLogger:
    """Logger for library pipelines; children of the APP_NAME logger."""
    base = settings.APP_NAME if not name else f"{settings.APP_NAME}.{name}"
    return RunLogger(logging.getLogger(base), run_id)

# app/core/rich_formatter.py

import json
import logging
from rich.console import Console
from rich.json import JSON
from rich.traceback import Traceback
from rich.theme import Theme


# Custom theme for log levels
LOG_THEME = Theme({
    "log.debug": "cyan",
    "log.info": "green",
    "log.warning": "yellow",
    "log.error": "red bold",
    "log.critical": "bold white on red",
})

# Attributes every LogRecord has; anything else came in through `extra`.
_RESERVED = set(vars(logging.makeLogRecord({}))) | {"message", "asctime", "taskName"}


def record_extras(record: logging.LogRecord) -> dict:
    return {
        k: v for k, v in vars(record).items()
        if k not in _RESERVED and v is not None
    }


class RichJSONFormatter(logging.Formatter):
    """
    Rich-powered console formatter:
      - level-coloured message line
      - structured `extra` fields pretty-printed as JSON
      - rich tracebacks for exceptions
    """

    def __init__(self, width: int = 120):
        super().__init__()
        self.console = Console(theme=LOG_THEME, stderr=True, width=width)

    def format(self, record: logging.LogRecord) -> str:
        style = f"log.{record.levelname.lower()}"
        with self.console.capture() as capture:
            self.console.print(f"[{style}]{record.levelname:<8}[/{style}] {record.name}: {record.getMessage()}",
                               markup=True, highlight=False)

            extras = record_extras(record)
            if extras:
                self.console.print(JSON(json.dumps(extras, default=str)))

            if record.exc_info:
                self.console.print(Traceback.from_exception(
                    record.exc_info[0],
                    record.exc_info[1],
                    record.exc_info[2],
                    width=self.console.width,
                    theme="monokai",
                ))
        return capture.get().rstrip("\n")

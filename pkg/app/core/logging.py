import logging
import shutil
from contextvars import ContextVar
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from pathlib import Path

from pythonjsonlogger import jsonlogger

from app.core.config import settings
from app.core.rich_formatter import RichJSONFormatter

# One id per CLI invocation; library loggers pick it up from here
run_id_ctx: ContextVar[str | None] = ContextVar("run_id", default=None)

DAY_FORMAT = "%Y%m%d"


class RunIdFilter(logging.Filter):
    """Stamps run_id on records that do not carry one already."""

    def filter(self, record: logging.LogRecord) -> bool:
        if getattr(record, "run_id", None) is None:
            record.run_id = run_id_ctx.get()
        return True


def _today_dir(base: Path) -> Path:
    folder = base / datetime.now(timezone.utc).strftime(DAY_FORMAT)
    folder.mkdir(parents=True, exist_ok=True)
    return folder


def _file_handler(log_file: str, formatter: logging.Formatter) -> logging.Handler:
    """LOG_FILE_PATH's name inside today's folder, rotated at 10 MB."""
    target = Path(log_file)
    path = _today_dir(target.parent if str(target.parent) != "." else Path("logs")) / target.name
    handler = RotatingFileHandler(path, maxBytes=10_000_000, backupCount=5, encoding="utf-8")
    handler.setFormatter(formatter)
    handler.addFilter(RunIdFilter())
    return handler


def prune_old_log_folders(base_dir: str = "logs", days: int = 7) -> list[str]:
    """Delete YYYYMMDD folders under base_dir older than `days` (UTC); returns what went."""
    base = Path(base_dir)
    if not base.is_dir():
        return []

    log = logging.getLogger("cleanup")
    today = datetime.now(timezone.utc)
    removed: list[str] = []
    for folder in sorted(p for p in base.iterdir() if p.is_dir()):
        if len(folder.name) != 8 or not folder.name.isdigit():
            continue
        try:
            day = datetime.strptime(folder.name, DAY_FORMAT).replace(tzinfo=timezone.utc)
        except ValueError:
            continue
        age = (today - day).days
        if age <= days:
            continue
        try:
            shutil.rmtree(folder)
        except OSError as e:
            log.error(f"❌ Could not delete log folder {folder}: {e}")
            continue
        removed.append(str(folder))
        log.info(f"🗑️ Deleted log folder {folder}", extra={"age_days": age})
    return removed


def json_formatter() -> logging.Formatter:
    return jsonlogger.JsonFormatter(
        fmt="%(asctime)s %(levelname)s %(name)s %(message)s %(run_id)s",
        rename_fields={"levelname": "level", "asctime": "timestamp"},
    )


def setup_logging(level: str | None = None, targets: list[str] | None = None) -> list[str]:
    """
    Configure the root logger from settings; `level` and `targets` (console, file)
    override LOG_LEVEL / LOG_TARGETS. Returns the targets in effect.
    """
    for h in logging.root.handlers[:]:
        logging.root.removeHandler(h)

    log_level = getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.INFO)
    targets = [t.strip().lower() for t in (targets or settings.LOG_TARGETS)]

    handlers: list[logging.Handler] = []
    if "console" in targets:
        console = logging.StreamHandler()
        console.setFormatter(RichJSONFormatter())
        handlers.append(console)
    if "file" in targets:
        handlers.append(_file_handler(settings.LOG_FILE_PATH, json_formatter()))
    if not handlers:
        # unknown targets: plain JSON on stderr
        console = logging.StreamHandler()
        console.setFormatter(json_formatter())
        handlers.append(console)
    for h in handlers:
        if not any(isinstance(f, RunIdFilter) for f in h.filters):
            h.addFilter(RunIdFilter())

    logging.basicConfig(level=log_level, handlers=handlers, force=True)

    if "file" in targets:
        try:
            prune_old_log_folders(settings.LOG_DIR or "logs", settings.LOG_RETENTION_DAYS)
        except OSError as e:
            logging.getLogger(__name__).error(f"❌ Pruning old logs failed: {e}")

    logging.getLogger(__name__).debug("✅ Logging initialized", extra={"targets": targets})
    return targets

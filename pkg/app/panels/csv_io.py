import csv
import io
import re
from pathlib import Path
from typing import Optional

import numpy as np

from app.core.config import settings
from app.core.errors import SchemaError
from app.core.logging_utils import get_app_logger
from app.panels.batch import PanelBatch
from app.panels.schema import check_unique, load_schema, panel_columns, prep_rules, validate_row

_PERIOD_COL = re.compile(r"^y([1-9][0-9]*)$")


def _fmt(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def format_panel_csv(batch: PanelBatch, with_latent: bool = False, digits: Optional[int] = None) -> str:
    """Header unit,y0,x1,y1,…,x_T,y_T[,v]; units numbered from 1; LF newlines."""
    if batch.k != 1:
        raise SchemaError("the CSV layout holds one covariate per period", line=1, column="x1")
    if with_latent and batch.v is None:
        raise SchemaError("no latent v to write", line=1, column="v")
    digits = digits or settings.CSV_SIG_DIGITS

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(panel_columns(batch.T, with_latent))
    for i in range(batch.n):
        row = [str(i + 1), _fmt(batch.y0[i], digits)]
        for t in range(batch.T):
            row += [_fmt(batch.x[i, t, 0], digits), _fmt(batch.y[i, t], digits)]
        if with_latent:
            row.append(_fmt(batch.v[i], digits))
        writer.writerow(row)
    return buf.getvalue()


def write_panel_csv(batch: PanelBatch, path: str | Path, with_latent: bool = False,
                    digits: Optional[int] = None) -> Path:
    path = Path(path)
    text = format_panel_csv(batch, with_latent, digits)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    get_app_logger("panels").info(f"📤 Panel written: {path}", extra={"n": batch.n, "with_latent": with_latent})
    return path


def parse_panel_csv(text: str, schema: Optional[dict] = None) -> PanelBatch:
    """
    Sniffs the delimiter, lower-cases headers and validates every row against the
    panel schema. Violations raise SchemaError with the physical line number.
    """
    if not text.strip():
        raise SchemaError("empty file", line=1)
    try:
        dialect = csv.Sniffer().sniff(text[:5000], delimiters=[",", "\t", ";", "|"])
    except csv.Error:
        dialect = csv.excel
    reader = csv.reader(io.StringIO(text), dialect)

    headers = [str(h).strip().lower() for h in next(reader)]
    periods = sorted(int(m.group(1)) for h in headers if (m := _PERIOD_COL.match(h)))
    T = len(periods)
    if T < 2 or periods != list(range(1, T + 1)):
        raise SchemaError("header must name y1…yT with T >= 2", line=1, column="y1")
    with_latent = "v" in headers
    expected = panel_columns(T, with_latent)
    if sorted(headers) != sorted(expected):
        missing = sorted(set(expected) - set(headers))
        extra = sorted(set(headers) - set(expected))
        raise SchemaError(f"unexpected header (missing={missing}, extra={extra})", line=1,
                          column=(missing or extra)[0])

    rules, unique_cols, unique_mode = prep_rules(schema or load_schema(), T)
    rows, keys = [], []
    for raw in reader:
        line = reader.line_num
        if not raw or all(not c.strip() for c in raw):
            continue
        if len(raw) != len(headers):
            raise SchemaError(f"expected {len(headers)} fields, found {len(raw)}", line=line)
        typed = validate_row(dict(zip(headers, raw)), line, rules)
        if with_latent and "v" not in typed:
            raise SchemaError("v is required once the column is present", line=line, column="v")
        keys.append((line, tuple(typed.get(c) for c in unique_cols)))
        rows.append(typed)
    if not rows:
        raise SchemaError("no data rows", line=2)
    check_unique(keys, unique_cols, unique_mode)

    y0 = np.array([r["y0"] for r in rows], dtype=float)
    y = np.array([[r[f"y{t}"] for t in range(1, T + 1)] for r in rows], dtype=float)
    x = np.array([[r[f"x{t}"] for t in range(1, T + 1)] for r in rows], dtype=float)
    v = np.array([r["v"] for r in rows], dtype=float) if with_latent else None
    return PanelBatch(y0=y0, y=y, x=x, v=v)


def read_panel_csv(path: str | Path, schema: Optional[dict] = None) -> PanelBatch:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    batch = parse_panel_csv(text, schema)
    get_app_logger("panels").info(f"📥 Panel read: {path}", extra={"n": batch.n, "T": batch.T})
    return batch

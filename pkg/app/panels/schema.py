import json
import math
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from app.core.errors import ConfigurationError, SchemaError

SCHEMA_PATH = Path(__file__).with_name("panel_schema.json")
PERIOD_TOKEN = "{t}"


# ---------- Rules loading & preparation ----------

def load_schema(path: Optional[str | Path] = None) -> dict:
    try:
        with open(path or SCHEMA_PATH, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot load panel schema: {e}", path=str(path or SCHEMA_PATH)) from e


def prep_rules(cfg: dict, T: int) -> tuple[Dict[str, dict], List[str], str]:
    """
    (rules, unique_constraints, unique_mode) for a panel with T periods.
    Column names are lower-cased; "{t}" templates expand to t = 1…T.
    """
    rules: Dict[str, dict] = {}
    for field, rule in cfg.get("columns", {}).items():
        r = dict(rule)
        if r.get("regex"):
            r["_regex_compiled"] = re.compile(r["regex"])
        name = field.lower()
        if PERIOD_TOKEN in name:
            for t in range(1, T + 1):
                rules[name.replace(PERIOD_TOKEN, str(t))] = r
        else:
            rules[name] = r
    unique_constraints = [c.lower() for c in cfg.get("unique_constraints", [])]
    unique_mode = cfg.get("unique_mode", "ignore").lower()
    return rules, unique_constraints, unique_mode


def panel_columns(T: int, with_latent: bool = False) -> list[str]:
    cols = ["unit", "y0"]
    for t in range(1, T + 1):
        cols += [f"x{t}", f"y{t}"]
    return cols + (["v"] if with_latent else [])


# ---------- Per row validation ----------

def _convert(value: str, typ: str):
    if typ == "int":
        return int(value)
    if typ == "float":
        out = float(value)
        if not math.isfinite(out):
            raise ValueError("not finite")
        return out
    return str(value)


def validate_row(row: Dict[str, Optional[str]], line: int, rules: Dict[str, dict]) -> Dict[str, object]:
    """Typed copy of a row; the first violated rule raises SchemaError naming the line."""
    out: Dict[str, object] = {}
    for field, rule in rules.items():
        value = row.get(field)
        if value is None or str(value).strip() == "":
            if rule.get("required"):
                raise SchemaError(f"{field} is required", line=line, column=field)
            continue

        typ = rule.get("type", "str")
        try:
            typed = _convert(str(value).strip(), typ)
        except ValueError:
            raise SchemaError(f"{field} invalid {typ}: {value!r}", line=line, column=field)

        rc = rule.get("_regex_compiled")
        if rc and not rc.match(str(value)):
            raise SchemaError(f"{field} does not match pattern", line=line, column=field)
        if "min_exclusive" in rule and not typed > rule["min_exclusive"]:
            raise SchemaError(f"{field} must be > {rule['min_exclusive']}", line=line, column=field)
        if "max_exclusive" in rule and not typed < rule["max_exclusive"]:
            raise SchemaError(f"{field} must be < {rule['max_exclusive']}", line=line, column=field)
        if "allowed" in rule and typed not in rule["allowed"]:
            raise SchemaError(f"{field} must be one of {rule['allowed']}", line=line, column=field)
        out[field] = typed
    return out


# ---------- Duplicates ----------

def check_unique(keys: List[Tuple[int, tuple]], unique_constraints: List[str], unique_mode: str) -> None:
    """keys are (line, key_tuple); repeats after the first raise under fail_all / keep_first."""
    if not unique_constraints or unique_mode == "ignore":
        return
    first_seen: Dict[tuple, int] = {}
    for line, key in keys:
        if key in first_seen:
            raise SchemaError(
                f"duplicate {', '.join(unique_constraints)} (first seen on line {first_seen[key]})",
                line=line, column=unique_constraints[0],
            )
        first_seen[key] = line

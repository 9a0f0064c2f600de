import numpy as np
import pytest

from app.core.errors import DomainError, SchemaError
from app.panels import PanelBatch, PanelPath, format_panel_csv, parse_panel_csv, read_panel_csv, write_panel_csv
from app.panels.schema import load_schema, prep_rules

HEADER = "unit,y0,x1,y1,x2,y2"


def _small_panel(with_v=True) -> PanelBatch:
    return PanelBatch(
        y0=[0.5, 1.25, 2.0],
        y=[[0.1, 0.7], [3.0, 1.0 / 3.0], [2.5e-7, 12.0]],
        x=[[0.0, 1.0], [1.0, 1.0], [0.0, 0.0]],
        v=[0.8, 1.1, 0.95] if with_v else None,
    )


# ---------- writing ----------

def test_header_and_unit_numbering():
    text = format_panel_csv(_small_panel())
    lines = text.split("\n")
    assert lines[0] == HEADER
    assert [line.split(",")[0] for line in lines[1:4]] == ["1", "2", "3"]
    assert text.endswith("\n") and "\r" not in text


def test_latent_column_is_optional():
    assert format_panel_csv(_small_panel(), with_latent=True).splitlines()[0] == HEADER + ",v"
    with pytest.raises(SchemaError):
        format_panel_csv(_small_panel(with_v=False), with_latent=True)


def test_roundtrip_is_byte_identical(tmp_path, panel_b):
    batch = panel_b.take(slice(0, 500))
    path = write_panel_csv(batch, tmp_path / "out" / "panel.csv", with_latent=True)
    first = path.read_bytes()
    back = read_panel_csv(path)
    np.testing.assert_array_equal(back.y, batch.y)
    np.testing.assert_array_equal(back.v, batch.v)
    assert format_panel_csv(back, with_latent=True).encode("utf-8") == first


def test_digits_setting():
    text = format_panel_csv(_small_panel(), digits=3)
    assert text.splitlines()[2].split(",")[5] == "0.333"


# ---------- reading ----------

def test_parses_alternate_delimiters_and_case():
    text = "UNIT;Y0;X1;Y1;X2;Y2\n1;0.5;0;1.5;1;2.0\n2;1.0;1;0.5;0;0.25\n"
    batch = parse_panel_csv(text)
    assert batch.n == 2 and batch.T == 2 and batch.v is None
    np.testing.assert_array_equal(batch.x[:, :, 0], [[0.0, 1.0], [1.0, 0.0]])


def test_three_periods():
    text = "unit,y0,x1,y1,x2,y2,x3,y3\n1,1,0,1,1,2,0,3\n"
    assert parse_panel_csv(text).T == 3


@pytest.mark.parametrize("row, column", [
    ("2,1.0,abc,0.5,0,0.25", "x1"),
    ("2,-1.0,1,0.5,0,0.25", "y0"),
    ("2,1.0,1,0,0,0.25", "y1"),
    ("2,1.0,1,0.5,0,inf", "y2"),
    ("2,1.0,1,,0,0.25", "y1"),
])
def test_bad_values_name_the_line(row, column):
    text = f"{HEADER}\n1,0.5,0,1.5,1,2.0\n{row}\n"
    with pytest.raises(SchemaError) as err:
        parse_panel_csv(text)
    assert err.value.line == 3
    assert err.value.column == column
    assert str(err.value).startswith("line 3:")


def test_wrong_field_count():
    with pytest.raises(SchemaError) as err:
        parse_panel_csv(f"{HEADER}\n1,0.5,0,1.5,1\n")
    assert err.value.line == 2


def test_duplicate_units():
    text = f"{HEADER}\n1,0.5,0,1.5,1,2.0\n1,0.7,0,1.5,1,2.0\n"
    with pytest.raises(SchemaError) as err:
        parse_panel_csv(text)
    assert err.value.line == 3
    assert "first seen on line 2" in err.value.detail


@pytest.mark.parametrize("header", ["unit,y0,x1,y1,y2", "unit,y0,x1,y1,x2,y2,w", "unit,x1,y1,x2,y2,y0x"])
def test_header_problems(header):
    with pytest.raises(SchemaError) as err:
        parse_panel_csv(f"{header}\n1,1,1,1,1,1\n")
    assert err.value.line == 1


def test_single_period_header():
    with pytest.raises(SchemaError):
        parse_panel_csv("unit,y0,x1,y1\n1,1,0,1\n")


def test_empty_inputs():
    with pytest.raises(SchemaError):
        parse_panel_csv("")
    with pytest.raises(SchemaError):
        parse_panel_csv(HEADER + "\n")


def test_latent_column_requires_values():
    with pytest.raises(SchemaError) as err:
        parse_panel_csv(f"{HEADER},v\n1,0.5,0,1.5,1,2.0,\n")
    assert err.value.column == "v"


def test_period_templates_expand():
    rules, unique, mode = prep_rules(load_schema(), 3)
    assert {"x1", "x2", "x3", "y1", "y2", "y3"} <= set(rules)
    assert unique == ["unit"] and mode == "fail_all"


# ---------- containers ----------

def test_batch_validation():
    with pytest.raises(DomainError):
        PanelBatch(y0=[1.0], y=[[1.0, -2.0]], x=[[0.0, 1.0]])
    with pytest.raises(DomainError):
        PanelBatch(y0=[1.0, 2.0], y=[[1.0, 2.0]], x=[[0.0, 1.0]])
    with pytest.raises(DomainError):
        PanelPath(y0=1.0, y=[1.0], x=[0.0])


def test_paths_and_batches_agree():
    batch = _small_panel()
    rebuilt = PanelBatch.from_paths([batch.path(i) for i in range(batch.n)])
    np.testing.assert_array_equal(rebuilt.y, batch.y)
    np.testing.assert_array_equal(rebuilt.v, batch.v)
    np.testing.assert_array_equal(batch.y_prev()[:, 0], batch.y0)
    assert batch.without_latent().v is None

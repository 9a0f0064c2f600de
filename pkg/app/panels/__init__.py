from app.panels.batch import PanelBatch, PanelPath, as_batch
from app.panels.csv_io import format_panel_csv, parse_panel_csv, read_panel_csv, write_panel_csv

__all__ = [
    "PanelBatch",
    "PanelPath",
    "as_batch",
    "format_panel_csv",
    "parse_panel_csv",
    "read_panel_csv",
    "write_panel_csv",
]

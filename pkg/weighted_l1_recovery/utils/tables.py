from __future__ import annotations

import csv
import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import openpyxl
from openpyxl.styles import Font
from openpyxl.utils import get_column_letter

from weighted_l1_recovery.exceptions import ValidationError, throw

TABLE_FORMATS = ("csv", "json", "xlsx")


def cell(value: Any) -> Any:
	"""Plain python value for a table cell; floats keep their round-trip repr."""
	if value is None:
		return None
	if isinstance(value, (bool, np.bool_)):
		return bool(value)
	if isinstance(value, (int, np.integer)):
		return int(value)
	if isinstance(value, (float, np.floating)):
		return float(value)
	return value


def _csv_text(value: Any) -> str:
	value = cell(value)
	if value is None:
		return ""
	if isinstance(value, float):
		return repr(value)
	return str(value)


def write_table(path: str | Path, header: Sequence[str], rows: Sequence[Sequence[Any]], fmt: str = "csv") -> Path:
	"""Write `rows` under `header` as csv, json (list of objects) or xlsx."""
	if fmt not in TABLE_FORMATS:
		throw(f"Unknown table format {fmt!r}; expected one of {', '.join(TABLE_FORMATS)}", ValidationError)

	path = Path(path).with_suffix(f".{fmt}")
	path.parent.mkdir(parents=True, exist_ok=True)

	if fmt == "csv":
		with open(path, "w", newline="") as file:
			writer = csv.writer(file)
			writer.writerow(header)
			for row in rows:
				writer.writerow([_csv_text(v) for v in row])
	elif fmt == "json":
		records = [{h: cell(v) for h, v in zip(header, row)} for row in rows]
		path.write_text(json.dumps(records, indent=1) + "\n")
	else:
		write_xlsx([list(header), *[[cell(v) for v in row] for row in rows]], path.stem, file_path=path)

	return path


def write_xlsx(data, sheet_name, column_widths=None, file_path=None):
	"""Write rows to a single-sheet workbook with a bold header row."""
	column_widths = column_widths or [max(12, len(str(h)) + 2) for h in data[0]]
	wb = openpyxl.Workbook(write_only=True)
	ws = wb.create_sheet(sheet_name[:31], 0)

	for i, column_width in enumerate(column_widths):
		if column_width:
			ws.column_dimensions[get_column_letter(i + 1)].width = column_width

	row1 = ws.row_dimensions[1]
	row1.font = Font(name="Calibri", bold=True)

	for row in data:
		ws.append(row)

	wb.save(file_path)
	return True


def read_csv_table(path: str | Path) -> tuple[list[str], list[list[str]]]:
	with open(path, newline="") as file:
		reader = csv.reader(file)
		header = next(reader)
		return header, [row for row in reader]


def read_xlsx_table(path: str | Path) -> tuple[list[str], list[list[Any]]]:
	"""Header and rows of the first sheet written by write_xlsx."""
	wb = openpyxl.load_workbook(path, read_only=True)
	try:
		rows = [list(row) for row in wb.worksheets[0].iter_rows(values_only=True)]
	finally:
		wb.close()
	return [str(h) for h in rows[0]], rows[1:]


def write_vector(path: str | Path, values, name: str = "value") -> Path:
	"""One-column csv with an index column."""
	values = np.asarray(values, dtype=float)
	return write_table(path, ["index", name], [(i, v) for i, v in enumerate(values)], "csv")


def write_json(path: str | Path, doc: dict) -> Path:
	path = Path(path)
	path.parent.mkdir(parents=True, exist_ok=True)
	path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=cell) + "\n")
	return path


def read_json(path: str | Path) -> dict:
	try:
		return json.loads(Path(path).read_text())
	except (OSError, json.JSONDecodeError) as e:
		throw(f"Cannot read {path}: {e}", ValidationError)

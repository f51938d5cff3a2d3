from __future__ import annotations

import json
import os
from functools import lru_cache
from pathlib import Path
from typing import Any

from weighted_l1_recovery.exceptions import ValidationError, throw

SETTINGS_FILE = Path(__file__).with_name("toolkit_settings.json")
SETTINGS_ENV = "WEIGHTED_L1_SETTINGS"

LAYOUT_FIELDTYPES = ("Section Break", "Column Break")


class _dict(dict):
	"""dict with attribute access"""

	def __getattr__(self, key: str) -> Any:
		try:
			return self[key]
		except KeyError:
			raise AttributeError(key)

	def __setattr__(self, key: str, value: Any) -> None:
		self[key] = value


def _coerce(fieldtype: str, value: Any, fieldname: str) -> Any:
	try:
		if fieldtype == "Float":
			return float(value)
		if fieldtype == "Int":
			return int(value)
		if fieldtype == "Check":
			return bool(int(value))
		return str(value)
	except (TypeError, ValueError):
		throw(f"Invalid value {value!r} for setting {fieldname} ({fieldtype})", ValidationError)


def _load_fields() -> dict[str, dict]:
	meta = json.loads(SETTINGS_FILE.read_text())
	return {f["fieldname"]: f for f in meta["fields"] if f["fieldtype"] not in LAYOUT_FIELDTYPES}


def _load_overrides() -> dict[str, Any]:
	path = (os.environ.get(SETTINGS_ENV) or "").strip()
	if not path:
		return {}

	try:
		data = json.loads(Path(path).read_text())
	except (OSError, json.JSONDecodeError) as e:
		throw(f"Cannot read settings overrides from {path}: {e}", ValidationError)

	if not isinstance(data, dict):
		throw(f"Settings overrides in {path} must be a JSON object", ValidationError)
	return data


@lru_cache(maxsize=1)
def get_settings() -> _dict:
	"""
	Effective toolkit settings: defaults from toolkit_settings.json,
	then overrides from the file named by $WEIGHTED_L1_SETTINGS.
	"""
	fields = _load_fields()
	settings = _dict({name: _coerce(f["fieldtype"], f.get("default"), name) for name, f in fields.items()})

	for key, value in _load_overrides().items():
		if key not in fields:
			throw(f"Unknown setting: {key}", ValidationError)
		settings[key] = _coerce(fields[key]["fieldtype"], value, key)

	return settings


def clear_settings_cache() -> None:
	get_settings.cache_clear()

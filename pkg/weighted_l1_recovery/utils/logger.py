from __future__ import annotations

import logging
import sys
import traceback

ROOT_LOGGER = "weighted_l1_recovery"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def logger(module: str | None = None) -> logging.Logger:
	"""Module logger, e.g. logger("lpsolve") -> weighted_l1_recovery.lpsolve"""
	return logging.getLogger(f"{ROOT_LOGGER}.{module}" if module else ROOT_LOGGER)


def log_error(title: str, message: str | None = None) -> str:
	"""
	Record a handled failure. Without an explicit message the active
	traceback is logged, like an error log entry with its stack.
	"""
	if message is None:
		message = traceback.format_exc()
		if message.strip() == "NoneType: None":
			message = ""

	if message:
		logger().error("%s\n%s", title, message)
	else:
		logger().error("%s", title)
	return message


def configure(level: int = logging.INFO) -> None:
	"""Install a single stream handler on the package logger; used by the CLI only."""
	root = logging.getLogger(ROOT_LOGGER)
	root.setLevel(level)

	if not any(getattr(h, "_weighted_l1", False) for h in root.handlers):
		handler = logging.StreamHandler(sys.stderr)
		handler.setFormatter(logging.Formatter(LOG_FORMAT))
		handler._weighted_l1 = True
		root.addHandler(handler)

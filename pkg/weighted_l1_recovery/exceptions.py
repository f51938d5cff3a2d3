from __future__ import annotations

from typing import Any


class ToolkitError(Exception):
	"""Base class; carries a `diagnostics` dict next to the message."""

	def __init__(self, message: str = "", diagnostics: dict[str, Any] | None = None):
		super().__init__(message)
		self.diagnostics = diagnostics or {}


class ValidationError(ToolkitError):
	pass


class DimensionMismatch(ValidationError):
	pass


class DomainError(ValidationError):
	pass


class CapExceeded(ValidationError):
	pass


class InfeasibleProblem(ToolkitError):
	pass


class QuadratureFailure(ToolkitError):
	pass


class RootBracketFailure(ToolkitError):
	pass


class SolverFailure(ToolkitError):
	"""An LP ended without an optimal point where the caller needs one."""


def throw(message: str, exc: type[ToolkitError] = ValidationError, **diagnostics: Any) -> None:
	"""Raise `exc` with `message`, attaching keyword arguments as diagnostics."""
	raise exc(message, diagnostics=diagnostics)

# Copyright (c) 2025, Weighted L1 Recovery contributors
# For license information, please see license.txt

from __future__ import annotations

import argparse
import importlib
import logging
import sys
from collections.abc import Callable, Sequence

from weighted_l1_recovery import __version__, hooks
from weighted_l1_recovery.api.commands import FLAGS
from weighted_l1_recovery.api.invocation import DEFAULT_OUT, EXIT_ERROR, Invocation
from weighted_l1_recovery.exceptions import ToolkitError, ValidationError
from weighted_l1_recovery.utils.logger import configure, log_error
from weighted_l1_recovery.utils.tables import TABLE_FORMATS


def get_attr(method_path: str) -> Callable:
	"""Handler from its dotted path in hooks.commands."""
	module, _, name = method_path.rpartition(".")
	return getattr(importlib.import_module(module), name)


def _common_options() -> argparse.ArgumentParser:
	common = argparse.ArgumentParser(add_help=False)
	common.add_argument("--out", help=f"output directory (default {DEFAULT_OUT})")
	common.add_argument("--format", choices=TABLE_FORMATS, help="table format (default csv)")
	common.add_argument("--plot", action="store_true", default=None, help="also write an SVG plot")
	common.add_argument("--seed", type=int, help="base seed")
	common.add_argument("--threads", type=int, help="worker cap, 0 uses every core")
	common.add_argument("--manifest", help="re-run from a manifest.json written by an earlier run")
	common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
	return common


def build_parser() -> argparse.ArgumentParser:
	parser = argparse.ArgumentParser(
		prog="weighted-l1",
		description="Weighted l1 recovery of non-uniformly sparse signals and their weak thresholds.",
	)
	parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
	subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")

	common = _common_options()
	for command, method_path in hooks.commands.items():
		handler = get_attr(method_path)
		summary = handler.__doc__.strip().splitlines()[0] if handler.__doc__ else None
		sub = subparsers.add_parser(command, parents=[common], help=summary, description=summary)
		for name, kind, help_text in FLAGS[command]:
			sub.add_argument("--" + name.replace("_", "-"), dest=name, type=kind, help=help_text)
		sub.set_defaults(param_names=[name for name, _, _ in FLAGS[command]], usage=sub.format_usage())

	return parser


def main(argv: Sequence[str] | None = None) -> int:
	args = build_parser().parse_args(argv)
	configure(logging.DEBUG if args.verbose else logging.INFO)

	try:
		inv = Invocation.from_args(args)
		return get_attr(hooks.commands[inv.command])(inv)
	except ValidationError as e:
		print(f"error: {e}", file=sys.stderr)
		print(args.usage, end="", file=sys.stderr)
		return EXIT_ERROR
	except ToolkitError as e:
		print(f"error: {e}", file=sys.stderr)
		return EXIT_ERROR
	except Exception:
		log_error(f"weighted-l1 {args.command} failed")
		return EXIT_ERROR


if __name__ == "__main__":
	sys.exit(main())

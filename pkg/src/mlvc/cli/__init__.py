"""Command-line entry point: ``mlvc <command> <config.ini> [--set section.key=value ...]``."""
from __future__ import annotations

import argparse
import sys

from ..checkpoint import CheckpointError
from .commands import COMMANDS, shard_names
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .runs import MissingInput
from .submission import format_submission, read_submission, write_submission


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mlvc", description="Multi-label video classification experiments.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="experiment config (INI)")
    parser.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config value; repeatable")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        COMMANDS[args.command](cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (MissingInput, FileNotFoundError) as err:
        print(f"missing input: {err}", file=sys.stderr)
        return 1
    except CheckpointError as err:
        print(f"checkpoint error: {err}", file=sys.stderr)
        return 1
    return 0


__all__ = ["COMMANDS", "ConfigError", "ExperimentConfig", "MissingInput", "format_submission", "load_config",
           "main", "parse_config", "read_submission", "shard_names", "write_submission"]

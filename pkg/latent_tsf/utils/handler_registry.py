#!/usr/bin/env python3
"""
Latent TSF Handler Registry Module
Routes subcommands to handlers, runs middleware and maps errors to exit codes
"""

import argparse
import json
import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from latent_tsf.utils.errors import ConfigError, LatentTSFError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2


@dataclass
class CommandContext:
    command: str
    args: argparse.Namespace
    config: Any


class BaseHandler(ABC):
    def __init__(self, name: str, description: str, usage: str = ""):
        self.name = name
        self.description = description
        self.usage = usage
        self.aliases: List[str] = []

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """Declare subcommand flags."""

    @abstractmethod
    def handle(self, context: CommandContext) -> int:
        """Run the subcommand; returns the process exit code."""

    def add_alias(self, alias: str) -> 'BaseHandler':
        self.aliases.append(alias)
        return self

    def get_help_text(self) -> str:
        help_text = f"{self.name}"
        if self.aliases:
            help_text += f" (aliases: {', '.join(self.aliases)})"
        help_text += f"\n    {self.description}"
        if self.usage:
            help_text += f"\n    Usage: {self.usage}"
        return help_text

    @staticmethod
    def write_json(path: Path, data: Dict[str, Any]) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2)
        logger.info(f"📄 Wrote {path}")
        return path

    @staticmethod
    def resolve_run_dir(context: CommandContext, dataset: str, seed: int) -> Path:
        """--output-dir, or <LATENT_TSF_OUTPUT_DIR>/<command>_<dataset>_seed<seed>."""
        explicit = getattr(context.args, "output_dir", None)
        if explicit:
            run_dir = Path(explicit)
        else:
            run_dir = Path(context.config.OUTPUT_DIR) / f"{context.command}_{dataset}_seed{seed}"
        run_dir.mkdir(parents=True, exist_ok=True)
        return run_dir


class HandlerRegistry:
    def __init__(self, config_class):
        self.config = config_class
        self.handlers: Dict[str, BaseHandler] = {}
        self.aliases: Dict[str, str] = {}
        self.middleware: List[Callable[[CommandContext], bool]] = []

    def register(self, handler: BaseHandler) -> None:
        """Add a handler; command names and aliases share one case-insensitive namespace."""
        names = [handler.name.lower()] + [alias.lower() for alias in handler.aliases]
        taken = [name for name in names if name in self.handlers or name in self.aliases]
        if taken:
            raise ConfigError(f"Command name(s) already registered: {', '.join(taken)}")
        self.handlers[names[0]] = handler
        self.aliases.update({alias: names[0] for alias in names[1:]})
        logger.debug(f"✅ Registered handler: {names[0]}")

    def get_handler(self, command_name: str) -> Optional[BaseHandler]:
        key = command_name.lower()
        return self.handlers.get(self.aliases.get(key, key))

    def list_commands(self) -> List[str]:
        return sorted(self.handlers)

    def add_middleware(self, middleware_func: Callable[[CommandContext], bool]) -> None:
        self.middleware.append(middleware_func)
        logger.debug(f"✅ Added middleware: {middleware_func.__name__}")

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="latent-tsf",
            description="Latent-space time-series forecasting experiments",
        )
        subparsers = parser.add_subparsers(dest="command", metavar="command")
        for name in sorted(self.handlers):
            handler = self.handlers[name]
            subparser = subparsers.add_parser(name, aliases=handler.aliases, help=handler.description,
                                              description=handler.description)
            handler.add_arguments(subparser)
        return parser

    def execute_command(self, context: CommandContext) -> int:
        handler = self.get_handler(context.command)
        if not handler:
            available = ", ".join(self.list_commands())
            logger.error(f"❓ Unknown command: {context.command} (available: {available})")
            return EXIT_USAGE
        context.command = handler.name

        try:
            for middleware in self.middleware:
                if not middleware(context):
                    logger.info(f"🚫 Middleware blocked command: {context.command}")
                    return EXIT_USAGE

            logger.info(f"🎯 Running {context.command}")
            started = time.perf_counter()
            exit_code = handler.handle(context)
            elapsed = time.perf_counter() - started
            if exit_code == EXIT_OK:
                logger.info(f"✅ {context.command} finished in {elapsed:.2f}s")
            else:
                logger.warning(f"⚠️ Command failed: {context.command} (exit {exit_code})")
            return exit_code
        except LatentTSFError as e:
            logger.error(f"❌ {type(e).__name__} in {context.command}: {e}")
            return e.exit_code
        except Exception as e:
            logger.exception(f"❌ Unexpected error executing command {context.command}: {e}")
            return EXIT_UNEXPECTED

    def get_help_text(self, command_name: Optional[str] = None) -> str:
        if command_name:
            handler = self.get_handler(command_name)
            if handler:
                return handler.get_help_text()
            return f"❓ Unknown command: {command_name}"
        sections = [self.handlers[name].get_help_text() for name in self.list_commands()]
        return "🧪 Latent TSF commands:\n\n" + "\n\n".join(sections)


def seed_policy_middleware(context: CommandContext) -> bool:
    """--strict runs need an explicit --seed; otherwise a missing seed only warns."""
    args = context.args
    if not hasattr(args, "seed") or args.seed is not None:
        return True
    if getattr(args, "strict", False):
        raise ConfigError(f"--strict requires --seed for '{context.command}'")
    logger.warning(f"⚠️ No --seed given for '{context.command}'; using training.seed from the config file")
    return True

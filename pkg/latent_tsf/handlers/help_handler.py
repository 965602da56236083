#!/usr/bin/env python3
"""
Help Handler - list subcommands or show one command's usage
"""

import logging

from latent_tsf.utils.handler_registry import EXIT_OK, EXIT_USAGE, BaseHandler, CommandContext

logger = logging.getLogger(__name__)


class HelpHandler(BaseHandler):
    def __init__(self, registry):
        super().__init__(
            name="help",
            description="Show available commands and their descriptions",
            usage="help [command]",
        )
        self.add_alias("h")
        self.registry = registry

    def add_arguments(self, parser):
        parser.add_argument("topic", nargs="?", default=None, help="command to describe")

    def handle(self, context: CommandContext) -> int:
        topic = context.args.topic
        if topic and not self.registry.get_handler(topic):
            print(self.registry.get_help_text(topic))
            return EXIT_USAGE

        print(self.registry.get_help_text(topic))
        if not topic:
            print(context.config.get_config_summary())
        return EXIT_OK

#!/usr/bin/env python3
"""
Latent TSF command-line entry point
pretrain-ae / train / eval / diagnose / help
"""

import logging
import sys
from typing import List, Optional

from latent_tsf.handlers.diagnose_handler import DiagnoseHandler
from latent_tsf.handlers.eval_handler import EvalHandler
from latent_tsf.handlers.help_handler import HelpHandler
from latent_tsf.handlers.pretrain_handler import PretrainHandler
from latent_tsf.handlers.train_handler import TrainHandler
from latent_tsf.utils.config import Config
from latent_tsf.utils.errors import LatentTSFError
from latent_tsf.utils.handler_registry import CommandContext, HandlerRegistry, seed_policy_middleware

logger = logging.getLogger(__name__)


def build_registry() -> HandlerRegistry:
    registry = HandlerRegistry(Config)
    registry.register(PretrainHandler())
    registry.register(TrainHandler())
    registry.register(EvalHandler())
    registry.register(DiagnoseHandler())
    registry.register(HelpHandler(registry))
    registry.add_middleware(seed_policy_middleware)
    return registry


def main(argv: Optional[List[str]] = None) -> int:
    Config.setup_logging()
    try:
        Config.validate_config()
    except LatentTSFError as e:
        logger.error(f"❌ {e}")
        return e.exit_code

    registry = build_registry()
    parser = registry.build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        print(registry.get_help_text())
        return 0

    context = CommandContext(command=args.command, args=args, config=Config)
    return registry.execute_command(context)


if __name__ == "__main__":
    sys.exit(main())

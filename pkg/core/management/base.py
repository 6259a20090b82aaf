"""
Base management command for the toolkit's subcommands.

Translates the toolkit's error hierarchy into process exit codes and makes
argparse usage errors exit with code 1 instead of argparse's default 2.
"""

import logging
import sys

from django.core.management.base import BaseCommand, CommandError

from core.configuration import layered_config, load_config_file
from core.exceptions import (
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_USAGE,
    ConfigError,
    DatasetFormatError,
    NumericError,
    ShapeError,
)

logger = logging.getLogger(__name__)


class CorrNetCommand(BaseCommand):
    """
    BaseCommand with exit-code mapping.

    Subclasses implement run(**options) instead of handle().
    """

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        command = self

        def usage_error(message):
            if parser.called_from_command_line:
                parser.print_usage(sys.stderr)
                command.stderr.write(f"{prog_name} {subcommand}: error: {message}")
                sys.exit(EXIT_USAGE)
            raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)

        parser.error = usage_error
        return parser

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except (ConfigError, ShapeError) as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE) from exc
        except NumericError as exc:
            logger.error(f"Numeric failure: {exc}")
            raise CommandError(str(exc), returncode=EXIT_NUMERIC) from exc
        except (DatasetFormatError, OSError) as exc:
            raise CommandError(str(exc), returncode=EXIT_IO) from exc

    def run(self, **options):
        raise NotImplementedError("subclasses of CorrNetCommand must provide run()")

    def layered_options(self, defaults, options, flag_map):
        """
        Settings defaults < --config JSON < explicit flags.

        Args:
            defaults: Base values keyed by config field
            options: Parsed command options
            flag_map: Option dest -> config field
        """
        flags = {field: options.get(dest) for dest, field in flag_map.items()}
        return layered_config(defaults, load_config_file(options.get("config")), flags)

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(message))

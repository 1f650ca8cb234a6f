"""
Ponto de entrada único: `python -m core.cli <subcomando> [opções]`.

Os subcomandos hifenizados mapeiam para os comandos de gerenciamento do app
harness (também disponíveis via `python manage.py <nome_com_underscore>`).
"""
from __future__ import annotations

import os
import sys

import django
from django.core.management import call_command, load_command_class
from django.core.management.base import CommandError

SUBCOMMANDS = {
    "gen-data": "gen_data",
    "train": "train",
    "eval": "evaluate",
    "analyze": "analyze",
    "param-count": "param_count",
    "grad-check": "grad_check",
}
COMMANDS_APP = "apps.harness"
USAGE = "uso: python -m core.cli {" + ",".join(SUBCOMMANDS) + "} [opções]"


def _print_help(command: str) -> None:
    parser = load_command_class(COMMANDS_APP, command).create_parser("core.cli", command)
    parser.print_help(sys.stderr)


def cli_dispatch(argv: list[str]) -> int:
    """Executa um subcomando; 0 em sucesso, 1 em erro de uso, 2 em falha de execução."""
    if not argv or argv[0] not in SUBCOMMANDS:
        if argv and argv[0] in ("-h", "--help"):
            print(USAGE)
            return 0
        print(USAGE, file=sys.stderr)
        if argv:
            print(f"Subcomando desconhecido: '{argv[0]}'", file=sys.stderr)
        return 1

    command = SUBCOMMANDS[argv[0]]
    try:
        call_command(command, *argv[1:])
    except CommandError as e:
        print(e, file=sys.stderr)
        if e.returncode == 1:
            _print_help(command)
        return e.returncode
    except SystemExit as e:
        # --help do argparse
        return e.code if isinstance(e.code, int) else 0
    return 0


def main() -> None:
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "multiconvformer.settings")
    django.setup()
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()

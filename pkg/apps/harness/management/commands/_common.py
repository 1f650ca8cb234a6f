"""Base e opções compartilhadas pelos comandos do harness."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from apps.encoder.config import EncoderConfig
from apps.multiconv.choices import ConvBlockKind, FusionKind
from apps.multiconv.params import validate_kernels
from core.exceptions import ConfigurationError, MulticonvError
from core.utils import read_json

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
RUNTIME_ERROR = 2


def parse_kernels(value: str) -> tuple[int, ...]:
    """'7,15,23,31' -> (7, 15, 23, 31); rejeita kernels pares ou fora de ordem."""
    try:
        kernels = tuple(int(part) for part in value.split(",") if part.strip())
        return validate_kernels(kernels)
    except (ValueError, ConfigurationError) as e:
        raise argparse.ArgumentTypeError(f"conjunto de kernels inválido '{value}': {e}") from None


def validation_message(error: ValidationError) -> str:
    if hasattr(error, "message_dict"):
        return "; ".join(f"{field}: {' '.join(messages)}" for field, messages in error.message_dict.items())
    return " ".join(error.messages)


class MulticonvCommand(BaseCommand):
    """
    Comando com as opções comuns (--config, --seed, --out) e o mapeamento de
    erros para códigos de saída: validação e argumentos -> 1, falhas de
    execução (`MulticonvError`) -> 2. Subclasses implementam `run()`.
    """

    encoder_options = False

    def add_arguments(self, parser):
        parser.add_argument("--config", type=Path, help="Arquivo JSON de configuração.")
        parser.add_argument("--seed", type=int, help="Semente mestre.")
        parser.add_argument("--out", type=Path, help="Arquivo ou diretório de saída.")
        if self.encoder_options:
            parser.add_argument("--fusion", choices=FusionKind.values, help="Estratégia de fusão do M-CSGU.")
            parser.add_argument("--kernels", type=parse_kernels, help="Kernels ímpares, ex.: 7,15,23,31.")
            parser.add_argument("--conv-block", choices=ConvBlockKind.values, help="Bloco de convolução da camada.")

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except ValidationError as e:
            raise CommandError(f"Configuração inválida: {validation_message(e)}", returncode=USAGE_ERROR) from e
        except MulticonvError as e:
            logger.error(f"{type(e).__name__}: {e}")
            raise CommandError(str(e), returncode=RUNTIME_ERROR) from e

    def run(self, **options):
        raise NotImplementedError

    def default_output(self, name: str) -> Path:
        return Path(settings.MULTICONV_OUTPUT_ROOT) / name

    def encoder_overrides(self, options: dict) -> dict:
        overrides = {}
        for option, name in (("fusion", "fusion"), ("kernels", "kernels"), ("conv_block", "conv_block"), ("seed", "seed")):
            if options.get(option) is not None:
                overrides[name] = options[option]
        return overrides

    def resolve_encoder_config(self, options: dict, base: EncoderConfig | None = None) -> EncoderConfig:
        """JSON (ou `base`) com as opções da linha de comando por cima, já validado."""
        if base is None:
            base = EncoderConfig.from_dict(read_json(options["config"])) if options.get("config") else EncoderConfig()
        cfg = base.replace(**self.encoder_overrides(options))
        cfg.full_clean()
        return cfg

    def write_table(self, df, float_format: str = "{:.4f}") -> None:
        self.stdout.write(df.to_string(index=False, float_format=float_format.format))

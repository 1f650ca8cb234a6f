from __future__ import annotations

import logging
from typing import Iterable, Sequence

import pandas as pd

from apps.encoder.config import EncoderConfig
from apps.encoder.counting import BLOCKS, analytic_param_count, param_count
from apps.encoder.params import EncoderParams
from apps.multiconv.choices import ConvBlockKind
from core.exceptions import ParameterIntegrityError

logger = logging.getLogger(__name__)


def variant_label(cfg: EncoderConfig) -> str:
    if cfg.conv_block == ConvBlockKind.MULTICONV:
        return f"multiconv-{cfg.fusion}"
    return str(cfg.conv_block)


def param_report(models: Iterable[EncoderParams]) -> pd.DataFrame:
    """
    Totais por variante e deltas contra a primeira, conferidos com a contagem fechada.

    `models` pode ser um gerador: cada modelo é contado e descartado antes do
    próximo. Divergência entre medido e fórmula levanta `ParameterIntegrityError`
    nomeando o bloco.
    """
    rows, reference = [], None
    for params in models:
        cfg = params.config
        measured = param_count(params).as_dict()
        expected = analytic_param_count(cfg).as_dict()
        for block in (*BLOCKS, "total"):
            if measured[block] != expected[block]:
                raise ParameterIntegrityError(f"{variant_label(cfg)}:{block}", measured[block], expected[block])
        if reference is None:
            reference = (measured["total"], expected["total"])
        delta, expected_delta = measured["total"] - reference[0], expected["total"] - reference[1]
        if delta != expected_delta:
            raise ParameterIntegrityError(f"{variant_label(cfg)}:delta", delta, expected_delta)
        rows.append({"variant": variant_label(cfg), **measured, "delta": delta})
        logger.debug(f"Parâmetros de {variant_label(cfg)}: {measured['total']}")
    return pd.DataFrame(rows, columns=["variant", *BLOCKS, "total", "delta"])


def comparison_configs(cfg: EncoderConfig) -> list[EncoderConfig]:
    """As quatro fusões do MultiConv seguidas dos baselines CSGU e Conformer."""
    variants = [cfg.replace(conv_block=ConvBlockKind.MULTICONV, fusion=f) for f in ("sum", "weighted", "concat", "depth")]
    variants += [cfg.replace(conv_block=ConvBlockKind.CSGU), cfg.replace(conv_block=ConvBlockKind.CONFORMER)]
    return variants


def kernel_sweep_report(base: EncoderConfig, kernel_sets: Sequence[Sequence[int]]) -> pd.DataFrame:
    """Totais (fórmula fechada) para vários conjuntos K na mesma configuração."""
    rows = []
    for kernels in kernel_sets:
        cfg = base.replace(kernels=tuple(kernels))
        cfg.full_clean()
        counts = analytic_param_count(cfg)
        rows.append(
            {
                "kernels": ",".join(str(k) for k in cfg.kernels),
                "P": len(cfg.kernels),
                "conv_block": counts.blocks["conv_block"],
                "total": counts.total,
            }
        )
    return pd.DataFrame(rows, columns=["kernels", "P", "conv_block", "total"])

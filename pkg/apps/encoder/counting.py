from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from apps.encoder.config import EncoderConfig
from apps.encoder.params import EncoderParams
from apps.layers.params import subsampled_extent
from apps.multiconv.choices import ConvBlockKind
from apps.multiconv.params import conv_param_count

BLOCKS = ("subsampler", "ffn", "mha", "conv_block", "norms")

# campo da camada -> bloco do relatório
_LAYER_FIELD_BLOCK = {
    "ffn1": "ffn",
    "ffn2": "ffn",
    "mha": "mha",
    "conv_block": "conv_block",
    "ffn1_norm": "norms",
    "mha_norm": "norms",
    "ffn2_norm": "norms",
    "final_norm": "norms",
}


@dataclass
class ParamCount:
    blocks: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.blocks.values())

    def as_dict(self) -> dict[str, int]:
        return {**self.blocks, "total": self.total}


def param_count(params: EncoderParams) -> ParamCount:
    """Conta os escalares treináveis de um encoder construído, agrupados por bloco."""
    counts = Counter({block: 0 for block in BLOCKS})
    for name, tensor in params.named_parameters():
        parts = name.split(".")
        block = "subsampler" if parts[0] == "subsampler" else _LAYER_FIELD_BLOCK[parts[2]]
        counts[block] += tensor.size
    return ParamCount({block: counts[block] for block in BLOCKS})


def _linear(c_in: int, c_out: int) -> int:
    return c_in * c_out + c_out


def conv_block_param_count(cfg: EncoderConfig) -> int:
    """Parâmetros de um bloco de convolução (incluindo sua pré-norma) em uma camada."""
    d, d_prime = cfg.d_model, cfg.d_prime
    if cfg.conv_block == ConvBlockKind.CONFORMER:
        k = cfg.conformer_kernel
        return 2 * d + _linear(d, 2 * d) + (d * k + d) + 2 * d + _linear(d, d)
    envelope = 2 * d + _linear(d, cfg.d_inter) + 2 * d_prime + _linear(d_prime, d)
    if cfg.conv_block == ConvBlockKind.CSGU:
        return envelope + d_prime * cfg.csgu_kernel + d_prime
    return envelope + conv_param_count(cfg.fusion, d_prime, cfg.kernels, cfg.final_kernel)


def analytic_param_count(cfg: EncoderConfig) -> ParamCount:
    """Contagem fechada, sem construir o modelo."""
    d, n = cfg.d_model, cfg.num_layers
    freq = subsampled_extent(cfg.feature_dim)
    return ParamCount(
        {
            "subsampler": (9 * d + d) + (9 * d * d + d) + _linear(d * freq, d),
            "ffn": n * 2 * (_linear(d, cfg.d_ffn) + _linear(cfg.d_ffn, d)),
            "mha": n * 4 * _linear(d, d),
            "conv_block": n * conv_block_param_count(cfg),
            "norms": n * 4 * 2 * d,
        }
    )

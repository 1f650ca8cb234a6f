from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from apps.attention.mha import MhaParams
from apps.layers.params import LayerNormParams, LinearParams, ParamsMixin, SubsamplerParams
from apps.multiconv.choices import ConvBlockKind
from apps.multiconv.params import ConformerConvParams, CsguBlockParams, MultiConvBlockParams
from apps.encoder.config import EncoderConfig


@dataclass
class FeedForwardParams(ParamsMixin):
    """FFN posicional d -> d_ffn -> d com GELU interna."""

    inner: LinearParams
    outer: LinearParams

    @classmethod
    def build(cls, d_model: int, d_ffn: int, rng: np.random.Generator, dtype=np.float64) -> FeedForwardParams:
        return cls(
            inner=LinearParams.build(d_model, d_ffn, rng, dtype),
            outer=LinearParams.build(d_ffn, d_model, rng, dtype),
        )


@dataclass
class EncoderLayerParams(ParamsMixin):
    ffn1_norm: LayerNormParams
    ffn1: FeedForwardParams
    mha_norm: LayerNormParams
    mha: MhaParams
    conv_block: MultiConvBlockParams | CsguBlockParams | ConformerConvParams
    ffn2_norm: LayerNormParams
    ffn2: FeedForwardParams
    final_norm: LayerNormParams
    dropout: float = 0.1

    @property
    def d_model(self) -> int:
        return self.final_norm.channels

    @classmethod
    def build(cls, cfg: EncoderConfig, rng: np.random.Generator, dtype=np.float64) -> EncoderLayerParams:
        d = cfg.d_model
        return cls(
            ffn1_norm=LayerNormParams.build(d, dtype),
            ffn1=FeedForwardParams.build(d, cfg.d_ffn, rng, dtype),
            mha_norm=LayerNormParams.build(d, dtype),
            mha=MhaParams.build(d, cfg.heads, rng, dtype),
            conv_block=build_conv_block(cfg, rng, dtype),
            ffn2_norm=LayerNormParams.build(d, dtype),
            ffn2=FeedForwardParams.build(d, cfg.d_ffn, rng, dtype),
            final_norm=LayerNormParams.build(d, dtype),
            dropout=cfg.dropout,
        )


def build_conv_block(cfg: EncoderConfig, rng: np.random.Generator, dtype=np.float64):
    if cfg.conv_block == ConvBlockKind.CSGU:
        return CsguBlockParams.build(cfg.d_model, cfg.d_inter, cfg.csgu_kernel, rng, dtype, cfg.dropout)
    if cfg.conv_block == ConvBlockKind.CONFORMER:
        return ConformerConvParams.build(cfg.d_model, cfg.conformer_kernel, rng, dtype, cfg.dropout)
    return MultiConvBlockParams.build(
        cfg.d_model, cfg.d_inter, cfg.kernels, cfg.fusion, rng, dtype, cfg.dropout, cfg.final_kernel
    )


@dataclass
class EncoderParams(ParamsMixin):
    """Front-end de subamostragem seguido de N camadas; guarda a configuração que o gerou."""

    config: EncoderConfig = field(compare=False)
    subsampler: SubsamplerParams
    layers: list[EncoderLayerParams]

    @property
    def dtype(self) -> np.dtype:
        return self.subsampler.linear.weight.dtype

    @classmethod
    def build(cls, cfg: EncoderConfig, dtype=np.float64, rng: np.random.Generator | None = None) -> EncoderParams:
        """Valida `cfg` e inicializa os pesos a partir de `cfg.seed` (ou de `rng`)."""
        cfg.full_clean()
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        return cls(
            config=cfg,
            subsampler=SubsamplerParams.build(cfg.feature_dim, cfg.d_model, rng, dtype),
            layers=[EncoderLayerParams.build(cfg, rng, dtype) for _ in range(cfg.num_layers)],
        )

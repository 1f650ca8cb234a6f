from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from apps.layers.params import (
    DepthwiseConvParams,
    GroupedConvParams,
    LayerNormParams,
    LinearParams,
    ParamsMixin,
)
from apps.multiconv.choices import GROUPED_FUSIONS, FusionKind
from core.exceptions import ConfigurationError

DEFAULT_KERNELS = (7, 15, 23, 31)
DEFAULT_CONFORMER_KERNEL = 31


def validate_kernels(kernels: Sequence[int]) -> tuple[int, ...]:
    """Kernels ímpares, positivos e estritamente crescentes."""
    kernels = tuple(int(k) for k in kernels)
    if not kernels:
        raise ConfigurationError("O conjunto de kernels não pode ser vazio.")
    bad = [k for k in kernels if k < 1 or k % 2 == 0]
    if bad:
        raise ConfigurationError(f"Kernels devem ser ímpares e positivos; inválidos: {bad}")
    if any(b <= a for a, b in zip(kernels, kernels[1:])):
        raise ConfigurationError(f"Kernels devem ser estritamente crescentes; recebido {list(kernels)}")
    return kernels


def conv_param_count(fusion: str, d_prime: int, kernels: Sequence[int], final_kernel: int | None = None) -> int:
    """
    Parâmetros das convoluções de um M-CSGU (sem a layer norm do gate).

    sum: Σ(d'·k + d'); weighted: sum + d'·P + P;
    concat: Σ d'·k + d'; depth: concat + d'·k_f + d'.
    """
    kernels = validate_kernels(kernels)
    count = len(kernels)
    if fusion in (FusionKind.SUM, FusionKind.WEIGHTED):
        total = sum(d_prime * k + d_prime for k in kernels)
        if fusion == FusionKind.WEIGHTED:
            total += d_prime * count + count
        return total
    total = sum(d_prime * k for k in kernels) + d_prime
    if fusion == FusionKind.DEPTH:
        k_f = final_kernel or max(kernels)
        total += d_prime * k_f + d_prime
    return total


@dataclass
class McsguParams(ParamsMixin):
    """
    Estado treinável de um M-CSGU.

    `convs` guarda uma convolução por kernel: depthwise sobre d' (sum/weighted)
    ou agrupada com G = d'/P grupos de P canais contíguos (concat/depth).
    """

    fusion: str
    kernels: tuple[int, ...]
    gate_norm: LayerNormParams
    convs: list = field(default_factory=list)
    weighted_ffn: LinearParams | None = None
    final_depthwise: DepthwiseConvParams | None = None

    def __post_init__(self):
        self.kernels = validate_kernels(self.kernels)
        if self.fusion not in FusionKind.values:
            raise ConfigurationError(f"Fusão desconhecida: '{self.fusion}'.")
        if len(self.convs) != self.num_kernels:
            raise ConfigurationError(f"Esperadas {self.num_kernels} convoluções, recebidas {len(self.convs)}.")
        if (self.fusion == FusionKind.WEIGHTED) != (self.weighted_ffn is not None):
            raise ConfigurationError("weighted_ffn existe somente na fusão ponderada.")
        if (self.fusion == FusionKind.DEPTH) != (self.final_depthwise is not None):
            raise ConfigurationError("final_depthwise existe somente na fusão depth.")

    @property
    def d_prime(self) -> int:
        return self.gate_norm.channels

    @property
    def num_kernels(self) -> int:
        return len(self.kernels)

    @classmethod
    def build(
        cls,
        d_prime: int,
        kernels: Sequence[int],
        fusion: str,
        rng: np.random.Generator,
        dtype=np.float64,
        final_kernel: int | None = None,
    ) -> McsguParams:
        kernels = validate_kernels(kernels)
        count = len(kernels)
        if fusion in GROUPED_FUSIONS:
            if d_prime % count != 0:
                raise ConfigurationError(f"P={count} não divide d'={d_prime} na fusão '{fusion}'.")
            convs = [GroupedConvParams.build(d_prime, d_prime // count, k, rng, dtype) for k in kernels]
        else:
            convs = [DepthwiseConvParams.build(d_prime, k, rng, dtype) for k in kernels]
        return cls(
            fusion=fusion,
            kernels=kernels,
            gate_norm=LayerNormParams.build(d_prime, dtype),
            convs=convs,
            weighted_ffn=LinearParams.build(d_prime, count, rng, dtype) if fusion == FusionKind.WEIGHTED else None,
            final_depthwise=(
                DepthwiseConvParams.build(d_prime, final_kernel or max(kernels), rng, dtype)
                if fusion == FusionKind.DEPTH
                else None
            ),
        )


@dataclass
class MultiConvBlockParams(ParamsMixin):
    pre_norm: LayerNormParams
    up_proj: LinearParams
    mcsgu: McsguParams
    down_proj: LinearParams
    dropout: float = 0.1

    @property
    def d_model(self) -> int:
        return self.up_proj.in_features

    @property
    def d_inter(self) -> int:
        return self.up_proj.out_features

    @classmethod
    def build(
        cls,
        d_model: int,
        d_inter: int,
        kernels: Sequence[int],
        fusion: str,
        rng: np.random.Generator,
        dtype=np.float64,
        dropout: float = 0.1,
        final_kernel: int | None = None,
    ) -> MultiConvBlockParams:
        if d_inter % 2 != 0:
            raise ConfigurationError(f"d_inter={d_inter} deve ser par.")
        d_prime = d_inter // 2
        return cls(
            pre_norm=LayerNormParams.build(d_model, dtype),
            up_proj=LinearParams.build(d_model, d_inter, rng, dtype),
            mcsgu=McsguParams.build(d_prime, kernels, fusion, rng, dtype, final_kernel),
            down_proj=LinearParams.build(d_prime, d_model, rng, dtype),
            dropout=dropout,
        )


@dataclass
class CsguBlockParams(ParamsMixin):
    """Bloco CgConv: o mesmo envelope do MultiConv com um único kernel depthwise."""

    pre_norm: LayerNormParams
    up_proj: LinearParams
    gate_norm: LayerNormParams
    kernel: DepthwiseConvParams
    down_proj: LinearParams
    dropout: float = 0.1

    @classmethod
    def build(
        cls,
        d_model: int,
        d_inter: int,
        kernel_size: int,
        rng: np.random.Generator,
        dtype=np.float64,
        dropout: float = 0.1,
    ) -> CsguBlockParams:
        if d_inter % 2 != 0:
            raise ConfigurationError(f"d_inter={d_inter} deve ser par.")
        d_prime = d_inter // 2
        return cls(
            pre_norm=LayerNormParams.build(d_model, dtype),
            up_proj=LinearParams.build(d_model, d_inter, rng, dtype),
            gate_norm=LayerNormParams.build(d_prime, dtype),
            kernel=DepthwiseConvParams.build(d_prime, kernel_size, rng, dtype),
            down_proj=LinearParams.build(d_prime, d_model, rng, dtype),
            dropout=dropout,
        )

    @classmethod
    def sharing(cls, block: MultiConvBlockParams) -> CsguBlockParams:
        """CSGU que reaproveita os tensores de um MultiConv com P=1 e fusão sum."""
        mcsgu = block.mcsgu
        if mcsgu.fusion != FusionKind.SUM or mcsgu.num_kernels != 1:
            raise ConfigurationError("Só um MultiConv com um kernel e fusão sum equivale a um CSGU.")
        return cls(
            pre_norm=block.pre_norm,
            up_proj=block.up_proj,
            gate_norm=mcsgu.gate_norm,
            kernel=mcsgu.convs[0],
            down_proj=block.down_proj,
            dropout=block.dropout,
        )


@dataclass
class ConformerConvParams(ParamsMixin):
    """Módulo de convolução do Conformer, com layer norm no lugar de batch norm."""

    pre_norm: LayerNormParams
    pointwise_in: LinearParams  # d -> 2d, seguido de GLU
    depthwise: DepthwiseConvParams
    conv_norm: LayerNormParams
    pointwise_out: LinearParams
    dropout: float = 0.1

    @property
    def d_model(self) -> int:
        return self.pre_norm.channels

    @classmethod
    def build(
        cls,
        d_model: int,
        kernel_size: int,
        rng: np.random.Generator,
        dtype=np.float64,
        dropout: float = 0.1,
    ) -> ConformerConvParams:
        return cls(
            pre_norm=LayerNormParams.build(d_model, dtype),
            pointwise_in=LinearParams.build(d_model, 2 * d_model, rng, dtype),
            depthwise=DepthwiseConvParams.build(d_model, kernel_size, rng, dtype),
            conv_norm=LayerNormParams.build(d_model, dtype),
            pointwise_out=LinearParams.build(d_model, d_model, rng, dtype),
            dropout=dropout,
        )

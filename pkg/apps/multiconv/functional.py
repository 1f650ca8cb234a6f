"""
Forward do M-CSGU, das quatro fusões e dos blocos de convolução comparados.

[Z_l, Z_r] = split(Â);  Z_r <- LayerNorm(Z_r);  V_i = Conv_{k_i}(Z_r)
Z̃_r = Fusion(V_1..V_P);  Ĉ = Z_l ⊙ Z̃_r  (Ĉ em [T, d'])
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from apps.autodiff import ops
from apps.autodiff.tensor import Tensor
from apps.layers import functional as F
from apps.layers.params import DepthwiseConvParams, LayerNormParams, LinearParams
from apps.multiconv.choices import FusionKind
from apps.multiconv.params import (
    ConformerConvParams,
    CsguBlockParams,
    McsguParams,
    MultiConvBlockParams,
)
from core.exceptions import ConfigurationError, ContractError, DimensionError


def fusion_sum(values: Sequence[Tensor]) -> Tensor:
    """Z̃_r = V_1 + ... + V_P; com P=1 devolve o próprio V_1."""
    values = list(values)
    if not values:
        raise ContractError("fusion_sum exige ao menos uma saída de convolução.")
    fused = values[0]
    for v in values[1:]:
        fused = ops.add(fused, v)
    return fused


def fusion_weighted(values: Sequence[Tensor], z_r: Tensor, ffn: LinearParams) -> tuple[Tensor, np.ndarray]:
    """
    Mistura por quadro: α^s = softmax(FFN(z_r^s)), Z̃_r^s = Σ_i α_i^s·V_i^s.

    Devolve também α [T, P] (cópia) para a análise de importância dos kernels.
    """
    values = list(values)
    if not values:
        raise ContractError("fusion_weighted exige ao menos uma saída de convolução.")
    if ffn.out_features != len(values):
        raise ConfigurationError(
            f"FFN da fusão ponderada produz {ffn.out_features} pesos para P={len(values)} kernels."
        )
    alpha = F.softmax(F.linear(z_r, ffn))
    fused = None
    for i, v in enumerate(values):
        weight = ops.expand(ops.slice_channels(alpha, i, i + 1), v.shape)
        term = ops.mul(weight, v)
        fused = term if fused is None else ops.add(fused, term)
    return fused, alpha.data.copy()


def fusion_concat(values: Sequence[Tensor]) -> Tensor:
    values = list(values)
    if not values:
        raise ContractError("fusion_concat exige ao menos uma saída de convolução.")
    widths = {v.shape[-1] for v in values}
    if len(widths) != 1:
        raise DimensionError("fusion_concat exige o mesmo número de canais por kernel", *(v.shape for v in values))
    return ops.concat_channels(values)


def fusion_depth(values: Sequence[Tensor], final: DepthwiseConvParams) -> Tensor:
    """Concatenação seguida de uma convolução depthwise sobre os d' canais."""
    return F.depthwise_conv1d(fusion_concat(values), final)


def _split_gate(a_hat: Tensor, d_prime: int, norm: LayerNormParams) -> tuple[Tensor, Tensor]:
    if a_hat.ndim != 2 or a_hat.shape[1] % 2 != 0:
        raise DimensionError("O M-CSGU exige um número par de canais", a_hat.shape)
    if a_hat.shape[1] != 2 * d_prime:
        raise DimensionError(f"O M-CSGU espera 2·d' = {2 * d_prime} canais", a_hat.shape)
    z_l, z_r = ops.split_channels(a_hat, d_prime)
    return z_l, F.layer_norm(z_r, norm)


def mcsgu_forward(a_hat: Tensor, p: McsguParams, capture_alpha: bool = False) -> tuple[Tensor, np.ndarray | None]:
    if capture_alpha and p.fusion != FusionKind.WEIGHTED:
        raise ContractError(f"capture_alpha só vale para a fusão ponderada (recebido '{p.fusion}').")
    z_l, z_r = _split_gate(a_hat, p.d_prime, p.gate_norm)
    if p.fusion in (FusionKind.SUM, FusionKind.WEIGHTED):
        values = [F.depthwise_conv1d(z_r, conv) for conv in p.convs]
    else:
        values = [F.grouped_conv1d(z_r, conv) for conv in p.convs]

    alpha = None
    if p.fusion == FusionKind.SUM:
        fused = fusion_sum(values)
    elif p.fusion == FusionKind.WEIGHTED:
        fused, alpha = fusion_weighted(values, z_r, p.weighted_ffn)
    elif p.fusion == FusionKind.CONCAT:
        fused = fusion_concat(values)
    else:
        fused = fusion_depth(values, p.final_depthwise)
    return ops.mul(z_l, fused), (alpha if capture_alpha else None)


def csgu_forward(a_hat: Tensor, kernel: DepthwiseConvParams, norm: LayerNormParams) -> Tensor:
    """Z_l ⊙ Conv_k(LayerNorm(Z_r)): o caso de kernel único do M-CSGU."""
    z_l, z_r = _split_gate(a_hat, norm.channels, norm)
    return ops.mul(z_l, F.depthwise_conv1d(z_r, kernel))


def _gated_block(
    x: Tensor,
    p: MultiConvBlockParams | CsguBlockParams,
    gating: Callable[[Tensor], tuple[Tensor, np.ndarray | None]],
    training: bool,
    rng: np.random.Generator | None,
) -> tuple[Tensor, np.ndarray | None]:
    if x.ndim != 2 or x.shape[1] != p.pre_norm.channels:
        raise DimensionError(f"Bloco de convolução espera [T, {p.pre_norm.channels}]", x.shape)
    h = F.gelu(F.linear(F.layer_norm(x, p.pre_norm), p.up_proj))
    gated, alpha = gating(h)
    out = F.dropout(F.linear(gated, p.down_proj), p.dropout, training, rng)
    return out, alpha


def multiconv_block_forward(
    x: Tensor,
    p: MultiConvBlockParams,
    training: bool = False,
    rng: np.random.Generator | None = None,
    capture_alpha: bool = False,
) -> tuple[Tensor, np.ndarray | None]:
    """
    pre_norm -> up_proj (d -> d_inter) -> GELU -> M-CSGU -> down_proj (d' -> d) -> dropout.

    O resíduo é somado pela camada do encoder. Devolve (saída, α ou None).
    """
    return _gated_block(x, p, lambda h: mcsgu_forward(h, p.mcsgu, capture_alpha), training, rng)


def csgu_block_forward(
    x: Tensor, p: CsguBlockParams, training: bool = False, rng: np.random.Generator | None = None
) -> Tensor:
    out, _ = _gated_block(x, p, lambda h: (csgu_forward(h, p.kernel, p.gate_norm), None), training, rng)
    return out


def conformer_conv_forward(
    x: Tensor, p: ConformerConvParams, training: bool = False, rng: np.random.Generator | None = None
) -> Tensor:
    """LN -> pointwise (d -> 2d) -> GLU -> depthwise -> LN -> Swish -> pointwise -> dropout."""
    if x.ndim != 2 or x.shape[1] != p.d_model:
        raise DimensionError(f"conformer_conv_forward espera [T, {p.d_model}]", x.shape)
    h = F.linear(F.layer_norm(x, p.pre_norm), p.pointwise_in)
    content, gate = ops.split_channels(h, p.d_model)
    h = ops.mul(content, F.sigmoid(gate))
    h = F.swish(F.layer_norm(F.depthwise_conv1d(h, p.depthwise), p.conv_norm))
    return F.dropout(F.linear(h, p.pointwise_out), p.dropout, training, rng)

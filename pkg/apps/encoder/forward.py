from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from apps.attention.mha import AttentionMap, mha_forward
from apps.autodiff import ops
from apps.autodiff.tensor import Tensor, as_tensor
from apps.encoder.params import EncoderLayerParams, EncoderParams, FeedForwardParams
from apps.layers import functional as F
from apps.multiconv.choices import FusionKind
from apps.multiconv.functional import conformer_conv_forward, csgu_block_forward, multiconv_block_forward
from apps.multiconv.params import ConformerConvParams, CsguBlockParams
from core.exceptions import DimensionError

logger = logging.getLogger(__name__)


@dataclass
class EncoderCaptures:
    """Mapas de atenção e pesos α coletados durante um forward com captura."""

    attention: list[AttentionMap] = field(default_factory=list)
    alphas: dict[int, np.ndarray] = field(default_factory=dict)  # camada -> [T, P]

    def extend(self, other: EncoderCaptures) -> None:
        self.attention.extend(other.attention)
        self.alphas.update(other.alphas)


def feed_forward(x: Tensor, p: FeedForwardParams, dropout: float, training: bool, rng) -> Tensor:
    return F.dropout(F.linear(F.gelu(F.linear(x, p.inner)), p.outer), dropout, training, rng)


def _conv_block(x: Tensor, block, training: bool, rng, capture_alpha: bool) -> tuple[Tensor, np.ndarray | None]:
    if isinstance(block, ConformerConvParams):
        return conformer_conv_forward(x, block, training, rng), None
    if isinstance(block, CsguBlockParams):
        return csgu_block_forward(x, block, training, rng), None
    return multiconv_block_forward(x, block, training, rng, capture_alpha)


def encoder_layer_forward(
    x: Tensor,
    p: EncoderLayerParams,
    training: bool = False,
    capture: bool = False,
    layer_index: int = 0,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, EncoderCaptures]:
    """
    Camada macaron com pré-normalização:

        x <- x + ½·FFN1(LN(x))
        x <- x + MHA(LN(x))
        x <- x + ConvBlock(x)      (o bloco tem sua própria pré-norma)
        x <- x + ½·FFN2(LN(x))
        y  = LN_final(x)
    """
    if x.ndim != 2 or x.shape[1] != p.d_model:
        raise DimensionError(f"encoder_layer_forward espera [T, {p.d_model}]", x.shape)
    captures = EncoderCaptures()

    x = ops.add(x, ops.scale(feed_forward(F.layer_norm(x, p.ffn1_norm), p.ffn1, p.dropout, training, rng), 0.5))

    attended, maps = mha_forward(F.layer_norm(x, p.mha_norm), p.mha, capture, layer_index)
    x = ops.add(x, F.dropout(attended, p.dropout, training, rng))
    if maps:
        captures.attention.extend(maps)

    capture_alpha = capture and getattr(getattr(p.conv_block, "mcsgu", None), "fusion", None) == FusionKind.WEIGHTED
    convolved, alpha = _conv_block(x, p.conv_block, training, rng, capture_alpha)
    x = ops.add(x, convolved)
    if alpha is not None:
        captures.alphas[layer_index] = alpha

    x = ops.add(x, ops.scale(feed_forward(F.layer_norm(x, p.ffn2_norm), p.ffn2, p.dropout, training, rng), 0.5))
    return F.layer_norm(x, p.final_norm), captures


def encoder_forward(
    x: Tensor,
    params: EncoderParams,
    training: bool = False,
    capture: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, EncoderCaptures]:
    """
    H = Enc(X): subamostragem [L, F] -> [T, d], soma das posições senoidais e N camadas.

    Com `capture`, devolve N·h mapas de atenção e, na fusão ponderada, α por camada.
    Em treino, `rng` alimenta as máscaras de dropout.
    """
    h = F.subsample(x, params.subsampler)
    frames, width = h.shape
    h = ops.add(h, as_tensor(F.sinusoidal_positions(frames, width, h.dtype)))
    captures = EncoderCaptures()
    for index, layer in enumerate(params.layers):
        h, layer_captures = encoder_layer_forward(h, layer, training, capture, index, rng)
        captures.extend(layer_captures)
    logger.debug(f"Forward do encoder: L={x.shape[0]} -> T={frames}, {len(params.layers)} camadas.")
    return h, captures

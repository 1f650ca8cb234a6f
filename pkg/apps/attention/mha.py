from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from apps.autodiff import ops
from apps.autodiff.tensor import Tensor
from apps.layers import functional as F
from apps.layers.params import LinearParams, ParamsMixin
from core.exceptions import ConfigurationError, DimensionError


@dataclass
class AttentionMap:
    """Pesos de atenção [T, T] de uma cabeça em uma camada; linhas estocásticas."""

    layer: int
    head: int
    weights: np.ndarray

    @property
    def frames(self) -> int:
        return self.weights.shape[0]


@dataclass
class MhaParams(ParamsMixin):
    heads: int
    query: LinearParams
    key: LinearParams
    value: LinearParams
    output: LinearParams

    def __post_init__(self):
        if self.heads < 1 or self.d_model % self.heads != 0:
            raise ConfigurationError(f"h={self.heads} não divide d={self.d_model}.")

    @property
    def d_model(self) -> int:
        return self.query.in_features

    @property
    def head_dim(self) -> int:
        return self.d_model // self.heads

    @classmethod
    def build(cls, d_model: int, heads: int, rng: np.random.Generator, dtype=np.float64) -> MhaParams:
        if heads < 1 or d_model % heads != 0:
            raise ConfigurationError(f"h={heads} não divide d={d_model}.")
        return cls(
            heads=heads,
            query=LinearParams.build(d_model, d_model, rng, dtype),
            key=LinearParams.build(d_model, d_model, rng, dtype),
            value=LinearParams.build(d_model, d_model, rng, dtype),
            output=LinearParams.build(d_model, d_model, rng, dtype),
        )


def _split_heads(x: Tensor, heads: int) -> Tensor:
    frames, width = x.shape
    return ops.transpose(ops.reshape(x, (frames, heads, width // heads)), (1, 0, 2))


def mha_forward(
    x: Tensor, p: MhaParams, capture: bool = False, layer_index: int = 0
) -> tuple[Tensor, list[AttentionMap] | None]:
    """
    Autoatenção multi-cabeça bidirecional, sem máscara.

    softmax(Q·Kᵀ/√(d/h))·V por cabeça, cabeças concatenadas e projeção de
    saída. Com `capture`, devolve também os h mapas de atenção (cópias, fora
    da fita).
    """
    if x.ndim != 2 or x.shape[1] != p.d_model:
        raise DimensionError(f"mha_forward espera [T, {p.d_model}]", x.shape)
    frames = x.shape[0]
    q = _split_heads(F.linear(x, p.query), p.heads)  # [h, T, d_h]
    k = _split_heads(F.linear(x, p.key), p.heads)
    v = _split_heads(F.linear(x, p.value), p.heads)

    scores = ops.scale(ops.matmul(q, ops.transpose(k, (0, 2, 1))), 1.0 / math.sqrt(p.head_dim))
    weights = F.softmax(scores)  # [h, T, T]
    context = ops.matmul(weights, v)
    merged = ops.reshape(ops.transpose(context, (1, 0, 2)), (frames, p.d_model))
    out = F.linear(merged, p.output)

    maps = None
    if capture:
        maps = [AttentionMap(layer_index, head, weights.data[head].copy()) for head in range(p.heads)]
    return out, maps

"""
Operações diferenciáveis primitivas.

Não há broadcasting implícito: operandos de `add`/`mul`/`sub` precisam ter a
mesma forma; escalares Python entram apenas por `scale`/`add_scalar`, e toda
adaptação de forma é feita explicitamente com `expand`, `reshape` ou
`transpose`.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from apps.autodiff.tensor import Tensor, apply_op
from core.exceptions import ChannelIndexError, ContractError, DimensionError

ELEMENTWISE_OPS = ("add", "sub", "mul", "scale")


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"'{op}' exige formas idênticas", a.shape, b.shape)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Soma `grad` sobre os eixos que foram expandidos para chegar a `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def elementwise(op: str, a: Tensor, b: Tensor | float) -> Tensor:
    """Despacho único para as operações ponto a ponto suportadas."""
    if op not in ELEMENTWISE_OPS:
        raise ContractError(f"Operação ponto a ponto desconhecida: '{op}'.")
    if op == "scale":
        if isinstance(b, Tensor):
            raise ContractError("'scale' recebe um escalar, não um tensor.")
        return scale(a, b)
    if not isinstance(b, Tensor):
        if op == "add":
            return add_scalar(a, b)
        if op == "mul":
            return scale(a, b)
        return add_scalar(a, -b)
    return {"add": add, "sub": sub, "mul": mul}[op](a, b)


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return apply_op("add", (a, b), a.data + b.data, lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("sub", a, b)
    return apply_op("sub", (a, b), a.data - b.data, lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("mul", a, b)
    a_data, b_data = a.data, b.data
    return apply_op("mul", (a, b), a_data * b_data, lambda g: (g * b_data, g * a_data))


def scale(a: Tensor, factor: float) -> Tensor:
    factor = a.dtype.type(factor)
    return apply_op("scale", (a,), a.data * factor, lambda g: (g * factor,))


def add_scalar(a: Tensor, value: float) -> Tensor:
    value = a.dtype.type(value)
    return apply_op("add_scalar", (a,), a.data + value, lambda g: (g,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Produto matricial com eixos de lote difundíveis: [..,M,K] @ [..,K,N] -> [..,M,N]."""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError("matmul com extensões internas incompatíveis", a.shape, b.shape)
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise DimensionError("matmul com eixos de lote não difundíveis", a.shape, b.shape) from None
    a_data, b_data = a.data, b.data

    def backward(g):
        grad_a = _unbroadcast(g @ np.swapaxes(b_data, -1, -2), a_data.shape)
        grad_b = _unbroadcast(np.swapaxes(a_data, -1, -2) @ g, b_data.shape)
        return grad_a, grad_b

    return apply_op("matmul", (a, b), a_data @ b_data, backward)


def expand(x: Tensor, shape: Sequence[int]) -> Tensor:
    """Difusão explícita (ex.: viés [C] -> [T,C]); o backward soma os eixos expandidos."""
    shape = tuple(shape)
    try:
        data = np.broadcast_to(x.data, shape)
    except ValueError:
        raise DimensionError("expand impossível", x.shape, shape) from None
    source_shape = x.shape
    return apply_op("expand", (x,), np.ascontiguousarray(data), lambda g: (_unbroadcast(g, source_shape),))


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """x[..., C] + bias[C], com a difusão do viés explícita."""
    if bias.ndim != 1 or x.shape[-1] != bias.shape[0]:
        raise DimensionError("viés incompatível com o último eixo", x.shape, bias.shape)
    return add(x, expand(bias, x.shape))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    source_shape = x.shape
    try:
        data = x.data.reshape(shape)
    except ValueError:
        raise DimensionError("reshape com número de elementos diferente", source_shape, shape) from None
    return apply_op("reshape", (x,), data, lambda g: (g.reshape(source_shape),))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise DimensionError(f"Permutação de eixos inválida {axes}", x.shape)
    inverse = tuple(np.argsort(axes))
    data = np.ascontiguousarray(np.transpose(x.data, axes))
    return apply_op("transpose", (x,), data, lambda g: (np.ascontiguousarray(np.transpose(g, inverse)),))


def total(x: Tensor) -> Tensor:
    """Soma de todos os elementos, resultando em escalar."""
    source_shape = x.shape
    data = np.asarray(x.data.sum(), dtype=x.dtype)
    return apply_op("sum", (x,), data, lambda g: (np.full(source_shape, g, dtype=g.dtype),))


def slice_channels(x: Tensor, start: int, stop: int) -> Tensor:
    """Visão dos canais [start, stop) do último eixo."""
    channels = x.shape[-1]
    if not 0 <= start < stop <= channels:
        raise ChannelIndexError(f"Faixa de canais [{start}, {stop}) inválida para C={channels}.")
    source_shape, dtype = x.shape, x.dtype

    def backward(g):
        grad = np.zeros(source_shape, dtype=dtype)
        grad[..., start:stop] = g
        return (grad,)

    return apply_op("slice_channels", (x,), np.ascontiguousarray(x.data[..., start:stop]), backward)


def split_channels(x: Tensor, boundary: int) -> tuple[Tensor, Tensor]:
    """Divide [T,C] em ([T,boundary], [T,C-boundary])."""
    channels = x.shape[-1]
    if not 0 < boundary < channels:
        raise ChannelIndexError(f"Fronteira {boundary} fora de (0, {channels}).")
    return slice_channels(x, 0, boundary), slice_channels(x, boundary, channels)


def concat_channels(parts: Sequence[Tensor]) -> Tensor:
    """Concatena no eixo de canais, na ordem da lista."""
    parts = list(parts)
    if not parts:
        raise ContractError("concat_channels exige ao menos um tensor.")
    leading = parts[0].shape[:-1]
    for part in parts[1:]:
        if part.shape[:-1] != leading:
            raise DimensionError("concat_channels com eixos iniciais diferentes", parts[0].shape, part.shape)
    if len(parts) == 1:
        return parts[0]
    bounds = np.cumsum([0] + [p.shape[-1] for p in parts])

    def backward(g):
        return tuple(np.ascontiguousarray(g[..., lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:]))

    data = np.concatenate([p.data for p in parts], axis=-1)
    return apply_op("concat_channels", parts, data, backward)

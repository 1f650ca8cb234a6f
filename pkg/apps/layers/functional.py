"""
Blocos neurais diferenciáveis usados pelo encoder.

Cada função registra uma única operação fundida na fita, com regra de
backward analítica.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erfc, expit, logsumexp

from apps.autodiff import ops
from apps.autodiff.tensor import Tensor, apply_op, as_tensor
from apps.layers.params import (
    Conv2dParams,
    DepthwiseConvParams,
    GroupedConvParams,
    LayerNormParams,
    LinearParams,
    SubsamplerParams,
    subsampled_extent,
)
from core.exceptions import ConfigurationError, DimensionError, InputTooShortError
from core.utils import make_rng

MIN_SUBSAMPLE_FRAMES = 7
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def linear(x: Tensor, p: LinearParams) -> Tensor:
    if x.shape[-1] != p.in_features:
        raise DimensionError("linear com largura de entrada incompatível", x.shape, p.weight.shape)
    return ops.add_bias(ops.matmul(x, p.weight), p.bias)


def layer_norm(x: Tensor, p: LayerNormParams) -> Tensor:
    """(x - média) / sqrt(var + eps) * gamma + beta, por quadro sobre os canais."""
    channels = x.shape[-1]
    if channels != p.channels:
        raise DimensionError("layer_norm com número de canais incompatível", x.shape, p.gamma.shape)
    data = x.data
    centered = data - data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + p.epsilon)
    x_hat = centered * inv_std
    gamma = p.gamma.data

    def backward(g):
        flat_g = g.reshape(-1, channels)
        grad_gamma = (flat_g * x_hat.reshape(-1, channels)).sum(axis=0)
        grad_beta = flat_g.sum(axis=0)
        d_xhat = g * gamma
        grad_x = inv_std * (
            d_xhat
            - d_xhat.mean(axis=-1, keepdims=True)
            - x_hat * (d_xhat * x_hat).mean(axis=-1, keepdims=True)
        )
        return grad_x, grad_gamma, grad_beta

    out = x_hat * gamma + p.beta.data
    return apply_op("layer_norm", (x, p.gamma, p.beta), out.astype(x.dtype, copy=False), backward)


def gelu(x: Tensor) -> Tensor:
    """GELU exata x·Φ(x), com Φ via erfc (sem a aproximação por tanh)."""
    data = x.data
    cdf = 0.5 * erfc(-data * _INV_SQRT2)

    def backward(g):
        pdf = np.exp(-0.5 * data * data) * _INV_SQRT_2PI
        return (g * (cdf + data * pdf),)

    return apply_op("gelu", (x,), (data * cdf).astype(x.dtype, copy=False), backward)


def sigmoid(x: Tensor) -> Tensor:
    y = expit(x.data)
    return apply_op("sigmoid", (x,), y, lambda g: (g * y * (1.0 - y),))


def swish(x: Tensor) -> Tensor:
    data = x.data
    s = expit(data)
    return apply_op("swish", (x,), data * s, lambda g: (g * (s + data * s * (1.0 - s)),))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return apply_op("relu", (x,), np.where(mask, x.data, 0).astype(x.dtype, copy=False), lambda g: (g * mask,))


def softmax(x: Tensor) -> Tensor:
    """Softmax no último eixo, estabilizada pela subtração do máximo."""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    return apply_op("softmax", (x,), y, lambda g: (y * (g - (g * y).sum(axis=-1, keepdims=True)),))


def log_softmax(x: Tensor) -> Tensor:
    y = x.data - logsumexp(x.data, axis=-1, keepdims=True)
    probs = np.exp(y)
    return apply_op(
        "log_softmax", (x,), y.astype(x.dtype, copy=False), lambda g: (g - probs * g.sum(axis=-1, keepdims=True),)
    )


def dropout(x: Tensor, rate: float, training: bool, seed: int | np.random.Generator | None = None) -> Tensor:
    """Dropout invertido; identidade fora do treino ou com taxa zero."""
    if not 0.0 <= rate < 1.0:
        raise ConfigurationError(f"Taxa de dropout deve estar em [0, 1); recebido {rate}.")
    if not training or rate == 0.0:
        return x
    keep = 1.0 - rate
    mask = (make_rng(seed).random(x.shape) < keep).astype(x.dtype) / x.dtype.type(keep)
    return ops.mul(x, as_tensor(mask))


def depthwise_conv1d(x: Tensor, p: DepthwiseConvParams) -> Tensor:
    """out[t,c] = bias[c] + Σ_j weight[c,j]·x[t+j-(k-1)/2, c], com zeros nas bordas."""
    if x.ndim != 2 or x.shape[1] != p.channels:
        raise DimensionError("depthwise_conv1d com canais incompatíveis", x.shape, p.weight.shape)
    frames, k, pad = x.shape[0], p.kernel_size, p.padding
    padded = np.pad(x.data, ((pad, pad), (0, 0)))
    windows = sliding_window_view(padded, k, axis=0)  # [T, C, k]
    weight = p.weight.data

    def backward(g):
        grad_padded = np.zeros_like(padded)
        for j in range(k):
            grad_padded[j : j + frames] += g * weight[:, j]
        return (
            grad_padded[pad : pad + frames],
            np.einsum("tc,tck->ck", g, windows),
            g.sum(axis=0),
        )

    out = np.einsum("tck,ck->tc", windows, weight) + p.bias.data
    return apply_op("depthwise_conv1d", (x, p.weight, p.bias), out, backward)


def grouped_conv1d(x: Tensor, p: GroupedConvParams) -> Tensor:
    """
    out[t,g] = bias[g] + Σ_{m,j} weight[g,m,j]·x[t+j-(k-1)/2, g·m_g+m].

    O grupo g consome os canais contíguos [g·m_g, (g+1)·m_g).
    """
    if x.ndim != 2 or x.shape[1] != p.in_channels:
        raise DimensionError("grouped_conv1d com canais incompatíveis", x.shape, p.weight.shape)
    frames, k, pad = x.shape[0], p.kernel_size, p.padding
    grouped = x.data.reshape(frames, p.groups, p.in_per_group)
    padded = np.pad(grouped, ((pad, pad), (0, 0), (0, 0)))
    windows = sliding_window_view(padded, k, axis=0)  # [T, G, m, k]
    weight = p.weight.data
    in_shape = x.shape

    def backward(g):
        grad_padded = np.zeros_like(padded)
        for j in range(k):
            grad_padded[j : j + frames] += g[:, :, None] * weight[None, :, :, j]
        return (
            grad_padded[pad : pad + frames].reshape(in_shape),
            np.einsum("tg,tgmk->gmk", g, windows),
            g.sum(axis=0),
        )

    out = np.einsum("tgmk,gmk->tg", windows, weight) + p.bias.data
    return apply_op("grouped_conv1d", (x, p.weight, p.bias), out, backward)


def conv2d(x: Tensor, p: Conv2dParams) -> Tensor:
    """Convolução 2-D 'valid' com stride; x em [C_in, H, W] -> [C_out, H_out, W_out]."""
    if x.ndim != 3 or x.shape[0] != p.in_channels:
        raise DimensionError("conv2d com canais de entrada incompatíveis", x.shape, p.weight.shape)
    _, kh, kw = p.weight.shape[1:]
    s = p.stride
    windows = sliding_window_view(x.data, (kh, kw), axis=(1, 2))[:, ::s, ::s]  # [C_in, Ho, Wo, kh, kw]
    h_out, w_out = windows.shape[1], windows.shape[2]
    if h_out < 1 or w_out < 1:
        raise DimensionError("conv2d sem posições válidas", x.shape, p.weight.shape)
    weight = p.weight.data
    in_shape = x.shape

    def backward(g):
        grad_x = np.zeros(in_shape, dtype=g.dtype)
        for i in range(kh):
            for j in range(kw):
                grad_x[:, i : i + s * h_out : s, j : j + s * w_out : s] += np.tensordot(
                    weight[:, :, i, j], g, axes=([0], [0])
                )
        return (
            grad_x,
            np.tensordot(g, windows, axes=([1, 2], [1, 2])),
            g.sum(axis=(1, 2)),
        )

    out = np.tensordot(weight, windows, axes=([1, 2, 3], [0, 3, 4])) + p.bias.data[:, None, None]
    return apply_op("conv2d", (x, p.weight, p.bias), np.ascontiguousarray(out), backward)


def subsampled_length(frames: int) -> int:
    """T = ⌊(⌊(L−1)/2⌋−1)/2⌋."""
    return subsampled_extent(frames)


def subsample(x: Tensor, p: SubsamplerParams) -> Tensor:
    """[L, F] -> [T, d] por duas convoluções 3x3 de stride 2 (com ReLU) e projeção linear."""
    if x.ndim != 2 or x.shape[1] != p.feature_dim:
        raise DimensionError(f"subsample espera [L, {p.feature_dim}]", x.shape)
    if x.shape[0] < MIN_SUBSAMPLE_FRAMES:
        raise InputTooShortError(
            f"Entrada com {x.shape[0]} quadros; a subamostragem exige ao menos {MIN_SUBSAMPLE_FRAMES}."
        )
    h = ops.reshape(x, (1,) + x.shape)
    h = relu(conv2d(h, p.conv1))
    h = relu(conv2d(h, p.conv2))  # [d, T, F']
    channels, frames, freq = h.shape
    h = ops.transpose(h, (1, 0, 2))
    h = ops.reshape(h, (frames, channels * freq))
    return linear(h, p.linear)


def sinusoidal_positions(frames: int, d_model: int, dtype=np.float64) -> np.ndarray:
    """PE[t, 2i] = sin(t / 10000^(2i/d)), PE[t, 2i+1] = cos(...)."""
    positions = np.arange(frames)[:, None]
    rates = np.exp(-math.log(10000.0) * np.arange(0, d_model, 2) / d_model)
    table = np.zeros((frames, d_model))
    table[:, 0::2] = np.sin(positions * rates)
    table[:, 1::2] = np.cos(positions * rates[: d_model // 2])
    return table.astype(dtype)

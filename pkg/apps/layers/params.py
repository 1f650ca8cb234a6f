from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from apps.autodiff.tensor import Tensor
from core.exceptions import ConfigurationError

LAYER_NORM_EPS = 1e-12


def iter_named_parameters(obj, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
    """
    Percorre recursivamente um registro de parâmetros em ordem de declaração.

    Visita campos de dataclasses, listas e tuplas; devolve apenas tensores com
    `requires_grad`. Os nomes seguem o caminho de atributos
    (ex.: "layers.0.mha.query.weight").
    """
    if isinstance(obj, Tensor):
        if obj.requires_grad:
            yield prefix, obj
    elif dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        for f in dataclasses.fields(obj):
            yield from iter_named_parameters(getattr(obj, f.name), f"{prefix}.{f.name}" if prefix else f.name)
    elif isinstance(obj, (list, tuple)):
        for i, item in enumerate(obj):
            yield from iter_named_parameters(item, f"{prefix}.{i}" if prefix else str(i))


class ParamsMixin:
    """Acesso uniforme aos tensores treináveis de qualquer registro de parâmetros."""

    def named_parameters(self) -> Iterator[tuple[str, Tensor]]:
        return iter_named_parameters(self)

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def num_parameters(self) -> int:
        return sum(t.size for t in self.parameters())

    def zero_grad(self) -> None:
        for t in self.parameters():
            t.zero_grad()


def uniform_param(shape: tuple, bound: float, rng: np.random.Generator, dtype) -> Tensor:
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, dtype=dtype)


def constant_param(shape: tuple, value: float, dtype) -> Tensor:
    return Tensor(np.full(shape, value), requires_grad=True, dtype=dtype)


@dataclass
class LinearParams(ParamsMixin):
    """Projeção afim x @ W + b, com W em [C_in, C_out]."""

    weight: Tensor
    bias: Tensor

    def __post_init__(self):
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise ConfigurationError(
                f"LinearParams inconsistente: weight {self.weight.shape}, bias {self.bias.shape}"
            )

    @property
    def in_features(self) -> int:
        return self.weight.shape[0]

    @property
    def out_features(self) -> int:
        return self.weight.shape[1]

    @classmethod
    def build(cls, c_in: int, c_out: int, rng: np.random.Generator, dtype=np.float64) -> LinearParams:
        bound = math.sqrt(1.0 / c_in)
        return cls(
            weight=uniform_param((c_in, c_out), bound, rng, dtype),
            bias=uniform_param((c_out,), bound, rng, dtype),
        )


@dataclass
class LayerNormParams(ParamsMixin):
    gamma: Tensor
    beta: Tensor
    epsilon: float = LAYER_NORM_EPS

    @property
    def channels(self) -> int:
        return self.gamma.shape[0]

    @classmethod
    def build(cls, channels: int, dtype=np.float64, epsilon: float = LAYER_NORM_EPS) -> LayerNormParams:
        return cls(
            gamma=constant_param((channels,), 1.0, dtype),
            beta=constant_param((channels,), 0.0, dtype),
            epsilon=epsilon,
        )


def _check_odd_kernel(kernel_size: int) -> None:
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ConfigurationError(f"Tamanho de kernel deve ser ímpar e positivo; recebido {kernel_size}.")


@dataclass
class DepthwiseConvParams(ParamsMixin):
    """Um filtro de tamanho k por canal, com padding 'same' simétrico."""

    kernel_size: int
    weight: Tensor  # [C, k]
    bias: Tensor  # [C]

    def __post_init__(self):
        _check_odd_kernel(self.kernel_size)
        if self.weight.shape != (self.channels, self.kernel_size) or self.bias.shape != (self.channels,):
            raise ConfigurationError(
                f"DepthwiseConvParams inconsistente: weight {self.weight.shape}, bias {self.bias.shape}, "
                f"k={self.kernel_size}"
            )

    @property
    def channels(self) -> int:
        return self.weight.shape[0]

    @property
    def padding(self) -> int:
        return (self.kernel_size - 1) // 2

    @classmethod
    def build(cls, channels: int, kernel_size: int, rng: np.random.Generator, dtype=np.float64):
        _check_odd_kernel(kernel_size)
        bound = math.sqrt(1.0 / kernel_size)
        return cls(
            kernel_size=kernel_size,
            weight=uniform_param((channels, kernel_size), bound, rng, dtype),
            bias=uniform_param((channels,), bound, rng, dtype),
        )

    @classmethod
    def delta(cls, channels: int, kernel_size: int, dtype=np.float64) -> DepthwiseConvParams:
        """Kernel identidade: tap central 1, demais 0, viés 0."""
        _check_odd_kernel(kernel_size)
        weight = np.zeros((channels, kernel_size))
        weight[:, (kernel_size - 1) // 2] = 1.0
        return cls(
            kernel_size=kernel_size,
            weight=Tensor(weight, requires_grad=True, dtype=dtype),
            bias=constant_param((channels,), 0.0, dtype),
        )


@dataclass
class GroupedConvParams(ParamsMixin):
    """
    Convolução 1-D agrupada: G grupos contíguos de `in_per_group` canais de
    entrada, cada grupo produzindo um canal de saída.
    """

    kernel_size: int
    groups: int
    in_per_group: int
    weight: Tensor  # [G, in_per_group, k]
    bias: Tensor  # [G]

    def __post_init__(self):
        _check_odd_kernel(self.kernel_size)
        expected = (self.groups, self.in_per_group, self.kernel_size)
        if self.weight.shape != expected or self.bias.shape != (self.groups,):
            raise ConfigurationError(
                f"GroupedConvParams inconsistente: weight {self.weight.shape} (esperado {expected}), "
                f"bias {self.bias.shape}"
            )

    @property
    def in_channels(self) -> int:
        return self.groups * self.in_per_group

    @property
    def padding(self) -> int:
        return (self.kernel_size - 1) // 2

    @classmethod
    def build(cls, c_in: int, groups: int, kernel_size: int, rng: np.random.Generator, dtype=np.float64):
        _check_odd_kernel(kernel_size)
        if groups < 1 or c_in % groups != 0:
            raise ConfigurationError(f"G={groups} não divide C_in={c_in}.")
        in_per_group = c_in // groups
        bound = math.sqrt(1.0 / (in_per_group * kernel_size))
        return cls(
            kernel_size=kernel_size,
            groups=groups,
            in_per_group=in_per_group,
            weight=uniform_param((groups, in_per_group, kernel_size), bound, rng, dtype),
            bias=uniform_param((groups,), bound, rng, dtype),
        )


@dataclass
class Conv2dParams(ParamsMixin):
    """Convolução 2-D sobre (tempo, frequência) sem padding."""

    weight: Tensor  # [C_out, C_in, kh, kw]
    bias: Tensor  # [C_out]
    stride: int = 2

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @classmethod
    def build(cls, c_in: int, c_out: int, rng: np.random.Generator, dtype=np.float64, kernel: int = 3, stride: int = 2):
        bound = math.sqrt(1.0 / (c_in * kernel * kernel))
        return cls(
            weight=uniform_param((c_out, c_in, kernel, kernel), bound, rng, dtype),
            bias=uniform_param((c_out,), bound, rng, dtype),
            stride=stride,
        )


def subsampled_extent(length: int) -> int:
    """Extensão após duas convoluções 3x3 de stride 2 sem padding."""
    return ((length - 1) // 2 - 1) // 2


@dataclass
class SubsamplerParams(ParamsMixin):
    """Front-end convolucional: fator ~4 no tempo, saída de largura d."""

    conv1: Conv2dParams
    conv2: Conv2dParams
    linear: LinearParams
    feature_dim: int = field(default=80)

    @property
    def d_model(self) -> int:
        return self.linear.out_features

    @classmethod
    def build(cls, feature_dim: int, d_model: int, rng: np.random.Generator, dtype=np.float64) -> SubsamplerParams:
        freq_out = subsampled_extent(feature_dim)
        if freq_out < 1:
            raise ConfigurationError(f"feature_dim={feature_dim} pequeno demais para a subamostragem.")
        return cls(
            conv1=Conv2dParams.build(1, d_model, rng, dtype),
            conv2=Conv2dParams.build(d_model, d_model, rng, dtype),
            linear=LinearParams.build(d_model * freq_out, d_model, rng, dtype),
            feature_dim=feature_dim,
        )

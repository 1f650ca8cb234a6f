"""
Bateria de checagens de gradiente por diferenças finitas.

Cada caso sorteia formas e valores a partir da própria semente, monta uma
perda escalar (projeção aleatória da saída) e compara a fita com diferenças
centrais em precisão dupla. Primitivas usam tolerância relativa 1e-5; blocos
compostos, 1e-4.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from apps.attention.mha import MhaParams, mha_forward
from apps.autodiff import ops
from apps.autodiff.gradcheck import GradCheckResult, check_gradients, projected, random_projection
from apps.autodiff.tensor import Tensor
from apps.ctc.loss import CtcTarget, LogProbLattice, ctc_loss
from apps.encoder.config import EncoderConfig
from apps.encoder.forward import encoder_layer_forward
from apps.encoder.params import EncoderLayerParams
from apps.layers import functional as F
from apps.layers.params import (
    Conv2dParams,
    DepthwiseConvParams,
    GroupedConvParams,
    LayerNormParams,
    LinearParams,
)
from apps.multiconv.choices import FusionKind
from apps.multiconv.functional import conformer_conv_forward, csgu_forward, mcsgu_forward
from apps.multiconv.params import ConformerConvParams, McsguParams
from core.exceptions import ConfigurationError
from core.utils import spawn_seeds

logger = logging.getLogger(__name__)

PRIMITIVE_RTOL = 1e-5
COMPOSED_RTOL = 1e-4
MAX_COORDS = 48


@dataclass
class GradCase:
    name: str
    loss: Callable[[], Tensor]
    tensors: list[Tensor]
    rtol: float = PRIMITIVE_RTOL


@dataclass
class SuiteReport:
    seed: int
    results: list[GradCheckResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[GradCheckResult]:
        return [r for r in self.results if not r.passed]


def _tensor(rng: np.random.Generator, shape: tuple, requires_grad: bool = True) -> Tensor:
    return Tensor(rng.standard_normal(shape), requires_grad=requires_grad)


def _away_from_zero(rng: np.random.Generator, shape: tuple) -> Tensor:
    magnitude = 0.1 + np.abs(rng.standard_normal(shape))
    return Tensor(np.where(rng.random(shape) < 0.5, -magnitude, magnitude), requires_grad=True)


def _projected_case(name: str, out_fn: Callable[[], Tensor], tensors: list[Tensor], rng, rtol=PRIMITIVE_RTOL):
    weights = random_projection(out_fn().shape, rng)
    return GradCase(name, lambda: projected(out_fn(), weights), tensors, rtol)


def _frames(rng) -> int:
    return int(rng.integers(2, 7))


def case_matmul(rng) -> GradCase:
    m, k, n = (int(v) for v in rng.integers(1, 5, size=3))
    a, b = _tensor(rng, (m, k)), _tensor(rng, (k, n))
    return _projected_case(f"matmul[{m}x{k}@{k}x{n}]", lambda: ops.matmul(a, b), [a, b], rng)


def case_elementwise(rng) -> GradCase:
    shape = (_frames(rng), int(rng.integers(1, 6)))
    op = str(rng.choice(["add", "sub", "mul"]))
    a, b = _tensor(rng, shape), _tensor(rng, shape)
    return _projected_case(f"{op}{shape}", lambda: ops.elementwise(op, a, b), [a, b], rng)


def case_split_concat(rng) -> GradCase:
    channels = int(rng.integers(2, 8))
    boundary = int(rng.integers(1, channels))
    x = _tensor(rng, (_frames(rng), channels))

    def out():
        left, right = ops.split_channels(x, boundary)
        return ops.concat_channels([ops.scale(right, 2.0), left])

    return _projected_case(f"split_concat[C={channels},b={boundary}]", out, [x], rng)


def case_linear(rng) -> GradCase:
    c_in, c_out = (int(v) for v in rng.integers(1, 6, size=2))
    x, p = _tensor(rng, (_frames(rng), c_in)), LinearParams.build(c_in, c_out, rng)
    return _projected_case(f"linear[{c_in}->{c_out}]", lambda: F.linear(x, p), [x] + p.parameters(), rng)


def case_layer_norm(rng) -> GradCase:
    channels = int(rng.integers(2, 8))
    x, p = _tensor(rng, (_frames(rng), channels)), LayerNormParams.build(channels)
    p.gamma.data[:] = rng.uniform(0.5, 1.5, channels)
    p.beta.data[:] = rng.standard_normal(channels)
    return _projected_case(f"layer_norm[C={channels}]", lambda: F.layer_norm(x, p), [x] + p.parameters(), rng)


def case_activation(rng) -> GradCase:
    name = str(rng.choice(["gelu", "sigmoid", "swish", "relu", "softmax", "log_softmax"]))
    shape = (_frames(rng), int(rng.integers(1, 6)))
    x = _away_from_zero(rng, shape) if name == "relu" else _tensor(rng, shape)
    fn = getattr(F, name)
    return _projected_case(f"{name}{shape}", lambda: fn(x), [x], rng)


def case_depthwise(rng) -> GradCase:
    channels, kernel = int(rng.integers(1, 5)), int(rng.choice([1, 3, 5, 7]))
    x, p = _tensor(rng, (int(rng.integers(1, 9)), channels)), DepthwiseConvParams.build(channels, kernel, rng)
    return _projected_case(
        f"depthwise_conv1d[C={channels},k={kernel},T={x.shape[0]}]",
        lambda: F.depthwise_conv1d(x, p),
        [x] + p.parameters(),
        rng,
    )


def case_grouped(rng) -> GradCase:
    groups, per_group, kernel = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.choice([1, 3, 5]))
    x = _tensor(rng, (int(rng.integers(1, 8)), groups * per_group))
    p = GroupedConvParams.build(groups * per_group, groups, kernel, rng)
    return _projected_case(
        f"grouped_conv1d[G={groups},m={per_group},k={kernel}]",
        lambda: F.grouped_conv1d(x, p),
        [x] + p.parameters(),
        rng,
    )


def case_conv2d(rng) -> GradCase:
    c_in, c_out = int(rng.integers(1, 3)), int(rng.integers(1, 4))
    x = _tensor(rng, (c_in, int(rng.integers(3, 8)), int(rng.integers(3, 8))))
    p = Conv2dParams.build(c_in, c_out, rng)
    return _projected_case(f"conv2d[{c_in}->{c_out},{x.shape[1:]}]", lambda: F.conv2d(x, p), [x] + p.parameters(), rng)


def case_mha(rng) -> GradCase:
    heads = int(rng.choice([1, 2]))
    d_model = heads * int(rng.integers(1, 4))
    x, p = _tensor(rng, (_frames(rng), d_model)), MhaParams.build(d_model, heads, rng)
    return _projected_case(
        f"mha[d={d_model},h={heads}]", lambda: mha_forward(x, p)[0], [x] + p.parameters(), rng, COMPOSED_RTOL
    )


def case_mcsgu(rng) -> GradCase:
    fusion = str(rng.choice(FusionKind.values))
    kernels = (1, 3) if rng.random() < 0.5 else (3, 5, 7)
    d_prime = len(kernels) * int(rng.integers(1, 3))
    x = _tensor(rng, (_frames(rng), 2 * d_prime))
    p = McsguParams.build(d_prime, kernels, fusion, rng)
    return _projected_case(
        f"mcsgu[{fusion},K={kernels},d'={d_prime}]",
        lambda: mcsgu_forward(x, p)[0],
        [x] + p.parameters(),
        rng,
        COMPOSED_RTOL,
    )


def case_csgu(rng) -> GradCase:
    d_prime, kernel = int(rng.integers(1, 5)), int(rng.choice([3, 5]))
    x = _tensor(rng, (_frames(rng), 2 * d_prime))
    conv, norm = DepthwiseConvParams.build(d_prime, kernel, rng), LayerNormParams.build(d_prime)
    return _projected_case(
        f"csgu[d'={d_prime},k={kernel}]",
        lambda: csgu_forward(x, conv, norm),
        [x] + conv.parameters() + norm.parameters(),
        rng,
        COMPOSED_RTOL,
    )


def case_conformer_conv(rng) -> GradCase:
    d_model, kernel = int(rng.integers(2, 5)), int(rng.choice([3, 5]))
    x, p = _tensor(rng, (_frames(rng), d_model)), ConformerConvParams.build(d_model, kernel, rng, dropout=0.0)
    return _projected_case(
        f"conformer_conv[d={d_model},k={kernel}]",
        lambda: conformer_conv_forward(x, p),
        [x] + p.parameters(),
        rng,
        COMPOSED_RTOL,
    )


def case_ctc(rng) -> GradCase:
    vocab = int(rng.integers(1, 5))
    tokens = tuple(int(t) for t in rng.integers(1, vocab + 1, size=int(rng.integers(1, 4))))
    target = CtcTarget(tokens)
    logits = _tensor(rng, (target.min_frames + int(rng.integers(0, 4)), vocab + 1))
    return GradCase(
        f"ctc[V={vocab},y={tokens},T={logits.shape[0]}]",
        lambda: ctc_loss(LogProbLattice(logits), target).loss,
        [logits],
        COMPOSED_RTOL,
    )


def case_encoder_layer(rng) -> GradCase:
    conv_block = str(rng.choice(["multiconv", "multiconv", "csgu", "conformer"]))
    cfg = EncoderConfig(
        num_layers=1,
        d_model=4,
        heads=2,
        d_inter=8,
        d_ffn=8,
        kernels=(1, 3),
        fusion=str(rng.choice(FusionKind.values)),
        conv_block=conv_block,
        dropout=0.0,
        conformer_kernel=3,
    )
    x, p = _tensor(rng, (_frames(rng), cfg.d_model)), EncoderLayerParams.build(cfg, rng)
    label = conv_block if conv_block != "multiconv" else f"multiconv-{cfg.fusion}"
    return _projected_case(
        f"encoder_layer[{label}]",
        lambda: encoder_layer_forward(x, p)[0],
        [x] + p.parameters(),
        rng,
        COMPOSED_RTOL,
    )


CASE_BUILDERS = (
    case_matmul,
    case_elementwise,
    case_split_concat,
    case_linear,
    case_layer_norm,
    case_activation,
    case_depthwise,
    case_grouped,
    case_conv2d,
    case_mha,
    case_mcsgu,
    case_csgu,
    case_conformer_conv,
    case_ctc,
    case_encoder_layer,
)


def build_cases(seed: int, count: int) -> list[GradCase]:
    """`count` casos percorrendo os construtores em ciclo, cada um com sua semente."""
    if count < 1:
        raise ConfigurationError(f"Número de configurações deve ser positivo; recebido {count}.")
    seeds = spawn_seeds(seed, count)
    return [
        CASE_BUILDERS[index % len(CASE_BUILDERS)](np.random.default_rng(child))
        for index, child in enumerate(seeds)
    ]


def run_gradcheck_suite(seed: int = 0, count: int = 100, max_coords: int = MAX_COORDS) -> SuiteReport:
    results = []
    for index, case in enumerate(build_cases(seed, count)):
        result = check_gradients(
            case.loss,
            case.tensors,
            name=case.name,
            rtol=case.rtol,
            max_coords=max_coords,
            rng=np.random.default_rng([seed, index]),
        )
        results.append(result)
        logger.debug(f"{case.name}: {result.checked} coordenadas, erro relativo {result.max_rel_error:.2e}")
    report = SuiteReport(seed, results)
    logger.info(
        f"Checagem de gradientes (semente {seed}): {len(results) - len(report.failures)}/{len(results)} casos aprovados."
    )
    return report

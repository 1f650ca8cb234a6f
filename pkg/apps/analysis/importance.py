from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from apps.autodiff.tensor import Tensor, no_grad
from apps.encoder.forward import encoder_forward
from apps.multiconv.choices import FusionKind
from apps.multiconv.params import MultiConvBlockParams
from core.exceptions import ContractError, EmptySplitError

logger = logging.getLogger(__name__)


@dataclass
class KernelImportanceMatrix:
    """α médio por camada [N, P]; colunas na ordem de K."""

    values: np.ndarray
    kernels: tuple[int, ...]
    frames: int = 0

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.values, columns=[f"k{k}" for k in self.kernels])
        df.insert(0, "layer", range(len(df)))
        return df


def aggregate_alphas(per_utterance: Iterable[dict[int, np.ndarray]], num_layers: int, kernels: Sequence[int]) -> KernelImportanceMatrix:
    """Média simples sobre todos os quadros de todas as elocuções, camada a camada."""
    sums = np.zeros((num_layers, len(kernels)))
    frames = 0
    for alphas in per_utterance:
        for layer in range(num_layers):
            if layer not in alphas:
                raise ContractError(f"Camada {layer} sem pesos α capturados.")
            sums[layer] += alphas[layer].sum(axis=0)
        frames += alphas[0].shape[0]
    if frames == 0:
        raise EmptySplitError("Nenhum quadro para a análise de importância dos kernels.")
    return KernelImportanceMatrix(values=sums / frames, kernels=tuple(kernels), frames=frames)


def kernel_importance(model, dataset: Iterable[np.ndarray]) -> KernelImportanceMatrix:
    """Importância de cada kernel segundo o gate da fusão ponderada, por camada."""
    encoder = getattr(model, "encoder", model)
    for index, layer in enumerate(encoder.layers):
        block = layer.conv_block
        if not isinstance(block, MultiConvBlockParams) or block.mcsgu.fusion != FusionKind.WEIGHTED:
            raise ContractError(f"A camada {index} não usa fusão ponderada; não há gate para analisar.")
    kernels = encoder.layers[0].conv_block.mcsgu.kernels

    def captured():
        for features in dataset:
            with no_grad():
                _, captures = encoder_forward(Tensor(features, dtype=encoder.dtype), encoder, capture=True)
            yield captures.alphas

    matrix = aggregate_alphas(captured(), len(encoder.layers), kernels)
    logger.info(f"Importância dos kernels calculada sobre {matrix.frames} quadros.")
    return matrix

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from apps.attention.mha import AttentionMap
from apps.autodiff.tensor import Tensor, no_grad
from apps.encoder.forward import encoder_forward
from core.exceptions import ContractError, EmptySplitError

logger = logging.getLogger(__name__)


def diagonality(w: AttentionMap | np.ndarray) -> float:
    """
    D(w) = 1 − Σ_ij w[i,j]·|i−j| / (T·(T−1)).

    Um menos o deslocamento médio da atenção, normalizado por T−1; vale 1
    quando toda a massa está na diagonal. Para T=1 o valor é 1.0.
    """
    weights = w.weights if isinstance(w, AttentionMap) else np.asarray(w)
    if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
        raise ContractError(f"Mapa de atenção deve ser quadrado; recebido {weights.shape}.")
    frames = weights.shape[0]
    if frames == 1:
        return 1.0
    index = np.arange(frames)
    offsets = np.abs(index[:, None] - index[None, :])
    return float(1.0 - (weights * offsets).sum() / (frames * (frames - 1)))


@dataclass
class DiagonalityReport:
    """Diagonalidade média por camada (sobre cabeças e depois sobre elocuções)."""

    values: list[float]
    utterances: int = 0
    label: str = ""
    per_utterance: list[list[float]] = field(default_factory=list, repr=False)

    @property
    def num_layers(self) -> int:
        return len(self.values)

    @property
    def average(self) -> float:
        return float(np.mean(self.values))

    def relative_reduction(self, baseline: DiagonalityReport) -> float:
        """Redução relativa da média entre camadas em relação a um encoder de referência."""
        if baseline.average == 0:
            raise ContractError("Diagonalidade média do baseline é zero; redução relativa indefinida.")
        return (baseline.average - self.average) / baseline.average

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"layer": range(self.num_layers), "value": self.values})


def layer_diagonality(maps: Sequence[AttentionMap], num_layers: int) -> list[float]:
    """Média sobre as cabeças de cada camada, para uma elocução."""
    buckets: list[list[float]] = [[] for _ in range(num_layers)]
    for m in maps:
        buckets[m.layer].append(diagonality(m))
    if any(not bucket for bucket in buckets):
        raise ContractError("Há camadas sem mapas de atenção capturados.")
    return [float(np.mean(bucket)) for bucket in buckets]


def aggregate_diagonality(per_utterance_maps: Iterable[Sequence[AttentionMap]], num_layers: int, label: str = "") -> DiagonalityReport:
    """Agrega mapas já capturados: média por camada de cada elocução, depois média entre elocuções."""
    rows = [layer_diagonality(maps, num_layers) for maps in per_utterance_maps]
    if not rows:
        raise EmptySplitError("Nenhuma elocução para a análise de diagonalidade.")
    values = np.mean(np.asarray(rows), axis=0).tolist()
    return DiagonalityReport(values=values, utterances=len(rows), label=label, per_utterance=rows)


def _encoder_of(model):
    return getattr(model, "encoder", model)


def diagonality_report(model, dataset: Iterable[np.ndarray], label: str = "") -> DiagonalityReport:
    """
    Roda o encoder (inferência, com captura) em cada elocução e agrega a diagonalidade.

    `model` é um `EncoderParams` ou qualquer objeto com atributo `encoder`;
    `dataset` produz matrizes de features [L, F].
    """
    encoder = _encoder_of(model)

    def captured():
        for features in dataset:
            with no_grad():
                _, captures = encoder_forward(Tensor(features, dtype=encoder.dtype), encoder, capture=True)
            yield captures.attention

    report = aggregate_diagonality(captured(), len(encoder.layers), label)
    logger.info(
        f"Diagonalidade{f' ({label})' if label else ''}: média {report.average:.4f} "
        f"sobre {report.utterances} elocuções."
    )
    return report

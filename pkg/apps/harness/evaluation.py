from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import pandas as pd

from apps.analysis.exporters import OutputFormat, export_frame
from apps.autodiff.tensor import no_grad
from apps.ctc.loss import CtcTarget, ctc_greedy_decode, ctc_loss
from apps.ctc.metrics import edit_distance
from apps.harness.model import AsrModel
from apps.harness.synthetic import SyntheticDataset, Utterance
from core.exceptions import ConfigurationError, EmptySplitError, VocabularyMismatchError

logger = logging.getLogger(__name__)

UTTERANCE_COLUMNS = [
    "utt_id",
    "reference",
    "hypothesis",
    "distance",
    "substitutions",
    "insertions",
    "deletions",
    "ref_length",
    "loss",
]


@dataclass
class EvaluationReport:
    """TER de corpus (Σ distâncias / Σ tamanhos de referência) e o detalhe por elocução."""

    split: str
    ter: float
    loss: float
    errors: int
    ref_tokens: int
    per_utterance: pd.DataFrame

    @property
    def utterances(self) -> int:
        return len(self.per_utterance)

    def dump_csv(self, path: str | Path) -> Path:
        return export_frame(self.per_utterance, path, OutputFormat.CSV, title=f"Avaliação ({self.split})")


def evaluate_model(model: AsrModel, utterances: Sequence[Utterance], split: str = "dev") -> EvaluationReport:
    """Decodificação gulosa de cada elocução; a perda média ignora instâncias CTC inviáveis."""
    if not utterances:
        raise EmptySplitError(f"A partição '{split}' não tem elocuções para avaliar.")
    rows, losses = [], []
    with no_grad():
        for utt in utterances:
            lattice = model.lattice(utt.features)
            hypothesis = ctc_greedy_decode(lattice)
            result = ctc_loss(lattice, CtcTarget(utt.tokens))
            if result.feasible:
                losses.append(result.value)
            distance, subs, ins, dels = edit_distance(hypothesis, utt.tokens)
            rows.append(
                {
                    "utt_id": utt.utt_id,
                    "reference": " ".join(str(t) for t in utt.tokens),
                    "hypothesis": " ".join(str(t) for t in hypothesis),
                    "distance": distance,
                    "substitutions": subs,
                    "insertions": ins,
                    "deletions": dels,
                    "ref_length": len(utt.tokens),
                    "loss": result.value,
                }
            )
    frame = pd.DataFrame(rows, columns=UTTERANCE_COLUMNS)
    errors, ref_tokens = int(frame["distance"].sum()), int(frame["ref_length"].sum())
    report = EvaluationReport(
        split=split,
        ter=errors / ref_tokens,
        loss=sum(losses) / len(losses) if losses else math.inf,
        errors=errors,
        ref_tokens=ref_tokens,
        per_utterance=frame,
    )
    logger.info(
        f"Avaliação em '{split}': TER {report.ter:.2%} ({errors}/{ref_tokens}), "
        f"perda {report.loss:.4f} sobre {len(rows)} elocuções."
    )
    return report


def evaluate(
    checkpoint: str | Path,
    dataset: SyntheticDataset,
    split: str = "test",
    dump_csv: str | Path | None = None,
) -> EvaluationReport:
    model = AsrModel.load(checkpoint)
    if model.vocab_size != dataset.vocab_size:
        raise VocabularyMismatchError(
            f"Checkpoint treinado com V={model.vocab_size}, dataset com V={dataset.vocab_size}."
        )
    if model.config.feature_dim != dataset.spec.feature_dim:
        raise ConfigurationError(
            f"Checkpoint espera {model.config.feature_dim} features por quadro; o dataset tem {dataset.spec.feature_dim}."
        )
    report = evaluate_model(model, dataset.split(split), split)
    if dump_csv:
        report.dump_csv(dump_csv)
    return report

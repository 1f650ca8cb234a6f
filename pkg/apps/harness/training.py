"""
Laço de treino CTC com Adam.

Cada passo sorteia um lote, acumula o gradiente da perda média (uma fita por
elocução), recorta pela norma global e atualiza. A cada `eval_interval` passos
o dev é avaliado, uma linha é anexada a `metrics.jsonl` e o melhor checkpoint
(menor TER, desempate pela perda) é regravado. Com um único worker e semente
fixa o resultado é reprodutível bit a bit, exceto pelo tempo de parede.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from apps.autodiff import ops
from apps.autodiff.tensor import Tape
from apps.ctc.loss import CtcTarget, ctc_loss
from apps.harness.config import TrainConfig
from apps.harness.evaluation import EvaluationReport, evaluate_model
from apps.harness.model import AsrModel
from apps.harness.optim import Adam, clip_grad_norm
from apps.harness.synthetic import SyntheticDataset, Utterance
from apps.layers.functional import subsampled_length
from core.exceptions import ConfigurationError, EmptySplitError, TrainingDivergedError
from core.utils import make_rng

logger = logging.getLogger(__name__)

CONFIG_NAME = "config.json"
METRICS_NAME = "metrics.jsonl"
BEST_CHECKPOINT = "best.mcfk"
LAST_CHECKPOINT = "last.mcfk"


@dataclass
class MetricsRecord:
    step: int
    train_loss: float
    dev_loss: float
    dev_ter: float
    wall_clock: float

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    def deterministic(self) -> dict:
        """Campos que devem coincidir entre execuções com a mesma semente."""
        data = dataclasses.asdict(self)
        data.pop("wall_clock")
        return data


@dataclass
class TrainingResult:
    output_dir: Path
    history: list[MetricsRecord]
    best: MetricsRecord | None
    skipped: int

    @property
    def best_checkpoint(self) -> Path:
        return self.output_dir / BEST_CHECKPOINT

    @property
    def last_checkpoint(self) -> Path:
        return self.output_dir / LAST_CHECKPOINT


def is_feasible(utt: Utterance) -> bool:
    """Cabe um alinhamento CTC depois da subamostragem?"""
    return subsampled_length(utt.frames) >= CtcTarget(utt.tokens).min_frames


def feasible_utterances(utterances: list[Utterance], split: str) -> list[Utterance]:
    kept = [utt for utt in utterances if is_feasible(utt)]
    skipped = len(utterances) - len(kept)
    if skipped:
        logger.warning(f"{skipped} elocuções de '{split}' ignoradas: curtas demais para o alvo CTC.")
    if not kept:
        raise EmptySplitError(f"Nenhuma elocução viável em '{split}'.")
    return kept


def _is_better(report: EvaluationReport, best: MetricsRecord | None) -> bool:
    if best is None:
        return True
    return (report.ter, report.loss) < (best.dev_ter, best.dev_loss)


def train_step(model: AsrModel, batch: list[Utterance], rng: np.random.Generator, step: int) -> float:
    """Acumula nos parâmetros o gradiente da perda média do lote; devolve essa perda."""
    total = 0.0
    weight = 1.0 / len(batch)
    for utt in batch:
        with Tape():
            result = ctc_loss(model.lattice(utt.features, training=True, rng=rng), CtcTarget(utt.tokens))
            value = result.value
            if not math.isfinite(value):
                batch_ids = [u.utt_id for u in batch]
                logger.error(f"Perda não finita ({value}) no passo {step}, elocução {utt.utt_id}.")
                raise TrainingDivergedError(step, batch_ids, value)
            ops.scale(result.loss, weight).backward()
        total += value
    return total * weight


def train(cfg: TrainConfig, dataset: SyntheticDataset, output_dir: str | Path | None = None) -> TrainingResult:
    cfg.full_clean()
    if cfg.encoder.feature_dim != dataset.spec.feature_dim:
        raise ConfigurationError(
            f"Encoder com feature_dim={cfg.encoder.feature_dim}, dataset com {dataset.spec.feature_dim}."
        )
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / CONFIG_NAME)

    train_set = dataset.split("train")
    usable = feasible_utterances(train_set, "train")
    dev_set = dataset.split("dev")

    model = AsrModel.build(cfg.encoder, dataset.vocab_size, cfg.dtype)
    params = model.parameters()
    optimizer = Adam(params, cfg.learning_rate, cfg.betas, cfg.eps)
    rng = make_rng(cfg.seed)
    batch_size = min(cfg.batch_size, len(usable))
    logger.info(
        f"Treino iniciado: {model.num_parameters()} parâmetros, {len(usable)} elocuções de treino, "
        f"{cfg.steps} passos, lote {batch_size}."
    )

    history, best, window = [], None, []
    started = time.perf_counter()
    with (out / METRICS_NAME).open("w", encoding="utf-8") as metrics_file:
        for step in range(1, cfg.steps + 1):
            picked = rng.choice(len(usable), size=batch_size, replace=False)
            batch = [usable[i] for i in sorted(picked)]
            optimizer.zero_grad()
            window.append(train_step(model, batch, rng, step))
            clip_grad_norm(params, cfg.grad_clip)
            optimizer.step()

            if step % cfg.eval_interval == 0 or step == cfg.steps:
                report = evaluate_model(model, dev_set, "dev")
                record = MetricsRecord(
                    step=step,
                    train_loss=sum(window) / len(window),
                    dev_loss=report.loss,
                    dev_ter=report.ter,
                    wall_clock=time.perf_counter() - started,
                )
                metrics_file.write(record.to_json() + "\n")
                metrics_file.flush()
                history.append(record)
                window = []
                if _is_better(report, best):
                    best = record
                    model.save(out / BEST_CHECKPOINT)
                logger.info(
                    f"Passo {step}: perda de treino {record.train_loss:.4f}, "
                    f"dev TER {record.dev_ter:.2%}, perda dev {record.dev_loss:.4f}."
                )

    model.save(out / LAST_CHECKPOINT)
    if best is not None:
        logger.info(f"Melhor checkpoint no passo {best.step} (dev TER {best.dev_ter:.2%}).")
    return TrainingResult(out, history, best, len(train_set) - len(usable))

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from apps.autodiff.tensor import Tensor
from apps.ctc.loss import LogProbLattice
from apps.encoder.checkpoint import assign_parameters, load_checkpoint, save_checkpoint
from apps.encoder.config import EncoderConfig
from apps.encoder.forward import encoder_forward
from apps.encoder.params import EncoderParams
from apps.layers import functional as F
from apps.layers.params import LinearParams, ParamsMixin
from core.exceptions import CheckpointFormatError
from core.utils import dtype_name, resolve_dtype

logger = logging.getLogger(__name__)


@dataclass
class AsrModel(ParamsMixin):
    """Encoder seguido da projeção d -> V+1 (branco no índice 0) treinada com CTC."""

    encoder: EncoderParams
    head: LinearParams
    vocab_size: int = field(default=8)

    @property
    def config(self) -> EncoderConfig:
        return self.encoder.config

    @property
    def dtype(self) -> np.dtype:
        return self.encoder.dtype

    @classmethod
    def build(cls, cfg: EncoderConfig, vocab_size: int, dtype=np.float64) -> AsrModel:
        dtype = resolve_dtype(dtype)
        encoder = EncoderParams.build(cfg, dtype)
        # a cabeça tem fluxo próprio para não deslocar a inicialização do encoder
        head_rng = np.random.default_rng([cfg.seed, vocab_size])
        head = LinearParams.build(cfg.d_model, vocab_size + 1, head_rng, dtype)
        return cls(encoder=encoder, head=head, vocab_size=vocab_size)

    def logits(self, features: np.ndarray, training: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        hidden, _ = encoder_forward(Tensor(features, dtype=self.dtype), self.encoder, training=training, rng=rng)
        return F.linear(hidden, self.head)

    def lattice(self, features: np.ndarray, training: bool = False, rng: np.random.Generator | None = None) -> LogProbLattice:
        return LogProbLattice(self.logits(features, training, rng))

    def metadata(self) -> dict:
        return {"config": self.config.to_dict(), "vocab_size": self.vocab_size, "dtype": dtype_name(self.dtype)}

    def save(self, path: str | Path) -> Path:
        return save_checkpoint(path, self.named_parameters(), self.metadata())

    @classmethod
    def load(cls, path: str | Path) -> AsrModel:
        metadata, arrays = load_checkpoint(path)
        try:
            cfg = EncoderConfig.from_dict(metadata["config"])
            vocab_size = int(metadata["vocab_size"])
            dtype = metadata["dtype"]
        except (KeyError, TypeError) as e:
            raise CheckpointFormatError(f"Metadados incompletos no checkpoint {path}: {e}") from e
        model = cls.build(cfg, vocab_size, dtype)
        assign_parameters(model.named_parameters(), arrays)
        return model

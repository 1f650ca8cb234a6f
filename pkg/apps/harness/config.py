from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from django.core.exceptions import ValidationError

from apps.encoder.config import EncoderConfig
from core.utils import DTYPE_CHOICES, _settings_value, read_json, write_json


@dataclass
class TrainConfig:
    """
    Configuração de um treino CTC.

    Atributos:
        encoder (EncoderConfig): Arquitetura treinada.
        batch_size (int): Elocuções por passo.
        steps (int): Passos do Adam.
        learning_rate (float): Taxa fixa (0 congela os parâmetros).
        betas (tuple): (β1, β2) do Adam.
        eps (float): Estabilizador do Adam.
        grad_clip (float): Norma global máxima dos gradientes.
        eval_interval (int): Passos entre avaliações no dev.
        output_dir (str): Onde gravar config, métricas e checkpoints.
        dtype (str): Precisão dos parâmetros durante o treino.
        seed (int): Semente do sorteio dos lotes e das máscaras de dropout.
    """

    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    batch_size: int = 16
    steps: int = 2000
    learning_rate: float = 1e-3
    betas: tuple = (0.9, 0.98)
    eps: float = 1e-9
    grad_clip: float = 5.0
    eval_interval: int = 100
    output_dir: str = "runs/train"
    dtype: str = field(default_factory=lambda: _settings_value("MULTICONV_TRAIN_DTYPE", "float32"))
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.encoder, dict):
            self.encoder = EncoderConfig.from_dict(self.encoder)
        self.betas = tuple(float(b) for b in self.betas)
        self.output_dir = str(self.output_dir)

    def clean_fields(self) -> None:
        errors = {}
        for name in ("batch_size", "steps", "eval_interval"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                errors[name] = f"Deve ser um inteiro positivo (recebido {value!r})."
        if not isinstance(self.learning_rate, (int, float)) or self.learning_rate < 0:
            errors["learning_rate"] = "A taxa de aprendizado não pode ser negativa."
        if len(self.betas) != 2 or not all(0.0 <= b < 1.0 for b in self.betas):
            errors["betas"] = f"Betas devem ser dois valores em [0, 1) (recebido {self.betas})."
        for name in ("eps", "grad_clip"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or value <= 0:
                errors[name] = f"Deve ser positivo (recebido {value!r})."
        if self.dtype not in DTYPE_CHOICES:
            errors["dtype"] = f"Precisão inválida '{self.dtype}'. Opções: {', '.join(DTYPE_CHOICES)}."
        if errors:
            raise ValidationError(errors)

    def full_clean(self) -> None:
        self.clean_fields()
        self.encoder.full_clean()

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        data["encoder"] = self.encoder.to_dict()
        data["betas"] = list(self.betas)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> TrainConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError({name: "Campo desconhecido." for name in unknown})
        return cls(**data)

    def save(self, path: str | Path) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str | Path) -> TrainConfig:
        return cls.from_dict(read_json(path))

    def replace(self, **changes) -> TrainConfig:
        return dataclasses.replace(self, **changes)

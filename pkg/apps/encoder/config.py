from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from django.core.exceptions import ValidationError

from apps.multiconv.choices import GROUPED_FUSIONS, ConvBlockKind, FusionKind
from apps.multiconv.params import DEFAULT_CONFORMER_KERNEL, DEFAULT_KERNELS, validate_kernels
from core.exceptions import ConfigurationError
from core.utils import read_json, write_json

MIN_FEATURE_DIM = 7


@dataclass
class EncoderConfig:
    """
    Hiperparâmetros do encoder Multi-Convformer.

    Atributos:
        num_layers (int): N camadas empilhadas.
        d_model (int): Largura d do modelo.
        heads (int): Cabeças de atenção (h | d).
        d_inter (int): Expansão do bloco de convolução (padrão 6·d).
        d_ffn (int): Largura interna das FFNs (padrão 4·d).
        kernels (tuple): Conjunto K de kernels ímpares, crescentes.
        fusion (str): sum | weighted | concat | depth.
        conv_block (str): multiconv | csgu | conformer.
        dropout (float): Taxa aplicada às saídas dos blocos.
        final_kernel (int): k_f da fusão depth (padrão max(K)).
        conformer_kernel (int): Kernel depthwise do baseline Conformer.
        feature_dim (int): Dimensão das features de entrada (80).
        seed (int): Semente da inicialização.
    """

    num_layers: int = 12
    d_model: int = 256
    heads: int = 4
    d_inter: int | None = None
    d_ffn: int | None = None
    kernels: tuple = DEFAULT_KERNELS
    fusion: str = FusionKind.SUM
    conv_block: str = ConvBlockKind.MULTICONV
    dropout: float = 0.1
    final_kernel: int | None = None
    conformer_kernel: int = DEFAULT_CONFORMER_KERNEL
    feature_dim: int = 80
    seed: int = 0

    def __post_init__(self):
        self.kernels = tuple(int(k) for k in self.kernels)
        self.fusion = str(self.fusion)
        self.conv_block = str(self.conv_block)
        if self.d_inter is None:
            self.d_inter = 6 * self.d_model
        if self.d_ffn is None:
            self.d_ffn = 4 * self.d_model
        if self.final_kernel is None and self.kernels:
            self.final_kernel = max(self.kernels)

    @property
    def d_prime(self) -> int:
        return self.d_inter // 2

    @property
    def csgu_kernel(self) -> int:
        """Kernel único do baseline CSGU: o maior de K."""
        return max(self.kernels)

    def clean_fields(self) -> None:
        errors = {}
        for name in ("num_layers", "d_model", "heads", "d_inter", "d_ffn", "feature_dim"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                errors[name] = f"Deve ser um inteiro positivo (recebido {value!r})."
        if self.fusion not in FusionKind.values:
            errors["fusion"] = f"Fusão inválida '{self.fusion}'. Opções: {', '.join(FusionKind.values)}."
        if self.conv_block not in ConvBlockKind.values:
            errors["conv_block"] = (
                f"Bloco inválido '{self.conv_block}'. Opções: {', '.join(ConvBlockKind.values)}."
            )
        if not isinstance(self.dropout, (int, float)) or not 0.0 <= self.dropout < 1.0:
            errors["dropout"] = "Taxa de dropout deve estar em [0, 1)."
        try:
            validate_kernels(self.kernels)
        except ConfigurationError as e:
            errors["kernels"] = str(e)
        for name in ("final_kernel", "conformer_kernel"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1 or value % 2 == 0:
                errors[name] = f"Deve ser um inteiro ímpar positivo (recebido {value!r})."
        if errors:
            raise ValidationError(errors)

    def clean(self) -> None:
        """Regras que envolvem mais de um campo."""
        errors = {}
        if self.d_model % self.heads != 0:
            errors["heads"] = f"h={self.heads} não divide d={self.d_model}."
        if self.d_inter % 2 != 0:
            errors["d_inter"] = f"d_inter={self.d_inter} deve ser par."
        elif self.fusion in GROUPED_FUSIONS and self.d_prime % len(self.kernels) != 0:
            errors["kernels"] = (
                f"|K|={len(self.kernels)} deve dividir d_inter/2={self.d_prime} na fusão '{self.fusion}'."
            )
        if self.feature_dim < MIN_FEATURE_DIM:
            errors["feature_dim"] = f"feature_dim deve ser ao menos {MIN_FEATURE_DIM}."
        if errors:
            raise ValidationError(errors)

    def full_clean(self) -> None:
        self.clean_fields()
        self.clean()

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["kernels"] = list(self.kernels)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> EncoderConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError({name: "Campo desconhecido." for name in unknown})
        return cls(**data)

    def save(self, path: str | Path) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str | Path) -> EncoderConfig:
        return cls.from_dict(read_json(path))

    def replace(self, **changes) -> EncoderConfig:
        """Cópia com campos sobrescritos; padrões derivados são recalculados quando a base muda."""
        data = self.to_dict()
        if "d_model" in changes:
            for derived, factor in (("d_inter", 6), ("d_ffn", 4)):
                if derived not in changes and data[derived] == factor * self.d_model:
                    data[derived] = None
        if "kernels" in changes and "final_kernel" not in changes and data["final_kernel"] == max(self.kernels):
            data["final_kernel"] = None
        data.update(changes)
        return EncoderConfig.from_dict(data)


def toy_config(**overrides) -> EncoderConfig:
    """Configuração de mesa: d=64, N=2, h=4, d_inter=384, K={3,7,11,15}."""
    base = dict(num_layers=2, d_model=64, heads=4, d_inter=384, kernels=(3, 7, 11, 15), fusion=FusionKind.DEPTH)
    base.update(overrides)
    return EncoderConfig(**base)

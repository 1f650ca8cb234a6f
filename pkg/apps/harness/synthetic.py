"""
Tarefa sintética de rotulação de sequências.

Cada token do vocabulário tem um template fixo de `template_frames` quadros;
uma elocução é a concatenação dos templates dos seus tokens somada a ruído
gaussiano. Layout em disco:

    manifest.json        especificação, sementes e membros de cada partição
    <partição>.f32       features em float32 little-endian, concatenadas
    <partição>.txt       transcrições ("id tok tok tok"), uma por linha
"""
from __future__ import annotations

import dataclasses
import logging
import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError

from core.exceptions import ConfigurationError, DatasetExistsError, EmptySplitError
from core.utils import read_json, spawn_seeds, write_json

logger = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test")
MANIFEST_NAME = "manifest.json"
FEATURE_DTYPE = np.dtype("<f4")


@dataclass
class SyntheticTaskSpec:
    vocab_size: int = 8
    template_frames: int = 12
    feature_dim: int = 80
    noise_std: float = 0.3
    min_tokens: int = 3
    max_tokens: int = 10
    train_size: int = 2000
    dev_size: int = 200
    test_size: int = 200
    seed: int = 0

    def clean_fields(self) -> None:
        errors = {}
        for name in ("vocab_size", "template_frames", "feature_dim", "min_tokens", "max_tokens"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                errors[name] = f"Deve ser um inteiro positivo (recebido {value!r})."
        for name in ("train_size", "dev_size", "test_size", "seed"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                errors[name] = f"Deve ser um inteiro não negativo (recebido {value!r})."
        if not isinstance(self.noise_std, (int, float)) or self.noise_std < 0:
            errors["noise_std"] = "O desvio do ruído não pode ser negativo."
        if errors:
            raise ValidationError(errors)

    def clean(self) -> None:
        if self.min_tokens > self.max_tokens:
            raise ValidationError({"min_tokens": f"min_tokens={self.min_tokens} maior que max_tokens={self.max_tokens}."})

    def full_clean(self) -> None:
        self.clean_fields()
        self.clean()

    def split_size(self, split: str) -> int:
        return getattr(self, f"{split}_size")

    def frames_for(self, num_tokens: int) -> int:
        return num_tokens * self.template_frames

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> SyntheticTaskSpec:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError({name: "Campo desconhecido." for name in unknown})
        return cls(**data)

    def save(self, path: str | Path) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str | Path) -> SyntheticTaskSpec:
        return cls.from_dict(read_json(path))


@dataclass
class Utterance:
    utt_id: str
    tokens: tuple[int, ...]
    features: np.ndarray  # [L, F]

    @property
    def frames(self) -> int:
        return self.features.shape[0]


@dataclass
class SyntheticDataset:
    spec: SyntheticTaskSpec
    splits: dict[str, list[Utterance]]
    root: Path | None = None

    @property
    def vocab_size(self) -> int:
        return self.spec.vocab_size

    def split(self, name: str) -> list[Utterance]:
        if name not in self.splits:
            raise ConfigurationError(f"Partição desconhecida '{name}'. Opções: {', '.join(self.splits)}.")
        utterances = self.splits[name]
        if not utterances:
            raise EmptySplitError(f"A partição '{name}' não tem elocuções.")
        return utterances


def make_templates(spec: SyntheticTaskSpec, seed: np.random.SeedSequence) -> np.ndarray:
    """Templates [V, template_frames, F] sorteados uma vez de gaussianas unitárias."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((spec.vocab_size, spec.template_frames, spec.feature_dim))


def sample_utterance(
    spec: SyntheticTaskSpec, templates: np.ndarray, rng: np.random.Generator
) -> tuple[tuple[int, ...], np.ndarray]:
    num_tokens = int(rng.integers(spec.min_tokens, spec.max_tokens + 1))
    tokens = tuple(int(t) for t in rng.integers(1, spec.vocab_size + 1, size=num_tokens))
    clean = np.concatenate([templates[t - 1] for t in tokens], axis=0)
    if spec.noise_std > 0:
        clean = clean + spec.noise_std * rng.standard_normal(clean.shape)
    return tokens, clean.astype(FEATURE_DTYPE)


def build_dataset(spec: SyntheticTaskSpec) -> SyntheticDataset:
    """Gera as três partições em memória, cada uma no seu fluxo de sementes."""
    spec.full_clean()
    template_seed, *split_seeds = spawn_seeds(spec.seed, 1 + len(SPLITS))
    templates = make_templates(spec, template_seed)
    splits = {}
    for split, seed in zip(SPLITS, split_seeds):
        rng = np.random.default_rng(seed)
        splits[split] = []
        for index in range(spec.split_size(split)):
            tokens, features = sample_utterance(spec, templates, rng)
            splits[split].append(Utterance(f"{split}-{index:05d}", tokens, features))
    return SyntheticDataset(spec=spec, splits=splits)


def generate_dataset(spec: SyntheticTaskSpec, out_dir: str | Path, force: bool = False) -> SyntheticDataset:
    """
    Gera e grava o dataset em `out_dir`.

    Um diretório existente e não vazio só é substituído com `force`; caso
    contrário levanta `DatasetExistsError`. A mesma semente produz arquivos
    idênticos byte a byte.
    """
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()):
        if not force:
            raise DatasetExistsError(f"O diretório {out_dir} já existe; use --force para sobrescrever.")
        shutil.rmtree(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dataset = build_dataset(spec)
    manifest = {"spec": spec.to_dict(), "feature_dtype": "float32", "splits": {}}
    for split, utterances in dataset.splits.items():
        entries, offset = [], 0
        with (out_dir / f"{split}.f32").open("wb") as fh:
            for utt in utterances:
                fh.write(utt.features.astype(FEATURE_DTYPE, copy=False).tobytes())
                entries.append({"id": utt.utt_id, "frames": utt.frames, "offset": offset})
                offset += utt.features.size
        lines = [" ".join([utt.utt_id, *(str(t) for t in utt.tokens)]) for utt in utterances]
        (out_dir / f"{split}.txt").write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
        manifest["splits"][split] = entries
    write_json(out_dir / MANIFEST_NAME, manifest)

    dataset.root = out_dir
    sizes = ", ".join(f"{split}={len(utts)}" for split, utts in dataset.splits.items())
    logger.info(f"Dataset sintético gerado em {out_dir} (V={spec.vocab_size}, {sizes}, semente {spec.seed}).")
    return dataset


def load_dataset(root: str | Path) -> SyntheticDataset:
    root = Path(root)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.exists():
        raise ConfigurationError(f"Manifesto do dataset não encontrado em {root}.")
    manifest = read_json(manifest_path)
    spec = SyntheticTaskSpec.from_dict(manifest["spec"])

    splits = {}
    for split, entries in manifest["splits"].items():
        flat = np.fromfile(root / f"{split}.f32", dtype=FEATURE_DTYPE)
        transcripts = {}
        for line in (root / f"{split}.txt").read_text(encoding="utf-8").splitlines():
            utt_id, *tokens = line.split()
            transcripts[utt_id] = tuple(int(t) for t in tokens)
        utterances = []
        for entry in entries:
            size = entry["frames"] * spec.feature_dim
            features = flat[entry["offset"] : entry["offset"] + size].reshape(entry["frames"], spec.feature_dim)
            utterances.append(Utterance(entry["id"], transcripts[entry["id"]], features.astype(np.float32)))
        splits[split] = utterances
    logger.debug(f"Dataset carregado de {root}: {', '.join(f'{s}={len(u)}' for s, u in splits.items())}.")
    return SyntheticDataset(spec=spec, splits=splits, root=root)

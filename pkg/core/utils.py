import json
import logging
from pathlib import Path

import numpy as np

from core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

DTYPE_CHOICES = {
    "float64": np.float64,
    "float32": np.float32,
}


def resolve_dtype(name: str | type | np.dtype | None) -> np.dtype:
    """
    Converte um nome de precisão ("float32"/"float64") em `np.dtype`.

    Quando `name` é None, usa `settings.MULTICONV_TRAIN_DTYPE` se o Django estiver
    configurado, e double precision caso contrário (testes de gradiente).
    """
    if name is None:
        name = _settings_value("MULTICONV_TRAIN_DTYPE", "float64")
    if isinstance(name, str):
        if name not in DTYPE_CHOICES:
            raise ConfigurationError(
                f"Precisão '{name}' não suportada. Use uma de: {', '.join(DTYPE_CHOICES)}"
            )
        return np.dtype(DTYPE_CHOICES[name])
    dtype = np.dtype(name)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ConfigurationError(f"Precisão '{dtype}' não suportada.")
    return dtype


def dtype_name(dtype: np.dtype) -> str:
    """Nome canônico ("float32"/"float64") de um dtype suportado."""
    return np.dtype(dtype).name


def make_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    """Gerador determinístico; repassa um `Generator` já existente sem copiá-lo."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = _settings_value("MULTICONV_DEFAULT_SEED", 0)
    return np.random.default_rng(int(seed))


def spawn_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    """Fluxos de sementes independentes derivados de uma semente mestre."""
    return np.random.SeedSequence(int(seed)).spawn(count)


def write_json(path: str | Path, payload: dict) -> Path:
    """Grava JSON com chaves ordenadas e final de linha, para diffs estáveis."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        logger.error(f"JSON inválido em {path}: {e}")
        raise ConfigurationError(f"Arquivo JSON inválido: {path} ({e})") from e


def _settings_value(name: str, default):
    from django.conf import settings

    if not settings.configured:
        return default
    return getattr(settings, name, default)

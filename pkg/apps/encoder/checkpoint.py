"""
Formato binário de checkpoint (little-endian):

    b"MCFK" | u32 versão | u32 tamanho do manifesto | manifesto JSON (UTF-8) | payloads

O manifesto lista cada tensor (nome, shape, dtype, offset relativo ao início
dos payloads) e carrega os metadados do modelo (configuração, vocabulário).
"""
from __future__ import annotations

import json
import logging
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from apps.autodiff.tensor import Tensor
from core.exceptions import CheckpointFormatError

logger = logging.getLogger(__name__)

MAGIC = b"MCFK"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sII")
_DTYPES = {"float32": "<f4", "float64": "<f8"}


def save_checkpoint(path: str | Path, tensors: Iterable[tuple[str, Tensor]], metadata: dict) -> Path:
    path = Path(path)
    entries, payloads, offset = [], [], 0
    for name, tensor in tensors:
        dtype_name = tensor.dtype.name
        if dtype_name not in _DTYPES:
            raise CheckpointFormatError(f"dtype '{dtype_name}' não suportado no checkpoint ({name}).")
        raw = np.ascontiguousarray(tensor.data, dtype=_DTYPES[dtype_name]).tobytes()
        entries.append({"name": name, "shape": list(tensor.shape), "dtype": dtype_name, "offset": offset})
        payloads.append(raw)
        offset += len(raw)

    manifest = json.dumps({"metadata": metadata, "tensors": entries}, sort_keys=True).encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, len(manifest)))
        fh.write(manifest)
        for raw in payloads:
            fh.write(raw)
    logger.info(f"Checkpoint salvo em {path} ({len(entries)} tensores, {offset} bytes de payload).")
    return path


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Lê um checkpoint; devolve (metadados, {nome: array})."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except FileNotFoundError:
        raise CheckpointFormatError(f"Checkpoint não encontrado: {path}") from None
    if len(blob) < _HEADER.size:
        raise CheckpointFormatError(f"Arquivo curto demais para um checkpoint: {path}")
    magic, version, manifest_len = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointFormatError(f"Assinatura inválida em {path}: {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"Versão de checkpoint {version} não suportada (esperado {FORMAT_VERSION}).")
    start = _HEADER.size + manifest_len
    try:
        manifest = json.loads(blob[_HEADER.size : start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f"Manifesto corrompido em {path}: {e}") from e

    arrays = {}
    for entry in manifest["tensors"]:
        dtype = np.dtype(_DTYPES[entry["dtype"]])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        begin = start + entry["offset"]
        if begin + count * dtype.itemsize > len(blob):
            raise CheckpointFormatError(f"Payload truncado para '{entry['name']}' em {path}")
        data = np.frombuffer(blob, dtype=dtype, count=count, offset=begin)
        arrays[entry["name"]] = data.reshape(entry["shape"]).astype(entry["dtype"])
    logger.info(f"Checkpoint carregado de {path} ({len(arrays)} tensores).")
    return manifest["metadata"], arrays


def assign_parameters(named: Iterable[tuple[str, Tensor]], arrays: dict[str, np.ndarray]) -> None:
    """Copia os arrays lidos para os tensores de um modelo com a mesma estrutura."""
    named = list(named)
    missing = [name for name, _ in named if name not in arrays]
    unexpected = sorted(set(arrays) - {name for name, _ in named})
    if missing or unexpected:
        raise CheckpointFormatError(
            f"Estrutura do checkpoint difere do modelo (faltando: {missing[:5]}, sobrando: {unexpected[:5]})."
        )
    for name, tensor in named:
        source = arrays[name]
        if source.shape != tensor.shape:
            raise CheckpointFormatError(f"Shape de '{name}' difere: {source.shape} vs {tensor.shape}")
        tensor.data = np.ascontiguousarray(source, dtype=source.dtype)
        tensor.grad = np.zeros_like(tensor.data)

from __future__ import annotations

import logging
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from core.exceptions import ContractError, DimensionError, TapeStateError

logger = logging.getLogger(__name__)

DEFAULT_DTYPE = np.float64

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_active_tape: ContextVar[Tape | None] = ContextVar("active_tape", default=None)
_grad_enabled: ContextVar[bool] = ContextVar("grad_enabled", default=True)


class Tensor:
    """
    Array denso participando de uma fita de diferenciação reversa.

    `data` é sempre um `np.ndarray` contíguo (row-major). Quando `requires_grad`
    está ligado, `grad` é um acumulador de mesma forma, iniciado em zeros e
    somado pelo backward. Tensores produzidos por operações guardam a fita que
    os registrou em `_tape`; folhas (parâmetros, entradas) não têm fita.
    """

    def __init__(self, data: Any, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            dtype = data.dtype if isinstance(data, np.ndarray) and data.dtype.kind == "f" else DEFAULT_DTYPE
        data = np.asarray(data, dtype=dtype)
        # ascontiguousarray promove 0-d para (1,); escalares ficam como estão
        if data.ndim > 0 and not data.flags.c_contiguous:
            data = np.ascontiguousarray(data)
        self.data = data
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad else None
        self._tape: Tape | None = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad.fill(0)

    def backward(self) -> None:
        """Propaga gradientes a partir deste escalar pela fita que o produziu."""
        if self._tape is None:
            raise ContractError("backward() exige um tensor produzido por operações registradas na fita.")
        self._tape.backward(self)

    # Açúcar sintático; as regras vivem em apps.autodiff.ops
    def __add__(self, other):
        from apps.autodiff import ops

        return ops.add(self, other) if isinstance(other, Tensor) else ops.add_scalar(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from apps.autodiff import ops

        return ops.sub(self, other) if isinstance(other, Tensor) else ops.add_scalar(self, -other)

    def __mul__(self, other):
        from apps.autodiff import ops

        return ops.mul(self, other) if isinstance(other, Tensor) else ops.scale(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from apps.autodiff import ops

        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from apps.autodiff import ops

        return ops.matmul(self, other)


@dataclass
class TapeRecord:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Tape:
    """
    Lista ordenada das operações registradas durante um forward.

    A ordem de inserção é topológica por construção (uma operação só é
    registrada depois que suas entradas existem). O backward percorre a lista
    em ordem reversa e acumula os gradientes sempre na mesma sequência, o que
    torna o resultado reprodutível bit a bit. Uma fita pertence a um único
    worker; fitas distintas podem rodar em paralelo compartilhando parâmetros
    apenas para leitura.

    Fitas abertas com `with Tape():` são explícitas. Fora delas cada grafo
    ganha uma fita implícita, e duas fitas implícitas se fundem quando uma
    operação junta seus tensores.
    """

    def __init__(self):
        self.records: list[TapeRecord] = []
        self.consumed = False
        self.explicit = False
        self._token = None

    def __len__(self) -> int:
        return len(self.records)

    def __enter__(self) -> Tape:
        self.explicit = True
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _active_tape.reset(self._token)
        self._token = None

    def record(self, op: str, inputs: tuple[Tensor, ...], output: Tensor, backward: BackwardFn) -> None:
        if self.consumed:
            raise TapeStateError(
                f"Fita já consumida por um backward; chame reset() antes de registrar '{op}'."
            )
        output._tape = self
        self.records.append(TapeRecord(op, inputs, output, backward))

    def absorb(self, other: Tape) -> None:
        """Anexa os registros de outra fita implícita; grafos disjuntos mantêm a ordem topológica."""
        if self.consumed or other.consumed:
            raise TapeStateError("Não é possível fundir fitas já consumidas por um backward.")
        for rec in other.records:
            rec.output._tape = self
        self.records.extend(other.records)
        other.records = []

    def reset(self) -> None:
        """Descarta os registros e libera a fita para um novo forward."""
        for rec in self.records:
            rec.output._tape = None
        self.records = []
        self.consumed = False

    def backward(self, loss: Tensor) -> None:
        if loss.shape != ():
            raise ContractError(f"A perda deve ser escalar; recebido shape {loss.shape}.")
        if not loss.requires_grad or loss._tape is not self:
            raise ContractError("A perda não foi produzida nesta fita.")
        if self.consumed:
            raise TapeStateError("backward() chamado duas vezes sem reset() da fita.")

        loss.grad += 1
        for rec in reversed(self.records):
            grads = rec.backward(rec.output.grad)
            for tensor, grad in zip(rec.inputs, grads):
                if grad is None or not tensor.requires_grad:
                    continue
                if grad.shape != tensor.shape:
                    raise DimensionError(
                        f"Regra de backward de '{rec.op}' devolveu gradiente de forma errada",
                        grad.shape,
                        tensor.shape,
                    )
                tensor.grad += grad
        self.consumed = True
        logger.debug(f"Backward concluído sobre {len(self.records)} operações.")


def active_tape() -> Tape | None:
    return _active_tape.get()


def apply_op(op: str, inputs: Sequence[Tensor], data: np.ndarray, backward: BackwardFn) -> Tensor:
    """
    Cria o tensor de saída de uma operação e, se algum operando exige gradiente,
    registra a regra de backward na fita correspondente.

    A fita é a mesma das entradas; sem fita nas entradas, usa a fita ativa
    (`with Tape():`) ou abre uma implícita. Entradas de fitas implícitas
    diferentes fundem as fitas; se alguma delas é explícita, é erro.
    """
    inputs = tuple(inputs)
    requires_grad = _grad_enabled.get() and any(t.requires_grad for t in inputs)
    data = np.asarray(data)
    out = Tensor(data, requires_grad=requires_grad, dtype=data.dtype)
    if not requires_grad:
        return out

    tapes = []
    for t in inputs:
        if t._tape is not None and all(t._tape is not seen for seen in tapes):
            tapes.append(t._tape)
    if len(tapes) > 1:
        if any(t.explicit for t in tapes):
            raise TapeStateError(f"Operação '{op}' mistura tensores de fitas diferentes.")
        for other in tapes[1:]:
            tapes[0].absorb(other)
    if tapes:
        tape = tapes[0]
    else:
        tape = active_tape()
        if tape is None:
            tape = Tape()
    tape.record(op, inputs, out, backward)
    return out


def as_tensor(value: Any, dtype=None) -> Tensor:
    """Embrulha arrays/escalares como constantes (sem gradiente)."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False, dtype=dtype)


@contextmanager
def no_grad():
    """Desliga o registro na fita (avaliação, diferenças finitas)."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)

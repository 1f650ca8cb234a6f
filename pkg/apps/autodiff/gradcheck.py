import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from apps.autodiff import ops
from apps.autodiff.tensor import Tensor, no_grad
from core.exceptions import ContractError

logger = logging.getLogger(__name__)


@dataclass
class GradCheckResult:
    """Resultado de uma checagem de gradiente por diferenças centrais."""

    name: str
    checked: int
    max_rel_error: float
    max_abs_error: float
    passed: bool


def random_projection(shape: tuple, rng: np.random.Generator, dtype=np.float64) -> Tensor:
    """Pesos fixos para reduzir uma saída tensorial a escalar; sortear uma vez por checagem."""
    return Tensor(rng.uniform(-1.0, 1.0, size=shape), dtype=dtype)


def projected(out: Tensor, weights: Tensor) -> Tensor:
    return ops.total(ops.mul(out, weights))


def check_gradients(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    *,
    name: str = "",
    h: float = 1e-5,
    rtol: float = 1e-5,
    atol: float = 1e-8,
    max_coords: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckResult:
    """
    Compara o gradiente da fita com diferenças finitas centrais.

    `fn` deve reconstruir a perda escalar a partir do estado atual de `tensors`
    a cada chamada. Uma coordenada passa quando o erro absoluto é menor que
    `atol` ou o erro relativo (sobre max(|analítico|, |numérico|)) é menor
    que `rtol`.

    Args:
        fn: Função sem argumentos que devolve a perda escalar.
        tensors: Tensores (com requires_grad) cujos gradientes serão checados.
        max_coords: Se informado, sorteia no máximo esse número de coordenadas.
        rng: Gerador usado no sorteio das coordenadas.

    Returns:
        `GradCheckResult` com os piores erros observados.
    """
    if any(not t.requires_grad for t in tensors):
        raise ContractError("Todos os tensores checados precisam de requires_grad=True.")
    for t in tensors:
        t.zero_grad()
    fn().backward()
    analytic = [t.grad.copy() for t in tensors]

    coords = [(i, j) for i, t in enumerate(tensors) for j in range(t.size)]
    if max_coords is not None and len(coords) > max_coords:
        rng = rng or np.random.default_rng(0)
        picked = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[k] for k in sorted(picked)]

    worst_rel, worst_abs, passed = 0.0, 0.0, True
    with no_grad():
        for i, j in coords:
            flat = tensors[i].data.reshape(-1)
            original = flat[j]
            flat[j] = original + h
            plus = fn().item()
            flat[j] = original - h
            minus = fn().item()
            flat[j] = original

            numeric = (plus - minus) / (2 * h)
            exact = float(analytic[i].reshape(-1)[j])
            abs_err = abs(exact - numeric)
            scale_ = max(abs(exact), abs(numeric))
            rel_err = abs_err / scale_ if scale_ > 0 else 0.0
            worst_abs = max(worst_abs, abs_err)
            if abs_err > atol:
                worst_rel = max(worst_rel, rel_err)
                if rel_err > rtol:
                    passed = False

    if not passed:
        logger.warning(
            f"Checagem de gradiente '{name}' falhou: erro relativo máximo {worst_rel:.3e} (tolerância {rtol:.0e})"
        )
    return GradCheckResult(name, len(coords), worst_rel, worst_abs, passed)

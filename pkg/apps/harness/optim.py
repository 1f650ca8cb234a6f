from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from apps.autodiff.tensor import Tensor
from core.exceptions import ConfigurationError


def global_grad_norm(params: Sequence[Tensor]) -> float:
    return math.sqrt(sum(float(np.sum(p.grad.astype(np.float64) ** 2)) for p in params))


def clip_grad_norm(params: Sequence[Tensor], max_norm: float) -> float:
    """Reescala os gradientes quando a norma global passa de `max_norm`; devolve a norma original."""
    norm = global_grad_norm(params)
    if max_norm > 0 and norm > max_norm:
        factor = max_norm / (norm + 1e-12)
        for p in params:
            p.grad *= p.grad.dtype.type(factor)
    return norm


class Adam:
    """
    Adam com taxa fixa e correção de viés.

    Estados (m, v) são mantidos em float64 independentemente da precisão dos
    parâmetros; a atualização é convertida para o dtype do parâmetro.
    """

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.98),
        eps: float = 1e-9,
    ):
        if lr < 0:
            raise ConfigurationError(f"Taxa de aprendizado negativa: {lr}.")
        if not all(0.0 <= b < 1.0 for b in betas):
            raise ConfigurationError(f"Betas do Adam devem estar em [0, 1): {betas}.")
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.steps = 0
        self._m = [np.zeros(p.shape) for p in self.params]
        self._v = [np.zeros(p.shape) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        self.steps += 1
        if self.lr == 0:
            return
        correction1 = 1.0 - self.beta1**self.steps
        correction2 = 1.0 - self.beta2**self.steps
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad.astype(np.float64)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            p.data -= update.astype(p.dtype)

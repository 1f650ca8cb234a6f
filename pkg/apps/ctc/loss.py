"""
CTC em espaço logarítmico: recursão forward-backward sobre a sequência
estendida com brancos intercalados (branco = 0, tokens em [1, V]).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from apps.autodiff.tensor import Tensor, apply_op
from apps.layers import functional as F
from core.exceptions import ConfigurationError, DimensionError

logger = logging.getLogger(__name__)

BLANK = 0


@dataclass
class CtcTarget:
    tokens: tuple[int, ...]

    def __post_init__(self):
        self.tokens = tuple(int(t) for t in self.tokens)
        if not self.tokens:
            raise ConfigurationError("O alvo CTC precisa de ao menos um token (M ≥ 1).")
        if min(self.tokens) < 1:
            raise ConfigurationError(f"Ids de token começam em 1 (0 é o branco); recebido {self.tokens}.")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def repeats(self) -> int:
        return sum(1 for a, b in zip(self.tokens, self.tokens[1:]) if a == b)

    @property
    def min_frames(self) -> int:
        """Menor T com alinhamento viável: M + repetições adjacentes."""
        return len(self.tokens) + self.repeats

    def extended(self) -> np.ndarray:
        """Sequência estendida de tamanho 2M+1: branco, y1, branco, y2, ..., branco."""
        ext = np.full(2 * len(self.tokens) + 1, BLANK, dtype=np.int64)
        ext[1::2] = self.tokens
        return ext


class LogProbLattice:
    """Log-probabilidades por quadro [T, V+1] obtidas por log-softmax dos logits."""

    def __init__(self, logits: Tensor):
        if logits.ndim != 2 or logits.shape[1] < 2:
            raise DimensionError("LogProbLattice espera logits [T, V+1] com V ≥ 1", logits.shape)
        self.logits = logits
        self.log_probs = F.log_softmax(logits)

    @classmethod
    def from_log_probs(cls, log_probs: np.ndarray) -> LogProbLattice:
        """Rede já normalizada (testes e oráculos): log_softmax de log-probs é a identidade."""
        return cls(Tensor(np.asarray(log_probs, dtype=np.float64)))

    @property
    def frames(self) -> int:
        return self.log_probs.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.log_probs.shape[1] - 1


@dataclass
class CtcResult:
    loss: Tensor
    feasible: bool

    @property
    def value(self) -> float:
        return self.loss.item()


def _allowed_skip(ext: np.ndarray) -> np.ndarray:
    """Transição s-2 -> s permitida quando ext[s] não é branco e difere de ext[s-2]."""
    skip = np.zeros(len(ext), dtype=bool)
    skip[2:] = (ext[2:] != BLANK) & (ext[2:] != ext[:-2])
    return skip


def _forward_backward(lp: np.ndarray, ext: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    frames, states = lp.shape[0], len(ext)
    skip = _allowed_skip(ext)
    emit = lp[:, ext]  # [T, S]

    alpha = np.full((frames, states), -np.inf)
    alpha[0, 0] = emit[0, 0]
    if states > 1:
        alpha[0, 1] = emit[0, 1]
    for t in range(1, frames):
        prev = alpha[t - 1]
        stay = prev
        step = np.concatenate(([-np.inf], prev[:-1]))
        jump = np.where(skip, np.concatenate(([-np.inf, -np.inf], prev[:-2])), -np.inf)
        alpha[t] = logsumexp(np.stack([stay, step, jump]), axis=0) + emit[t]

    beta = np.full((frames, states), -np.inf)
    beta[-1, -1] = emit[-1, -1]
    if states > 1:
        beta[-1, -2] = emit[-1, -2]
    skip_next = np.concatenate((skip[2:], [False, False]))  # s -> s+2 permitido
    for t in range(frames - 2, -1, -1):
        nxt = beta[t + 1]
        stay = nxt
        step = np.concatenate((nxt[1:], [-np.inf]))
        jump = np.where(skip_next, np.concatenate((nxt[2:], [-np.inf, -np.inf])), -np.inf)
        beta[t] = logsumexp(np.stack([stay, step, jump]), axis=0) + emit[t]

    tail = alpha[-1, -2:] if states > 1 else alpha[-1, -1:]
    return alpha, beta, float(logsumexp(tail))


def ctc_loss(lattice: LogProbLattice, target: CtcTarget) -> CtcResult:
    """
    −log Σ_{caminhos que colapsam em y} Π_t p_t(caminho_t).

    O gradiente em relação às log-probs é −γ (ocupação por símbolo), e segue
    pela log-softmax até os logits. Alvo inviável (T < M + repetições) devolve
    perda +∞ com `feasible=False` e um aviso.
    """
    log_probs = lattice.log_probs
    if max(target.tokens) > lattice.vocab_size:
        raise ConfigurationError(f"Token {max(target.tokens)} fora do vocabulário V={lattice.vocab_size}.")
    if lattice.frames < target.min_frames:
        logger.warning(
            f"Instância CTC inviável: T={lattice.frames} < {target.min_frames} (M={len(target)}, "
            f"repetições={target.repeats})."
        )
        infinite = Tensor(np.asarray(np.inf, dtype=log_probs.dtype))
        return CtcResult(infinite, feasible=False)

    lp = log_probs.data.astype(np.float64, copy=False)
    ext = target.extended()
    alpha, beta, log_likelihood = _forward_backward(lp, ext)

    def backward(g):
        # γ_t(k) = Σ_{s: ext[s]=k} exp(α_t(s) + β_t(s) − emit_t(s) − log p(y|x))
        occupancy = np.exp(alpha + beta - lp[:, ext] - log_likelihood)
        gamma = np.zeros_like(lp)
        np.add.at(gamma, (slice(None), ext), occupancy)
        return ((-g * gamma).astype(log_probs.dtype, copy=False),)

    value = np.asarray(-log_likelihood, dtype=log_probs.dtype)
    return CtcResult(apply_op("ctc_loss", (log_probs,), value, backward), feasible=True)


def ctc_greedy_decode(lattice: LogProbLattice | np.ndarray) -> list[int]:
    """Argmax por quadro (empate -> menor id), colapsa repetições e remove brancos."""
    scores = lattice.log_probs.data if isinstance(lattice, LogProbLattice) else np.asarray(lattice)
    return list(collapse_path(scores.argmax(axis=-1).tolist()))


def collapse_path(path: Sequence[int]) -> tuple[int, ...]:
    out, previous = [], None
    for token in path:
        if token != previous and token != BLANK:
            out.append(token)
        previous = token
    return tuple(out)

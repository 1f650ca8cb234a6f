from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class EditDistance:
    distance: int
    substitutions: int
    insertions: int
    deletions: int
    ref_length: int

    @property
    def rate(self) -> float:
        """distância / |ref|; +∞ quando a referência é vazia e a hipótese não."""
        if self.ref_length == 0:
            return math.inf if self.distance else 0.0
        return self.distance / self.ref_length

    def __iter__(self):
        # desempacota como (distance, substitutions, insertions, deletions)
        return iter((self.distance, self.substitutions, self.insertions, self.deletions))


def edit_distance(hyp: Sequence[int], ref: Sequence[int]) -> EditDistance:
    """Levenshtein com custos unitários, com a decomposição em S/I/D por backtrace."""
    hyp, ref = list(hyp), list(ref)
    rows, cols = len(ref) + 1, len(hyp) + 1
    table = np.zeros((rows, cols), dtype=np.int64)
    table[:, 0] = np.arange(rows)
    table[0, :] = np.arange(cols)
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            table[i, j] = min(table[i - 1, j - 1] + cost, table[i - 1, j] + 1, table[i, j - 1] + 1)

    subs = ins = dels = 0
    i, j = len(ref), len(hyp)
    while i > 0 or j > 0:
        if i > 0 and j > 0 and table[i, j] == table[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]):
            subs += int(ref[i - 1] != hyp[j - 1])
            i, j = i - 1, j - 1
        elif i > 0 and table[i, j] == table[i - 1, j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return EditDistance(int(table[-1, -1]), subs, ins, dels, len(ref))

"""ROC AUC via the Mann-Whitney rank statistic.

AUC = (concordant pairs + 0.5 * tied pairs) / (members * non-members),
computed from tied ranks in integer arithmetic (doubled ranks), so the result
is exactly the brute-force pair count ratio, not merely close to it.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from mialab.errors import DataError


def roc_auc(scores: Sequence[float], labels: Sequence[bool | int]) -> float:
    """labels: truthy = member (positive class)."""
    scores = list(scores)
    labels = [bool(l) for l in labels]
    if len(scores) != len(labels):
        raise DataError(f"{len(scores)} scores vs {len(labels)} labels")
    if not all(math.isfinite(s) for s in scores):
        raise DataError("scores must be finite")
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("both classes must be present")

    order = sorted(range(len(scores)), key=lambda i: scores[i])
    # doubled tied ranks stay integral: a tie group over sorted positions
    # i..j (0-based) has doubled rank (i+1) + (j+1)
    twice_rank_sum_pos = 0
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        twice_rank = (i + 1) + (j + 1)
        for k in range(i, j + 1):
            if labels[order[k]]:
                twice_rank_sum_pos += twice_rank
        i = j + 1

    twice_u = twice_rank_sum_pos - n_pos * (n_pos + 1)  # = 2*concordant + ties
    return twice_u / (2 * n_pos * n_neg)


def scored_labels(pairs: Iterable[tuple[float, bool | int]]) -> tuple[list[float], list[bool]]:
    """Split (score, label) pairs into parallel lists."""
    scores, labels = [], []
    for s, l in pairs:
        scores.append(float(s))
        labels.append(bool(l))
    return scores, labels

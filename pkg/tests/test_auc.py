"""Rank AUC tests.

The oracle is brute-force O(n^2) pair counting in integer arithmetic,
independent of the rank-based implementation.
"""

import numpy as np
import pytest

from mialab.errors import DataError
from mialab.metrics import roc_auc


def brute_force_auc(scores, labels) -> float:
    """(2 * concordant + ties) / (2 * n_pos * n_neg), all integers."""
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    twice = 0
    for p in pos:
        for n in neg:
            if p > n:
                twice += 2
            elif p == n:
                twice += 1
    return twice / (2 * len(pos) * len(neg))


def test_perfect_separation():
    assert roc_auc([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0]) == 1.0


def test_all_ties_give_half():
    assert roc_auc([0.5] * 6, [1, 1, 1, 0, 0, 0]) == 0.5


def test_hand_counted_case():
    # pairs: (0.7,0.6)+, (0.7,0.1)+, (0.4,0.6)-, (0.4,0.1)+ -> 3 of 4
    assert roc_auc([0.7, 0.4, 0.6, 0.1], [1, 1, 0, 0]) == 0.75


def test_matches_brute_force_with_ties(rng):
    for trial in range(30):
        n = int(rng.integers(5, 60))
        scores = rng.integers(0, 8, size=n).astype(float).tolist()  # many ties
        labels = rng.integers(0, 2, size=n).tolist()
        if sum(labels) in (0, n):
            continue
        assert roc_auc(scores, labels) == brute_force_auc(scores, labels)


def test_monotone_transform_invariance(rng):
    scores = rng.standard_normal(200).tolist()
    labels = (rng.random(200) < 0.4).tolist()
    base = roc_auc(scores, labels)
    assert roc_auc([3 * s + 7 for s in scores], labels) == base
    assert roc_auc(np.tanh(scores).tolist(), labels) == base


def test_single_class_rejected():
    with pytest.raises(DataError):
        roc_auc([0.1, 0.2], [1, 1])
    with pytest.raises(DataError):
        roc_auc([0.1, 0.2], [0, 0])


def test_nonfinite_scores_rejected():
    with pytest.raises(DataError):
        roc_auc([0.1, float("nan")], [1, 0])
    with pytest.raises(DataError):
        roc_auc([0.1, float("inf")], [1, 0])


def test_length_mismatch_rejected():
    with pytest.raises(DataError):
        roc_auc([0.1], [1, 0])

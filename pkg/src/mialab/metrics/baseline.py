"""Fixed-feature prototype-similarity baseline.

Plays the role of a zero-shot reference classifier: no training, just cosine
similarity in the fixed random-feature space against per-class prototypes
(mean feature of 16 exemplars each). score = cos(phi(x), proto_member) -
cos(phi(x), proto_nonmember); swapping prototypes negates the score exactly.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from mialab.errors import DataError, DimensionError
from mialab.metrics.features import FeatureEmbedder

PROTOTYPE_EXEMPLARS = 16


def build_prototypes(
    member_exemplars: Sequence[np.ndarray],
    nonmember_exemplars: Sequence[np.ndarray],
    extractor_seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    if len(member_exemplars) == 0 or len(nonmember_exemplars) == 0:
        raise DataError("prototypes need at least one exemplar per class")
    phi = FeatureEmbedder(extractor_seed)
    return phi(member_exemplars).mean(axis=0), phi(nonmember_exemplars).mean(axis=0)


def _cos(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v) / (nu * nv)


def baseline_score(
    img: np.ndarray,
    protos: tuple[np.ndarray, np.ndarray],
    extractor_seed: int = 0,
) -> float:
    """Higher = more member-like."""
    return baseline_scores([img], protos, extractor_seed)[0]


def baseline_scores(
    images: Sequence[np.ndarray],
    protos: tuple[np.ndarray, np.ndarray],
    extractor_seed: int = 0,
) -> list[float]:
    proto_m, proto_n = protos
    if proto_m.shape != proto_n.shape:
        raise DimensionError("prototype dimensions differ")
    feats = FeatureEmbedder(extractor_seed)(images)
    if feats.shape[1] != proto_m.shape[0]:
        raise DimensionError(
            f"feature dim {feats.shape[1]} != prototype dim {proto_m.shape[0]}"
        )
    return [_cos(f, proto_m) - _cos(f, proto_n) for f in feats]

"""Deterministic prompt embeddings.

No learned language model: each known token maps to a fixed Gaussian vector
keyed by a hash of the token string, and a prompt embeds as the mean of its
token vectors. Unknown tokens map to the UNK id, whose vector is zero so an
out-of-vocabulary word contributes nothing; the empty prompt is the all-zeros
NULL embedding used for the unconditional branch.
"""

from __future__ import annotations

import hashlib

import numpy as np

EMBED_DIM = 32
_SALT = "mialab-embed-v1"


def _token_seed(token: str) -> int:
    h = hashlib.sha256(f"{_SALT}\x1f{token}".encode("utf-8")).digest()
    return int.from_bytes(h[:8], "little")


def token_vector(token: str) -> np.ndarray:
    rng = np.random.default_rng(_token_seed(token))
    return rng.standard_normal(EMBED_DIM).astype(np.float32) / np.sqrt(EMBED_DIM)


_UNK_VECTOR = np.zeros(EMBED_DIM, dtype=np.float32)


def build_vocab(captions) -> list[str]:
    """Sorted whitespace-token vocabulary over an iterable of captions."""
    tokens: set[str] = set()
    for c in captions:
        tokens.update(c.split())
    return sorted(tokens)


def null_embedding() -> np.ndarray:
    return np.zeros(EMBED_DIM, dtype=np.float32)


def embed_prompt(text: str, vocab) -> np.ndarray:
    """Mean of token vectors; empty text gives the NULL embedding."""
    tokens = text.split()
    if not tokens:
        return null_embedding()
    known = set(vocab)
    vecs = [token_vector(t) if t in known else _UNK_VECTOR for t in tokens]
    return np.mean(vecs, axis=0, dtype=np.float64).astype(np.float32)

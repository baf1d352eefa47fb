"""Deterministic seed derivation and torch runtime pinning.

Every random draw in the package flows from an explicit seed through either
a numpy Generator or a torch.Generator; nothing touches the global RNGs.
Named sub-seeds are derived by hashing, so independent components never
share a stream and results do not depend on execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np
import torch


def derive_seed(*parts: object) -> int:
    """Collapse a tuple of labels/ints into a stable 63-bit seed."""
    h = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "little") & 0x7FFF_FFFF_FFFF_FFFF


def np_rng(*parts: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))


def torch_gen(*parts: object) -> torch.Generator:
    g = torch.Generator()
    g.manual_seed(derive_seed(*parts))
    return g


def pin_torch_runtime() -> None:
    """Single-threaded deterministic torch: required for byte-identical reruns.

    The models here are tiny, so one thread is not a bottleneck; it removes
    the only source of run-to-run float nondeterminism on CPU.
    """
    torch.set_num_threads(1)
    torch.use_deterministic_algorithms(True)

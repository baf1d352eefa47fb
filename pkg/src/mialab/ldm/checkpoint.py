"""Binary checkpoint container shared by the diffusion and attack models.

Layout: magic "MIALAB01"; u32 array count; per array (sorted by name):
u32 name length, name (UTF-8), u32 rank, rank x u64 shape, 4-byte dtype tag
("f32 "), raw little-endian float32 data in C order; then u64 provenance
length + provenance JSON (UTF-8). Everything little-endian.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mialab.errors import FormatError, StorageError
from mialab.ldm.schedule import NoiseSchedule

MAGIC = b"MIALAB01"
_DTYPE_TAG = b"f32 "


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray], provenance: dict) -> None:
    chunks = [MAGIC, struct.pack("<I", len(arrays))]
    for name in sorted(arrays):
        arr = np.asarray(arrays[name], dtype="<f4")  # keeps rank-0 arrays rank 0
        if not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        name_b = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name_b)))
        chunks.append(name_b)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(_DTYPE_TAG)
        chunks.append(arr.tobytes())
    prov = json.dumps(provenance, sort_keys=True, separators=(",", ":")).encode("utf-8")
    chunks.append(struct.pack("<Q", len(prov)))
    chunks.append(prov)
    try:
        Path(path).write_bytes(b"".join(chunks))
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def load_arrays(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
    if raw[:8] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:8]!r}")
    pos = 8

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(raw):
            raise FormatError(f"{path}: truncated at byte {pos}")
        out = raw[pos : pos + n]
        pos += n
        return out

    (count,) = struct.unpack("<I", take(4))
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{rank}Q", take(8 * rank)) if rank else ()
        tag = take(4)
        if tag != _DTYPE_TAG:
            raise FormatError(f"{path}: unknown dtype tag {tag!r}")
        n_items = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(take(4 * n_items), dtype="<f4").reshape(shape)
        arrays[name] = data.copy()
    (prov_len,) = struct.unpack("<Q", take(8))
    provenance = json.loads(take(prov_len).decode("utf-8"))
    return arrays, provenance


@dataclass
class DiffusionCheckpoint:
    """Target model M: autoencoder + denoiser + schedule + vocab + provenance."""

    ae_state: dict[str, np.ndarray]
    dn_state: dict[str, np.ndarray]
    schedule: NoiseSchedule
    vocab: list[str]
    arch: dict
    provenance: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)  # recon_mae, loss curves, config

    def save(self, path: str | Path) -> None:
        arrays = {f"ae.{k}": v for k, v in self.ae_state.items()}
        arrays.update({f"dn.{k}": v for k, v in self.dn_state.items()})
        save_arrays(
            path,
            arrays,
            {
                "kind": "diffusion",
                # betas ride in the JSON blob: the array section is f32-only
                # and the schedule must round-trip at full precision
                "betas": self.schedule.betas.tolist(),
                "vocab": self.vocab,
                "arch": self.arch,
                "provenance": self.provenance,
                "meta": self.meta,
            },
        )

    @classmethod
    def load(cls, path: str | Path) -> "DiffusionCheckpoint":
        arrays, prov = load_arrays(path)
        if prov.get("kind") != "diffusion":
            raise FormatError(f"{path}: not a diffusion checkpoint")
        ae = {k[3:]: v for k, v in arrays.items() if k.startswith("ae.")}
        dn = {k[3:]: v for k, v in arrays.items() if k.startswith("dn.")}
        return cls(
            ae_state=ae,
            dn_state=dn,
            schedule=NoiseSchedule(np.array(prov["betas"], dtype=np.float64)),
            vocab=list(prov["vocab"]),
            arch=dict(prov["arch"]),
            provenance=list(prov["provenance"]),
            meta=dict(prov.get("meta", {})),
        )

"""Dataset manifests: the record list binding images to captions and roles.

On disk a manifest is JSONL, one record per line with keys image_id, path,
caption, source, role, watermark (plus optional synthesis attrs). Paths are
stored relative to the manifest file and resolved to absolute on load.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from mialab.errors import ConfigError, DataError, SizeError, StorageError
from mialab.synthdata.ppm import read_ppm

ROLES = ("seen", "unseen", "generated")
WATERMARK_KINDS = ("none", "visible", "hidden")


@dataclass(frozen=True)
class ManifestRecord:
    image_id: str
    path: str
    caption: str
    source: str  # institution tag: A | B | WILD
    role: str = "unseen"
    watermark: str = "none"
    attrs: dict = field(default_factory=dict)

    def to_json(self) -> str:
        obj = {
            "image_id": self.image_id,
            "path": self.path,
            "caption": self.caption,
            "source": self.source,
            "role": self.role,
            "watermark": self.watermark,
        }
        if self.attrs:
            obj["attrs"] = self.attrs
        return json.dumps(obj, sort_keys=True)


@dataclass
class DatasetManifest:
    records: list[ManifestRecord] = field(default_factory=list)

    def __post_init__(self):
        ids = [r.image_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate image_ids in manifest")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ManifestRecord]:
        return iter(self.records)

    def ids(self) -> set[str]:
        return {r.image_id for r in self.records}

    def digest(self) -> str:
        """Stable content id over (image_id, caption, role, watermark) tuples."""
        h = hashlib.sha256()
        for r in sorted(self.records, key=lambda r: r.image_id):
            h.update(f"{r.image_id}\x1f{r.caption}\x1f{r.role}\x1f{r.watermark}\n".encode())
        return h.hexdigest()[:16]

    def load_images(self) -> np.ndarray:
        """All images as one float32 array (N, H, W, 3), sorted by image_id."""
        recs = sorted(self.records, key=lambda r: r.image_id)
        if not recs:
            raise DataError("empty manifest")
        return np.stack([read_ppm(r.path) for r in recs])

    def sorted_records(self) -> list[ManifestRecord]:
        return sorted(self.records, key=lambda r: r.image_id)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        base = path.parent
        lines = []
        for r in sorted(self.records, key=lambda r: r.image_id):
            rel = os.path.relpath(r.path, base) if os.path.isabs(r.path) else r.path
            lines.append(replace(r, path=Path(rel).as_posix()).to_json())
        try:
            path.write_text("\n".join(lines) + ("\n" if lines else ""))
        except OSError as exc:
            raise StorageError(f"cannot write {path}: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        base = path.parent
        records = []
        try:
            text = path.read_text()
        except OSError as exc:
            raise StorageError(f"cannot read {path}: {exc}") from exc
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            p = Path(obj["path"])
            if not p.is_absolute():
                p = (base / p).resolve()
            records.append(
                ManifestRecord(
                    image_id=obj["image_id"],
                    path=str(p),
                    caption=obj["caption"],
                    source=obj["source"],
                    role=obj.get("role", "unseen"),
                    watermark=obj.get("watermark", "none"),
                    attrs=obj.get("attrs", {}),
                )
            )
        return cls(records)


def partition(
    manifest: DatasetManifest, seen_fraction: float, seed: int
) -> tuple[DatasetManifest, DatasetManifest]:
    """Disjoint, exhaustive seen/unseen split, deterministic in seed."""
    if not 0.0 < seen_fraction < 1.0:
        raise ConfigError(f"seen_fraction must be in (0, 1), got {seen_fraction}")
    recs = manifest.sorted_records()
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(recs))
    n_seen = int(round(seen_fraction * len(recs)))
    seen_idx = set(order[:n_seen].tolist())
    seen = [replace(recs[i], role="seen") for i in range(len(recs)) if i in seen_idx]
    unseen = [replace(recs[i], role="unseen") for i in range(len(recs)) if i not in seen_idx]
    return DatasetManifest(seen), DatasetManifest(unseen)


def mix(
    a: DatasetManifest, b: DatasetManifest, ratio: tuple[int, int]
) -> DatasetManifest:
    """Combine two manifests at an integer ratio, maximizing total size.

    ratio (ra, rb) takes k*ra records from a and k*rb from b with the largest
    feasible k; (1, 0) returns a unchanged. Selection is the sorted-by-id
    prefix, so the operation is a pure function of its arguments.
    """
    ra, rb = ratio
    if ra < 0 or rb < 0 or (ra == 0 and rb == 0):
        raise ConfigError(f"invalid ratio {ratio}")
    caps = []
    if ra > 0:
        caps.append(len(a) // ra)
    if rb > 0:
        caps.append(len(b) // rb)
    k = min(caps)
    if k == 0:
        raise SizeError(
            f"ratio {ra}:{rb} needs at least {ra}+{rb} records, have {len(a)}+{len(b)}"
        )
    picked = a.sorted_records()[: k * ra] + b.sorted_records()[: k * rb]
    return DatasetManifest(picked)


def concat(parts: Iterable[DatasetManifest]) -> DatasetManifest:
    records: list[ManifestRecord] = []
    for m in parts:
        records.extend(m.records)
    return DatasetManifest(records)

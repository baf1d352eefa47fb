"""Watermark overlays: opaque corner logo or 1%-visible full-frame logo.

The blend is out = (1 - alpha) * img + alpha * 1.0 on pixels covered by the
glyph bitmap; uncovered pixels are untouched. VISIBLE means alpha = 1.0 in
the top-right quarter of the frame; HIDDEN means alpha = 0.01 over the full
frame.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from pathlib import Path

import numpy as np

from mialab.errors import ConfigError, DimensionError
from mialab.synthdata.manifest import DatasetManifest, ManifestRecord
from mialab.synthdata.ppm import read_ppm, write_ppm

# 8x8 "M" logo bitmap (1 = overlay pixel)
GLYPH = np.array(
    [
        [1, 0, 0, 0, 0, 0, 0, 1],
        [1, 1, 0, 0, 0, 0, 1, 1],
        [1, 0, 1, 0, 0, 1, 0, 1],
        [1, 0, 0, 1, 1, 0, 0, 1],
        [1, 0, 0, 1, 1, 0, 0, 1],
        [1, 0, 0, 0, 0, 0, 0, 1],
        [1, 0, 0, 0, 0, 0, 0, 1],
        [1, 0, 0, 0, 0, 0, 0, 1],
    ],
    dtype=np.uint8,
)

KIND_NONE = "none"
KIND_VISIBLE = "visible"
KIND_HIDDEN = "hidden"


@dataclass(frozen=True)
class WatermarkSpec:
    kind: str
    alpha: float
    placement: str  # corner-top-right | full-frame
    glyph: np.ndarray = GLYPH

    def __post_init__(self):
        if self.kind == KIND_VISIBLE and (self.alpha != 1.0 or self.placement != "corner-top-right"):
            raise ConfigError("visible watermark requires alpha=1.0, corner-top-right")
        if self.kind == KIND_HIDDEN and (self.alpha != 0.01 or self.placement != "full-frame"):
            raise ConfigError("hidden watermark requires alpha=0.01, full-frame")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")

    @classmethod
    def visible(cls) -> "WatermarkSpec":
        return cls(kind=KIND_VISIBLE, alpha=1.0, placement="corner-top-right")

    @classmethod
    def hidden(cls) -> "WatermarkSpec":
        return cls(kind=KIND_HIDDEN, alpha=0.01, placement="full-frame")


def _scale_glyph(glyph: np.ndarray, th: int, tw: int) -> np.ndarray:
    """Nearest-neighbor resize of the binary glyph to (th, tw)."""
    rows = (np.arange(th) * glyph.shape[0]) // th
    cols = (np.arange(tw) * glyph.shape[1]) // tw
    return glyph[np.ix_(rows, cols)]


def apply_watermark(img: np.ndarray, wm: WatermarkSpec) -> np.ndarray:
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) image, got shape {img.shape}")
    h, w = img.shape[:2]
    if wm.placement == "corner-top-right":
        gh, gw = h // 4, w // 4
        r0, c0 = 0, w - gw
    elif wm.placement == "full-frame":
        gh, gw = h, w
        r0, c0 = 0, 0
    else:
        raise ConfigError(f"unknown placement {wm.placement!r}")
    if gh < wm.glyph.shape[0] or gw < wm.glyph.shape[1]:
        raise DimensionError(
            f"glyph {wm.glyph.shape} does not fit {gh}x{gw} region of {h}x{w} image"
        )
    out = img.copy()
    mask = _scale_glyph(wm.glyph, gh, gw).astype(bool)
    region = out[r0 : r0 + gh, c0 : c0 + gw]
    blended = (1.0 - wm.alpha) * region[mask] + wm.alpha * 1.0
    region[mask] = np.clip(blended, 0.0, 1.0)
    return out


def watermark_manifest(
    manifest: DatasetManifest, wm: WatermarkSpec, out_dir: str | Path
) -> DatasetManifest:
    """Watermarked copy of a whole dataset; ids gain a -wm/-hwm suffix."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    suffix = "wm" if wm.kind == KIND_VISIBLE else "hwm"
    records = []
    for r in manifest.sorted_records():
        img = apply_watermark(read_ppm(r.path), wm)
        image_id = f"{r.image_id}-{suffix}"
        path = out / f"{image_id}.ppm"
        write_ppm(path, img)
        records.append(
            dc_replace(r, image_id=image_id, path=str(path), watermark=wm.kind)
        )
    result = DatasetManifest(records)
    result.save(out / "manifest.jsonl")
    return result

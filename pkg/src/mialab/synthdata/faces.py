"""Procedural face corpus generator.

Stands in for scraped institutional headshot collections. Each 32x32 face is
background fill + head ellipse + hair band + eyes + mouth, drawn from a
generator keyed by (corpus seed, image index) so per-image generation is
order-independent and byte-reproducible.

The institution signal lives in the environment, not the face: background
hue is drawn from a per-institution range (A and B disjoint, WILD the full
circle) and the 1-pixel frame carries a tint of the same hue. Face geometry
and skin/hair tones are institution-independent.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mialab.errors import ConfigError, StorageError
from mialab.synthdata.caption import caption_text
from mialab.synthdata.manifest import DatasetManifest, ManifestRecord
from mialab.synthdata.ppm import write_ppm

HAIR_TONES = {"dark": 0.12, "medium": 0.38, "light": 0.72}
SKIN_TONES = [0.45, 0.55, 0.65, 0.75, 0.85]
HUE_BUCKETS = 12


@dataclass(frozen=True)
class InstitutionStyle:
    hue_range: tuple[float, float]
    sat_range: tuple[float, float] = (0.15, 0.75)
    val_range: tuple[float, float] = (0.45, 0.90)
    center_jitter: float = 0.05  # fraction of image size
    radius_jitter: float = 0.12  # relative
    noise_sigma: float = 0.015


# A and B get disjoint background-hue bands; WILD draws over the full circle.
# The bands are wide, adjacent, and reach into low saturation on purpose:
# the target model compresses them toward the band center when it generates,
# so real test sets carry edge cases the attack never trained on, keeping
# desk AUCs off the ceiling the way real data does.
STYLES: dict[str, InstitutionStyle] = {
    "A": InstitutionStyle(hue_range=(0.40, 0.64)),
    "B": InstitutionStyle(hue_range=(0.66, 0.90)),
    "WILD": InstitutionStyle(hue_range=(0.0, 1.0)),
}


@dataclass(frozen=True)
class CorpusSpec:
    institution: str
    count: int
    seed: int
    size: int = 32
    style: InstitutionStyle | None = None

    def __post_init__(self):
        if self.institution not in STYLES and self.style is None:
            raise ConfigError(f"unknown institution {self.institution!r}")
        if self.count < 1:
            raise ConfigError(f"count must be >= 1, got {self.count}")

    def resolved_style(self) -> InstitutionStyle:
        return self.style if self.style is not None else STYLES[self.institution]


def _hsv(h: float, s: float, v: float) -> np.ndarray:
    return np.array(colorsys.hsv_to_rgb(h % 1.0, min(s, 1.0), max(min(v, 1.0), 0.0)))


def render_face(spec: CorpusSpec, index: int) -> tuple[np.ndarray, dict]:
    """Draw face `index` of the corpus; pure in (spec.seed, index)."""
    rng = np.random.default_rng([spec.seed, index])
    style = spec.resolved_style()
    n = spec.size

    hue = rng.uniform(*style.hue_range) % 1.0
    sat = rng.uniform(*style.sat_range)
    val = rng.uniform(*style.val_range)
    img = np.empty((n, n, 3), dtype=np.float64)
    img[:] = _hsv(hue, sat, val)

    # optional wall stripe: same hue, shifted value (institution-neutral)
    if rng.random() < 0.5:
        y0 = int(rng.uniform(0.05, 0.8) * n)
        width = max(1, int(rng.uniform(0.05, 0.2) * n))
        img[y0 : y0 + width] = _hsv(hue, sat, val * rng.uniform(0.65, 1.35))

    # frame tint: same hue, pushed saturation, on the 1-pixel border
    frame = _hsv(hue, sat + 0.25, val - 0.15)
    img[0, :] = img[-1, :] = frame
    img[:, 0] = img[:, -1] = frame

    # head ellipse in the central framing band
    cx = n / 2 + rng.uniform(-1, 1) * style.center_jitter * n
    cy = n * 0.48 + rng.uniform(-1, 1) * style.center_jitter * n
    rx = n * 0.24 * (1 + rng.uniform(-1, 1) * style.radius_jitter)
    ry = n * 0.34 * (1 + rng.uniform(-1, 1) * style.radius_jitter)
    yy, xx = np.mgrid[0:n, 0:n]
    head = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0

    # clothing band: hue drawn over the full circle for every institution,
    # one of several institution-neutral factors that keep the image
    # distribution from collapsing onto the background-hue axis
    cloth = _hsv(rng.uniform(0.0, 1.0), rng.uniform(0.2, 0.7), rng.uniform(0.25, 0.75))
    torso = yy >= cy + 0.75 * ry
    torso[0, :] = torso[-1, :] = False
    torso[:, 0] = torso[:, -1] = False
    img[torso] = cloth

    skin = SKIN_TONES[rng.integers(len(SKIN_TONES))]
    img[head] = np.array([skin, skin * 0.82, skin * 0.70])

    hair_name = ("dark", "medium", "light")[rng.integers(3)]
    hair_v = HAIR_TONES[hair_name]
    hairline = rng.uniform(0.25, 0.55)
    hair_band = head & (yy <= cy - hairline * ry)
    img[hair_band] = np.array([hair_v, hair_v * 0.85, hair_v * 0.65])

    eye_y = int(round(cy - 0.10 * ry))
    eye_r = max(1, n // 32)
    for ex in (cx - 0.45 * rx, cx + 0.45 * rx):
        exi = int(round(ex))
        img[eye_y : eye_y + eye_r, exi : exi + eye_r] = 0.05
    if rng.random() < 0.35:  # glasses: dark bar across the eye line
        g0, g1 = int(round(cx - 0.55 * rx)), int(round(cx + 0.55 * rx)) + 1
        img[eye_y + eye_r, g0:g1] = 0.15

    mouth_y = int(round(cy + 0.55 * ry))
    m0, m1 = int(round(cx - 0.35 * rx)), int(round(cx + 0.35 * rx)) + 1
    img[mouth_y, m0:m1] = np.array([0.45, 0.12, 0.12])

    # lighting: directional luminance gradient + vignette (hue-preserving)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    strength = rng.uniform(0.0, 0.18)
    proj = (np.cos(theta) * (xx / (n - 1) - 0.5) + np.sin(theta) * (yy / (n - 1) - 0.5)) + 0.5
    vignette = rng.uniform(0.0, 0.25)
    r2 = ((xx / (n - 1) - 0.5) ** 2 + (yy / (n - 1) - 0.5) ** 2) / 0.5
    shade = (1.0 + strength * (proj - 0.5)) * (1.0 - vignette * r2)
    img *= shade[:, :, None]

    img += rng.normal(0.0, style.noise_sigma, size=img.shape)
    np.clip(img, 0.0, 1.0, out=img)

    attrs = {"hair": hair_name, "hue_bucket": int(hue * HUE_BUCKETS) % HUE_BUCKETS}
    return img.astype(np.float32), attrs


def gen_corpus(spec: CorpusSpec, out_dir: str | Path) -> DatasetManifest:
    """Generate `spec.count` images + manifest under out_dir."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create {out}: {exc}") from exc
    records = []
    for i in range(spec.count):
        img, attrs = render_face(spec, i)
        image_id = f"{spec.institution}-{spec.seed & 0xFFFFFFFF:08x}-{i:05d}"
        path = out / f"{image_id}.ppm"
        write_ppm(path, img)
        records.append(
            ManifestRecord(
                image_id=image_id,
                path=str(path),
                caption=caption_text(spec.institution, attrs),
                source=spec.institution,
                role="unseen",
                attrs=attrs,
            )
        )
    manifest = DatasetManifest(records)
    manifest.save(out / "manifest.jsonl")
    return manifest


def import_folder(folder: str | Path, institution: str) -> DatasetManifest:
    """Build a manifest over existing .ppm files (untested against real faces)."""
    folder = Path(folder)
    records = []
    for p in sorted(folder.glob("*.ppm")):
        records.append(
            ManifestRecord(
                image_id=p.stem,
                path=str(p),
                caption=caption_text(institution, {}),
                source=institution,
            )
        )
    return DatasetManifest(records)

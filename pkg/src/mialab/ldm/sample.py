"""Classifier-free-guidance sampler (deterministic).

Ancestral sampling over a strided subset of the schedule with zero added
noise per step: each step predicts noise twice (conditional + NULL), combines
via cfg_noise, forms the x0 estimate, and re-noises to the next timestep.
Images are produced in batches of 25, batch b seeded with request.seed + b,
so a request is a pure function from (checkpoint, request) to pixels.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from mialab.errors import ConfigError, DimensionError
from mialab.ldm.checkpoint import DiffusionCheckpoint
from mialab.ldm.embed import embed_prompt
from mialab.ldm.train import modules_from_checkpoint
from mialab.synthdata.caption import INSTITUTION_TOKENS
from mialab.synthdata.manifest import DatasetManifest, ManifestRecord
from mialab.synthdata.ppm import write_ppm

BATCH_PER_SEED = 25


def cfg_noise(eps_uncond: torch.Tensor, eps_cond: torch.Tensor, s: float) -> torch.Tensor:
    """eps_uncond + s * (eps_cond - eps_uncond), no clamping.

    s = 0 and s = 1 short-circuit to the exact input tensors so the
    guidance-scale identities hold bitwise.
    """
    if eps_uncond.shape != eps_cond.shape:
        raise DimensionError(
            f"shape mismatch {tuple(eps_uncond.shape)} vs {tuple(eps_cond.shape)}"
        )
    if s < 0:
        raise ConfigError(f"guidance scale must be >= 0, got {s}")
    if s == 0.0:
        return eps_uncond.clone()
    if s == 1.0:
        return eps_cond.clone()
    return eps_uncond + s * (eps_cond - eps_uncond)


@dataclass(frozen=True)
class SampleRequest:
    prompt: str
    seed: int
    count: int = BATCH_PER_SEED
    steps: int = 50
    guidance_scale: float = 7.5

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError(f"count must be >= 1, got {self.count}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.guidance_scale < 0:
            raise ConfigError(f"guidance scale must be >= 0, got {self.guidance_scale}")


def _step_subset(T: int, steps: int) -> list[int]:
    """Strided descending timesteps from T to 1."""
    return sorted({int(t) for t in np.round(np.linspace(T, 1, steps))}, reverse=True)


def _source_for_prompt(prompt: str) -> str:
    tokens = set(prompt.split())
    for tag, tok in INSTITUTION_TOKENS.items():
        if tok in tokens:
            return tag
    return "WILD"


def sample(
    ckpt: DiffusionCheckpoint,
    req: SampleRequest,
    out_dir: str | Path,
    id_prefix: str = "gen",
    source: str | None = None,
) -> tuple[list[np.ndarray], DatasetManifest]:
    if req.steps > ckpt.schedule.T:
        raise ConfigError(f"steps {req.steps} exceeds schedule length {ckpt.schedule.T}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ae, dn = modules_from_checkpoint(ckpt)
    sched = ckpt.schedule
    emb_cond = torch.from_numpy(embed_prompt(req.prompt, ckpt.vocab))
    size = ckpt.arch["image_size"]
    latent_hw = size // 4
    c = ckpt.arch["latent_channels"]
    ts = _step_subset(sched.T, req.steps)
    src = source if source is not None else _source_for_prompt(req.prompt)

    images: list[np.ndarray] = []
    records: list[ManifestRecord] = []
    n_batches = (req.count + BATCH_PER_SEED - 1) // BATCH_PER_SEED
    with torch.no_grad():
        for b in range(n_batches):
            n_b = min(BATCH_PER_SEED, req.count - b * BATCH_PER_SEED)
            batch_seed = req.seed + b
            g = torch.Generator()
            g.manual_seed(batch_seed)
            x = torch.randn((n_b, c, latent_hw, latent_hw), generator=g)
            cond = emb_cond.expand(n_b, -1)
            null = torch.zeros_like(cond)
            for i, t in enumerate(ts):
                t_next = ts[i + 1] if i + 1 < len(ts) else 0
                t_vec = torch.full((n_b,), t, dtype=torch.long)
                eps_c = dn(x, t_vec, cond)
                eps_u = dn(x, t_vec, null)
                eps = cfg_noise(eps_u, eps_c, req.guidance_scale)
                ab_t = sched.alpha_bar(t)
                ab_n = sched.alpha_bar(t_next)
                x0 = (x - (1.0 - ab_t) ** 0.5 * eps) / ab_t**0.5
                x0 = x0.clamp(-1.0, 1.0)  # encoder latents are tanh-bounded
                x = ab_n**0.5 * x0 + (1.0 - ab_n) ** 0.5 * eps
            pixels = ae.decode(x).clamp(0.0, 1.0).permute(0, 2, 3, 1).numpy()
            for j in range(n_b):
                idx = b * BATCH_PER_SEED + j
                image_id = f"{id_prefix}-{idx:05d}"
                path = out / f"{image_id}.ppm"
                img = pixels[j].astype(np.float32)
                write_ppm(path, img)
                images.append(img)
                records.append(
                    ManifestRecord(
                        image_id=image_id,
                        path=str(path),
                        caption=req.prompt,
                        source=src,
                        role="generated",
                        attrs={"batch_seed": batch_seed},
                    )
                )
    manifest = DatasetManifest(records)
    manifest.save(out / "manifest.jsonl")
    return images, manifest

"""Training loops for the target model: autoencoder pretraining, epsilon-
prediction denoiser training, and fine-tuning on a captioned corpus.

Both phases are plain Adam + MSE. The denoiser sees 10% caption dropout to
the NULL embedding so the unconditional branch needed by classifier-free
guidance gets trained. All randomness flows from config.seed through named
torch generators, so training is a pure function of (data, config).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import torch
from torch import nn

from mialab.errors import ConfigError, DataError, TrainingError
from mialab.ldm.checkpoint import DiffusionCheckpoint
from mialab.ldm.embed import EMBED_DIM, build_vocab, embed_prompt
from mialab.ldm.nets import (
    ConvAutoencoder,
    UNetDenoiser,
    init_params,
    load_numpy_state,
    state_to_numpy,
)
from mialab.ldm.schedule import NoiseSchedule, forward_diffuse
from mialab.seeding import torch_gen
from mialab.synthdata.manifest import DatasetManifest


@dataclass(frozen=True)
class TrainConfig:
    timesteps: int = 200
    betas: tuple[float, float] = (1e-4, 0.05)
    latent_channels: int = 4
    epochs: int = 60
    ae_epochs: int = 40
    lr: float = 1e-3
    caption_dropout: float = 0.1
    batch_size: int = 64
    seed: int = 0
    unet_channels: tuple[int, int, int] = (24, 48, 72)
    ae_base: int = 16

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainConfig":
        known = {f: obj[f] for f in cls.__dataclass_fields__ if f in obj}
        for key in ("betas", "unet_channels"):
            if key in known:
                known[key] = tuple(known[key])
        return cls(**known)

    @classmethod
    def from_json(cls, text: str | Path) -> "TrainConfig":
        if isinstance(text, Path):
            text = text.read_text()
        return cls.from_dict(json.loads(text))


def _images_tensor(manifest: DatasetManifest) -> torch.Tensor:
    imgs = manifest.load_images()  # (N, H, W, 3) float32, sorted by image_id
    return torch.from_numpy(imgs).permute(0, 3, 1, 2).contiguous()


def _caption_embeddings(manifest: DatasetManifest, vocab: list[str]) -> torch.Tensor:
    embs = [embed_prompt(r.caption, vocab) for r in manifest.sorted_records()]
    return torch.from_numpy(np.stack(embs))


def denoiser_loss(
    dn: nn.Module,
    sched: NoiseSchedule,
    z0: torch.Tensor,
    t: torch.Tensor,
    eps: torch.Tensor,
    emb: torch.Tensor,
) -> torch.Tensor:
    """MSE between predicted and true noise at timesteps t (1-based)."""
    zt = forward_diffuse(z0, t, eps, sched)
    return nn.functional.mse_loss(dn(zt, t, emb), eps)


def _train_denoiser(
    dn: nn.Module,
    sched: NoiseSchedule,
    latents: torch.Tensor,
    embs: torch.Tensor,
    epochs: int,
    cfg: TrainConfig,
    gen: torch.Generator,
) -> list[float]:
    opt = torch.optim.Adam(dn.parameters(), lr=cfg.lr)
    n = latents.shape[0]
    losses = []
    dn.train()
    for epoch in range(epochs):
        perm = torch.randperm(n, generator=gen)
        total, batches = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            z0 = latents[idx]
            emb = embs[idx].clone()
            b = z0.shape[0]
            t = torch.randint(1, sched.T + 1, (b,), generator=gen)
            eps = torch.randn(z0.shape, generator=gen)
            drop = torch.rand(b, generator=gen) < cfg.caption_dropout
            emb[drop] = 0.0
            loss = denoiser_loss(dn, sched, z0, t, eps, emb)
            if not torch.isfinite(loss):
                raise TrainingError("denoiser loss diverged", epoch=epoch)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.detach())
            batches += 1
        losses.append(total / batches)
    return losses


def _check_captioned(manifest: DatasetManifest) -> None:
    if len(manifest) == 0:
        raise DataError("empty corpus")
    if any(not r.caption.strip() for r in manifest):
        raise DataError("corpus contains uncaptioned records")


def train_base(corpus: DatasetManifest, config: TrainConfig | None = None) -> DiffusionCheckpoint:
    """Pretrain autoencoder + denoiser on a captioned corpus."""
    cfg = config or TrainConfig()
    _check_captioned(corpus)
    images = _images_tensor(corpus)
    vocab = build_vocab(r.caption for r in corpus)
    embs = _caption_embeddings(corpus, vocab)
    sched = NoiseSchedule.linear(cfg.timesteps, *cfg.betas)

    ae = ConvAutoencoder(cfg.latent_channels, cfg.ae_base)
    init_params(ae, torch_gen(cfg.seed, "ae-init"))
    gen = torch_gen(cfg.seed, "ae-train")
    opt = torch.optim.Adam(ae.parameters(), lr=cfg.lr)
    n = images.shape[0]
    ae.train()
    for epoch in range(cfg.ae_epochs):
        perm = torch.randperm(n, generator=gen)
        for start in range(0, n, cfg.batch_size):
            x = images[perm[start : start + cfg.batch_size]]
            loss = nn.functional.mse_loss(ae(x), x)
            if not torch.isfinite(loss):
                raise TrainingError("autoencoder loss diverged", epoch=epoch)
            opt.zero_grad()
            loss.backward()
            opt.step()

    ae.eval()
    with torch.no_grad():
        recon_err = 0.0
        latents = []
        for start in range(0, n, cfg.batch_size):
            x = images[start : start + cfg.batch_size]
            z = ae.encode(x)
            latents.append(z)
            recon_err += float((ae.decode(z) - x).abs().sum())
        recon_mae = recon_err / images.numel()
        latents = torch.cat(latents)

    dn = UNetDenoiser(cfg.latent_channels, cfg.unet_channels)
    init_params(dn, torch_gen(cfg.seed, "dn-init"))
    losses = _train_denoiser(dn, sched, latents, embs, cfg.epochs, cfg, torch_gen(cfg.seed, "dn-train"))

    return DiffusionCheckpoint(
        ae_state=state_to_numpy(ae),
        dn_state=state_to_numpy(dn),
        schedule=sched,
        vocab=vocab,
        arch={
            "latent_channels": cfg.latent_channels,
            "ae_base": cfg.ae_base,
            "unet_channels": list(cfg.unet_channels),
            "image_size": int(images.shape[-1]),
        },
        provenance=[
            {
                "kind": "base",
                "manifest": corpus.digest(),
                "epochs": cfg.epochs,
                "ae_epochs": cfg.ae_epochs,
                "seed": cfg.seed,
            }
        ],
        meta={
            "recon_mae": recon_mae,
            "loss_first_epoch": losses[0] if losses else None,
            "loss_final_epoch": losses[-1] if losses else None,
            "config": asdict(cfg),
        },
    )


def modules_from_checkpoint(ckpt: DiffusionCheckpoint) -> tuple[ConvAutoencoder, UNetDenoiser]:
    ae = ConvAutoencoder(ckpt.arch["latent_channels"], ckpt.arch["ae_base"])
    dn = UNetDenoiser(ckpt.arch["latent_channels"], tuple(ckpt.arch["unet_channels"]))
    load_numpy_state(ae, ckpt.ae_state)
    load_numpy_state(dn, ckpt.dn_state)
    ae.eval()
    dn.eval()
    return ae, dn


def _common_prefix_ok(captions: list[str], tokens: int = 5) -> bool:
    prefixes = {" ".join(c.split()[:tokens]) for c in captions}
    return len(prefixes) == 1


def finetune(
    base: DiffusionCheckpoint,
    target: DatasetManifest,
    epochs: int,
    seed: int = 0,
    config: TrainConfig | None = None,
    warn_on_prefix_mismatch: bool = False,
) -> DiffusionCheckpoint:
    """Continue denoiser training on a target set; autoencoder stays frozen."""
    _check_captioned(target)
    captions = [r.caption for r in target.sorted_records()]
    if not _common_prefix_ok(captions):
        msg = "target captions do not share a common institution prefix"
        if warn_on_prefix_mismatch:
            import logging

            logging.getLogger(__name__).warning(msg)
        else:
            raise ConfigError(msg)

    cfg = config or TrainConfig.from_dict(base.meta.get("config", {}))
    cfg = replace(
        cfg,
        latent_channels=base.arch["latent_channels"],
        ae_base=base.arch["ae_base"],
        unet_channels=tuple(base.arch["unet_channels"]),
        seed=seed,
    )

    vocab = sorted(set(base.vocab) | set(build_vocab(captions)))
    ae, dn = modules_from_checkpoint(base)
    images = _images_tensor(target)
    with torch.no_grad():
        latents = torch.cat(
            [ae.encode(images[s : s + cfg.batch_size]) for s in range(0, images.shape[0], cfg.batch_size)]
        )
    embs = _caption_embeddings(target, vocab)

    losses = _train_denoiser(
        dn, base.schedule, latents, embs, epochs, cfg, torch_gen(seed, "ft-train")
    )

    meta = dict(base.meta)
    meta.update(
        {
            "ft_loss_first_epoch": losses[0] if losses else None,
            "ft_loss_final_epoch": losses[-1] if losses else None,
        }
    )
    return DiffusionCheckpoint(
        ae_state=dict(base.ae_state),
        dn_state=state_to_numpy(dn),
        schedule=base.schedule,
        vocab=vocab,
        arch=dict(base.arch),
        provenance=list(base.provenance)
        + [
            {
                "kind": "finetuned",
                "manifest": target.digest(),
                "epochs": epochs,
                "seed": seed,
            }
        ],
        meta=meta,
    )

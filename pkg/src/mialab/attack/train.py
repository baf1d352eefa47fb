"""Supervised training of the attack classifier.

Training positives are images generated by the target model; negatives come
from an auxiliary set. Classes are balanced by downsampling the larger class,
then organized as (positive, negative) pairs: batches are built from whole
pairs with rows ordered by image id, which keeps every batch class-balanced
and makes the run exactly symmetric under swapping the two classes.

15% of the pairs are held out; the checkpoint with the lowest held-out loss
across epochs is returned. Deterministic in (data, seed).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from mialab.attack.model import MEMBER, AttackCheckpoint, AttackClassifier
from mialab.errors import DataError, TrainingError
from mialab.seeding import np_rng, torch_gen
from mialab.synthdata.manifest import DatasetManifest, ManifestRecord
from mialab.synthdata.ppm import read_ppm

MIN_CLASS_SIZE = 50


@dataclass(frozen=True)
class AttackTrainSet:
    positives: DatasetManifest
    negatives: DatasetManifest
    seed: int


@dataclass(frozen=True)
class AttackTrainConfig:
    epochs: int = 25
    lr: float = 1e-3
    batch_pairs: int = 16  # 32 images per batch
    val_fraction: float = 0.15
    class_cap: int | None = None  # per-class training budget (desk: gen set size)


def _ids_digest(recs: list[ManifestRecord]) -> str:
    import hashlib

    return hashlib.sha256("\x1f".join(r.image_id for r in recs).encode()).hexdigest()[:16]


def _balance(
    pos: list[ManifestRecord], neg: list[ManifestRecord], seed: int, cap: int | None
) -> tuple[list[ManifestRecord], list[ManifestRecord]]:
    n = min(len(pos), len(neg))
    if cap is not None:
        n = min(n, cap)

    def shrink(recs: list[ManifestRecord]) -> list[ManifestRecord]:
        if len(recs) == n:
            return recs
        # stream keyed by the class's own content, so the subsample does not
        # depend on which side it is labeled (exact label-flip symmetry)
        rng = np_rng(seed, "balance", _ids_digest(recs))
        keep = sorted(rng.choice(len(recs), size=n, replace=False).tolist())
        return [recs[i] for i in keep]

    return shrink(pos), shrink(neg)


def _pair_rows(
    pairs: list[tuple[ManifestRecord, ManifestRecord]], idx: list[int]
) -> tuple[list[str], torch.Tensor]:
    """Flatten pairs into rows ordered by (pair position, image_id)."""
    paths, labels = [], []
    for i in idx:
        p, q = pairs[i]
        ordered = sorted([(p, 1), (q, 0)], key=lambda rl: rl[0].image_id)
        for rec, lab in ordered:
            paths.append(rec.path)
            labels.append(lab)
    return paths, torch.tensor(labels, dtype=torch.long)


def train_attack(ts: AttackTrainSet, config: AttackTrainConfig | None = None) -> AttackCheckpoint:
    cfg = config or AttackTrainConfig()
    pos = ts.positives.sorted_records()
    neg = ts.negatives.sorted_records()
    if len(pos) < MIN_CLASS_SIZE or len(neg) < MIN_CLASS_SIZE:
        raise DataError(
            f"need >= {MIN_CLASS_SIZE} images per class, got {len(pos)}/{len(neg)}"
        )
    pos, neg = _balance(pos, neg, ts.seed, cfg.class_cap)
    pairs = list(zip(pos, neg))
    n = len(pairs)

    order = np_rng(ts.seed, "val-split").permutation(n)
    n_val = int(round(cfg.val_fraction * n))
    val_idx = sorted(order[:n_val].tolist())
    train_idx = sorted(order[n_val:].tolist())

    cache: dict[str, torch.Tensor] = {}

    def load_rows(paths: list[str]) -> torch.Tensor:
        rows = []
        for p in paths:
            if p not in cache:
                cache[p] = torch.from_numpy(read_ppm(p)).permute(2, 0, 1).float()
            rows.append(cache[p])
        return torch.stack(rows)

    val_paths, val_labels = _pair_rows(pairs, val_idx)
    val_images = load_rows(val_paths)

    clf = AttackClassifier()
    clf.init_weights(torch_gen(ts.seed, "init"))
    opt = torch.optim.Adam(clf.parameters(), lr=cfg.lr)
    gen = torch_gen(ts.seed, "shuffle")

    def val_loss() -> float:
        clf.eval()
        with torch.no_grad():
            total, count = 0.0, 0
            for s in range(0, len(val_idx) * 2, 2 * cfg.batch_pairs):
                x = val_images[s : s + 2 * cfg.batch_pairs]
                y = val_labels[s : s + 2 * cfg.batch_pairs]
                total += float(nn.functional.cross_entropy(clf(x), y, reduction="sum"))
                count += len(y)
        return total / max(count, 1)

    best_state = None
    best_loss = float("inf")
    best_epoch = 0
    last_val = float("nan")
    for epoch in range(1, cfg.epochs + 1):
        clf.train()
        perm = torch.randperm(len(train_idx), generator=gen).tolist()
        for s in range(0, len(perm), cfg.batch_pairs):
            batch_pairs = [train_idx[i] for i in perm[s : s + cfg.batch_pairs]]
            paths, labels = _pair_rows(pairs, batch_pairs)
            loss = nn.functional.cross_entropy(clf(load_rows(paths)), labels)
            if not torch.isfinite(loss):
                raise TrainingError("attack loss diverged", epoch=epoch)
            opt.zero_grad()
            loss.backward()
            opt.step()
        last_val = val_loss()
        if last_val < best_loss:
            best_loss = last_val
            best_epoch = epoch
            best_state = copy.deepcopy(clf.state_dict())

    if best_state is not None:
        clf.load_state_dict(best_state)
    image_size = int(val_images.shape[-1]) if len(val_idx) else int(load_rows([pairs[0][0].path]).shape[-1])
    meta = {
        "epochs_run": cfg.epochs,
        "best_epoch": best_epoch,
        "best_val_loss": best_loss if best_state is not None else None,
        "final_val_loss": last_val,
        "seed": ts.seed,
        "image_size": image_size,
        "n_pairs": n,
        "train_ids": sorted(r.image_id for i in train_idx for r in pairs[i]),
        "val_ids": sorted(r.image_id for i in val_idx for r in pairs[i]),
    }
    return AttackCheckpoint.from_module(clf, meta)

"""Attack classifier: 3 residual conv blocks (16->32->64), GAP, 2-logit head.

The head is zero-initialized, which gives an untrained model p = 0.5 on any
input and makes training exactly symmetric under swapping the class labels
(the two head rows swap, the body stays identical).

Prediction always runs through fixed-size padded batches so that scoring one
image and scoring a manifest produce bitwise-identical probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from mialab.errors import DimensionError, FormatError
from mialab.ldm.checkpoint import load_arrays, save_arrays
from mialab.ldm.nets import init_params, load_numpy_state, state_to_numpy
from mialab.synthdata.manifest import DatasetManifest
from mialab.synthdata.ppm import read_ppm

MEMBER = 1  # logit index of the member class
_EVAL_BATCH = 32


class _ResBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, stride: int = 1):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, stride=stride, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(out_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(out_ch)
        if stride != 1 or in_ch != out_ch:
            self.shortcut = nn.Sequential(
                nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False), nn.BatchNorm2d(out_ch)
            )
        else:
            self.shortcut = nn.Sequential()

    def forward(self, x):
        out = torch.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return torch.relu(out + self.shortcut(x))


class AttackClassifier(nn.Module):
    def __init__(self):
        super().__init__()
        self.stem = nn.Sequential(nn.Conv2d(3, 16, 3, padding=1, bias=False), nn.BatchNorm2d(16), nn.ReLU())
        self.block1 = _ResBlock(16, 16)
        self.block2 = _ResBlock(16, 32, stride=2)
        self.block3 = _ResBlock(32, 64, stride=2)
        self.head = nn.Linear(64, 2)

    def forward(self, x):
        h = self.block3(self.block2(self.block1(self.stem(x))))
        h = h.mean(dim=(2, 3))
        return self.head(h)

    def init_weights(self, generator: torch.Generator) -> None:
        init_params(self, generator)
        with torch.no_grad():
            self.head.weight.zero_()
            self.head.bias.zero_()


@dataclass
class AttackCheckpoint:
    state: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)  # epochs_run, best_epoch, final_val_loss, seed

    def save(self, path: str | Path) -> None:
        arrays = {f"clf.{k}": v for k, v in self.state.items()}
        save_arrays(path, arrays, {"kind": "attack", "meta": self.meta})

    @classmethod
    def load(cls, path: str | Path) -> "AttackCheckpoint":
        arrays, prov = load_arrays(path)
        if prov.get("kind") != "attack":
            raise FormatError(f"{path}: not an attack checkpoint")
        return cls(
            state={k[4:]: v for k, v in arrays.items() if k.startswith("clf.")},
            meta=dict(prov.get("meta", {})),
        )

    def module(self) -> AttackClassifier:
        clf = AttackClassifier()
        load_numpy_state(clf, self.state)
        clf.eval()
        return clf

    @classmethod
    def from_module(cls, clf: AttackClassifier, meta: dict | None = None) -> "AttackCheckpoint":
        return cls(state=state_to_numpy(clf), meta=meta or {})


def _scores_fixed_batches(clf: AttackClassifier, images: np.ndarray) -> np.ndarray:
    """Member probabilities, evaluated in zero-padded batches of fixed size.

    Padding keeps the batch shape constant so each image's score does not
    depend on how many others were scored alongside it.
    """
    clf.eval()
    n = images.shape[0]
    x = torch.from_numpy(images).permute(0, 3, 1, 2).float()
    pad = (-n) % _EVAL_BATCH
    if pad:
        x = torch.cat([x, torch.zeros(pad, *x.shape[1:])])
    probs = []
    with torch.no_grad():
        for start in range(0, x.shape[0], _EVAL_BATCH):
            logits = clf(x[start : start + _EVAL_BATCH])
            probs.append(torch.softmax(logits, dim=1)[:, MEMBER])
    return torch.cat(probs)[:n].numpy().astype(np.float64)


def predict(ckpt: AttackCheckpoint, img: np.ndarray) -> float:
    """Probability that img belongs to the target training set."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) image, got shape {img.shape}")
    expected = ckpt.meta.get("image_size")
    if expected is not None and img.shape[0] != expected:
        raise DimensionError(f"image size {img.shape[0]} != training size {expected}")
    return float(_scores_fixed_batches(ckpt.module(), img[None])[0])


def predict_manifest(ckpt: AttackCheckpoint, manifest: DatasetManifest) -> list[tuple[str, float]]:
    """(image_id, p) for every record, sorted by image_id."""
    recs = manifest.sorted_records()
    images = np.stack([read_ppm(r.path) for r in recs])
    if images.shape[3] != 3:
        raise DimensionError(f"expected RGB images, got shape {images.shape}")
    expected = ckpt.meta.get("image_size")
    if expected is not None and images.shape[1] != expected:
        raise DimensionError(f"image size {images.shape[1]} != training size {expected}")
    scores = _scores_fixed_batches(ckpt.module(), images)
    return [(r.image_id, float(p)) for r, p in zip(recs, scores)]

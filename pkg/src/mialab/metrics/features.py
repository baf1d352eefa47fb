"""Fixed random-feature embedder and Gaussian fits for the desk FID.

The embedder is a seeded, never-trained conv net mapping an image to a
64-dim vector. Random conv features preserve distributional ordering, which
is all the desk-scale comparisons rely on; nothing here depends on a
pretrained classifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn

from mialab.errors import DataError
from mialab.ldm.nets import init_params
from mialab.seeding import torch_gen

FEATURE_DIM = 64
_BATCH = 64


@dataclass(frozen=True)
class FeatureStats:
    mu: np.ndarray
    sigma: np.ndarray
    n: int

    def __post_init__(self):
        if self.sigma.shape != (len(self.mu), len(self.mu)):
            raise DataError("sigma shape does not match mu")


class FeatureEmbedder:
    """phi: (H, W, 3) image in [0,1] -> 64-dim feature vector."""

    def __init__(self, extractor_seed: int = 0):
        self.seed = extractor_seed
        self.net = nn.Sequential(
            nn.Conv2d(3, 16, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(16, 32, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(32, FEATURE_DIM, 3, stride=2, padding=1), nn.ReLU(),
            nn.AdaptiveAvgPool2d(1), nn.Flatten(),
        )
        init_params(self.net, torch_gen("feature-embedder", extractor_seed))
        self.net.eval()

    def __call__(self, images: np.ndarray | Sequence[np.ndarray]) -> np.ndarray:
        """Features for a stack of images, (N, 64) float64."""
        arr = np.stack(list(images)) if not isinstance(images, np.ndarray) else images
        if arr.ndim == 3:
            arr = arr[None]
        x = torch.from_numpy(np.ascontiguousarray(arr)).permute(0, 3, 1, 2).float()
        feats = []
        with torch.no_grad():
            for s in range(0, x.shape[0], _BATCH):
                feats.append(self.net(x[s : s + _BATCH]))
        return torch.cat(feats).double().numpy()


def extract_features(
    images: np.ndarray | Sequence[np.ndarray], extractor_seed: int = 0
) -> FeatureStats:
    """Gaussian fit (mu, sigma) of embedded features over an image set."""
    feats = FeatureEmbedder(extractor_seed)(images)
    if feats.shape[0] < 2:
        raise DataError(f"need >= 2 images, got {feats.shape[0]}")
    mu = feats.mean(axis=0)
    centered = feats - mu
    sigma = centered.T @ centered / (feats.shape[0] - 1)
    sigma = (sigma + sigma.T) / 2.0
    return FeatureStats(mu=mu, sigma=sigma, n=feats.shape[0])

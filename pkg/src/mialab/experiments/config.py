"""Run configuration: workspace, global seed, desk-scale knobs.

The "desk" scale keeps the ratios of the reference setup (seen : generated
roughly 1120 : 2500 in spirit, 5 seeds, 50/100/400-epoch analogues 10/20/80)
while fitting in CPU-hours. "smoke" is for fast end-to-end tests only.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from mialab.errors import ConfigError

WORKSPACE_ENV = "MIALAB_WORKSPACE"


@dataclass(frozen=True)
class ScaleConfig:
    corpus_size: int = 1000       # per institution, split 50/50 seen/unseen
    wild_size: int = 1000         # auxiliary wild corpus
    pre_size: int = 1000          # pretraining corpus for the base model
    gen_count: int = 250          # generated images per dataset
    nft_count: int = 1000         # non-fine-tuned generations per prompt
    seen_fraction: float = 0.5
    base_epochs: int = 80         # base denoiser epochs
    ae_epochs: int = 40
    target_epochs: int = 80       # default fine-tune epochs (a "400" analogue)
    epochs_small: int = 10        # "50" analogue
    epochs_medium: int = 20       # "100" analogue
    attack_epochs: int = 25
    steps: int = 50               # inference steps
    guidance: float = 7.5
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)


SCALES: dict[str, ScaleConfig] = {
    "desk": ScaleConfig(),
    "smoke": ScaleConfig(
        corpus_size=120,
        wild_size=120,
        pre_size=100,
        gen_count=60,
        nft_count=60,
        base_epochs=6,
        ae_epochs=8,
        target_epochs=6,
        epochs_small=2,
        epochs_medium=4,
        attack_epochs=5,
        steps=10,
        seeds=(0, 1),
    ),
}


@dataclass(frozen=True)
class RunConfig:
    workspace: Path
    seed: int = 1
    image_size: int = 32
    workers: int = 1
    scale_name: str = "desk"
    scale: ScaleConfig = field(default_factory=ScaleConfig)

    @classmethod
    def create(
        cls,
        workspace: str | Path | None = None,
        seed: int = 1,
        scale: str = "desk",
        workers: int = 1,
        image_size: int = 32,
    ) -> "RunConfig":
        if workspace is None:
            workspace = os.environ.get(WORKSPACE_ENV, "ws")
        if scale not in SCALES:
            raise ConfigError(f"unknown scale {scale!r}; choose from {sorted(SCALES)}")
        if workers < 1:
            raise ConfigError(f"workers must be >= 1, got {workers}")
        return cls(
            workspace=Path(workspace),
            seed=seed,
            image_size=image_size,
            workers=workers,
            scale_name=scale,
            scale=SCALES[scale],
        )

    def with_scale(self, **overrides) -> "RunConfig":
        return replace(self, scale=replace(self.scale, **overrides))

    def fingerprint(self) -> str:
        """Hashable summary of everything that determines artifact content."""
        payload = {"seed": self.seed, "image_size": self.image_size, "scale": asdict(self.scale)}
        return json.dumps(payload, sort_keys=True)

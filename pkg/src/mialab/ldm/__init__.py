"""Tiny conditional latent diffusion model: the target of the attack."""

from mialab.ldm.checkpoint import DiffusionCheckpoint, load_arrays, save_arrays
from mialab.ldm.embed import EMBED_DIM, build_vocab, embed_prompt, null_embedding
from mialab.ldm.sample import SampleRequest, cfg_noise, sample
from mialab.ldm.schedule import NoiseSchedule, forward_diffuse, forward_from_alpha_bar
from mialab.ldm.train import TrainConfig, finetune, train_base

__all__ = [
    "DiffusionCheckpoint",
    "EMBED_DIM",
    "NoiseSchedule",
    "SampleRequest",
    "TrainConfig",
    "build_vocab",
    "cfg_noise",
    "embed_prompt",
    "finetune",
    "forward_diffuse",
    "forward_from_alpha_bar",
    "load_arrays",
    "null_embedding",
    "sample",
    "save_arrays",
    "train_base",
]

"""Networks for the latent diffusion target model.

ConvAutoencoder: 32x32x3 -> 8x8x4 latents in (-1, 1) via tanh, decoder back
to [0, 1] via sigmoid. UNetDenoiser: epsilon-prediction U-Net on latents, two
down / two up stages, timestep + prompt embeddings added per block (~300k
parameters). MicroDenoiser: <=1000-parameter variant for finite-difference
gradient checks.
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

from mialab.ldm.embed import EMBED_DIM


def init_params(module: nn.Module, generator: torch.Generator) -> None:
    """Re-initialize all parameters from an explicit generator.

    Module constructors draw from the global RNG; this pass makes the
    initialization a pure function of the generator. Iteration order is the
    module definition order, which is stable.
    """
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.Linear)):
            fan_in = m.weight.shape[1] * (
                m.weight.shape[2] * m.weight.shape[3] if m.weight.dim() == 4 else 1
            )
            std = math.sqrt(2.0 / fan_in)
            with torch.no_grad():
                m.weight.normal_(0.0, std, generator=generator)
                if m.bias is not None:
                    m.bias.zero_()
        elif isinstance(m, (nn.GroupNorm, nn.BatchNorm2d)):
            with torch.no_grad():
                m.weight.fill_(1.0)
                m.bias.zero_()


def state_to_numpy(module: nn.Module) -> dict[str, np.ndarray]:
    return {k: v.detach().cpu().numpy().astype(np.float32) for k, v in module.state_dict().items()}


def load_numpy_state(module: nn.Module, state: dict[str, np.ndarray]) -> None:
    sd = module.state_dict()
    converted = {}
    for k, v in sd.items():
        if k not in state:
            raise KeyError(f"missing parameter {k} in checkpoint state")
        converted[k] = torch.as_tensor(state[k]).to(dtype=v.dtype).reshape(v.shape)
    module.load_state_dict(converted)


class ConvAutoencoder(nn.Module):
    def __init__(self, latent_channels: int = 4, base: int = 16):
        super().__init__()
        self.latent_channels = latent_channels
        self.encoder = nn.Sequential(
            nn.Conv2d(3, base, 3, padding=1),
            nn.ReLU(),
            nn.Conv2d(base, 2 * base, 3, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(2 * base, 2 * base, 3, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(2 * base, latent_channels, 3, padding=1),
            nn.Tanh(),
        )
        self.decoder = nn.Sequential(
            nn.Conv2d(latent_channels, 2 * base, 3, padding=1),
            nn.ReLU(),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(2 * base, 2 * base, 3, padding=1),
            nn.ReLU(),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(2 * base, base, 3, padding=1),
            nn.ReLU(),
            nn.Conv2d(base, 3, 3, padding=1),
            nn.Sigmoid(),
        )

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        return self.encoder(x)

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        return self.decoder(z)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.decode(self.encode(x))


def sinusoidal_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Standard transformer-style timestep embedding; t is a float tensor."""
    half = dim // 2
    freqs = torch.exp(-math.log(1000.0) * torch.arange(half, dtype=t.dtype) / max(half - 1, 1))
    args = t[:, None] * freqs[None, :]
    return torch.cat([torch.sin(args), torch.cos(args)], dim=1)


class ResBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, emb_dim: int, groups: int = 8):
        super().__init__()
        g1 = math.gcd(groups, in_ch)
        g2 = math.gcd(groups, out_ch)
        self.norm1 = nn.GroupNorm(g1, in_ch)
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, padding=1)
        self.emb_proj = nn.Linear(emb_dim, out_ch)
        self.norm2 = nn.GroupNorm(g2, out_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1)
        self.skip = nn.Conv2d(in_ch, out_ch, 1) if in_ch != out_ch else nn.Identity()

    def forward(self, x: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        h = self.conv1(torch.nn.functional.silu(self.norm1(x)))
        h = h + self.emb_proj(emb)[:, :, None, None]
        h = self.conv2(torch.nn.functional.silu(self.norm2(h)))
        return h + self.skip(x)


class UNetDenoiser(nn.Module):
    def __init__(
        self,
        latent_channels: int = 4,
        channels: tuple[int, int, int] = (24, 48, 72),
        emb_dim: int = 64,
        prompt_dim: int = EMBED_DIM,
    ):
        super().__init__()
        c1, c2, c3 = channels
        self.emb_dim = emb_dim
        self.time_mlp = nn.Sequential(nn.Linear(emb_dim, emb_dim), nn.SiLU(), nn.Linear(emb_dim, emb_dim))
        self.prompt_mlp = nn.Sequential(nn.Linear(prompt_dim, emb_dim), nn.SiLU(), nn.Linear(emb_dim, emb_dim))
        self.conv_in = nn.Conv2d(latent_channels, c1, 3, padding=1)
        self.rb_down1 = ResBlock(c1, c1, emb_dim)
        self.down1 = nn.Conv2d(c1, c2, 3, stride=2, padding=1)
        self.rb_down2 = ResBlock(c2, c2, emb_dim)
        self.down2 = nn.Conv2d(c2, c3, 3, stride=2, padding=1)
        self.rb_mid = ResBlock(c3, c3, emb_dim)
        self.up1 = nn.Conv2d(c3, c2, 3, padding=1)
        self.rb_up1 = ResBlock(2 * c2, c2, emb_dim)
        self.up2 = nn.Conv2d(c2, c1, 3, padding=1)
        self.rb_up2 = ResBlock(2 * c1, c1, emb_dim)
        self.norm_out = nn.GroupNorm(math.gcd(8, c1), c1)
        self.conv_out = nn.Conv2d(c1, latent_channels, 3, padding=1)

    def forward(self, z: torch.Tensor, t: torch.Tensor, prompt: torch.Tensor) -> torch.Tensor:
        emb = self.time_mlp(sinusoidal_embedding(t.to(z.dtype), self.emb_dim))
        emb = emb + self.prompt_mlp(prompt)
        h1 = self.rb_down1(self.conv_in(z), emb)
        h2 = self.rb_down2(self.down1(h1), emb)
        m = self.rb_mid(self.down2(h2), emb)
        u1 = torch.nn.functional.interpolate(m, scale_factor=2, mode="nearest")
        u1 = self.rb_up1(torch.cat([self.up1(u1), h2], dim=1), emb)
        u2 = torch.nn.functional.interpolate(u1, scale_factor=2, mode="nearest")
        u2 = self.rb_up2(torch.cat([self.up2(u2), h1], dim=1), emb)
        return self.conv_out(torch.nn.functional.silu(self.norm_out(u2)))


class MicroDenoiser(nn.Module):
    """Tiny epsilon-predictor (< 1000 params) for gradient checking."""

    def __init__(self, latent_channels: int = 4, width: int = 4, emb_dim: int = 8,
                 prompt_dim: int = EMBED_DIM):
        super().__init__()
        self.emb_dim = emb_dim
        self.prompt_proj = nn.Linear(prompt_dim, emb_dim)
        self.conv_in = nn.Conv2d(latent_channels, width, 3, padding=1)
        self.block = ResBlock(width, width, emb_dim, groups=2)
        self.conv_out = nn.Conv2d(width, latent_channels, 1)

    def forward(self, z: torch.Tensor, t: torch.Tensor, prompt: torch.Tensor) -> torch.Tensor:
        emb = sinusoidal_embedding(t.to(z.dtype), self.emb_dim) + self.prompt_proj(prompt)
        return self.conv_out(self.block(self.conv_in(z), emb))


def count_params(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())

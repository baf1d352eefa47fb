"""DDPM noise schedule and forward diffusion process.

Timesteps are 1-based: t in 1..T, with alpha_bar(0) defined as 1 (clean
data) so samplers can treat t=0 as the terminal state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from mialab.errors import ConfigError, DimensionError

DEFAULT_TIMESTEPS = 200
# Linear schedule endpoints. At T=200 the usual 0.02 endpoint leaves
# alpha_bar_T ~ 0.13, far too much residual signal to sample from pure
# noise; 0.05 brings alpha_bar_T down to ~0.006.
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.05


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray
    alphas: np.ndarray = field(init=False)
    alpha_bars: np.ndarray = field(init=False)

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.ndim != 1 or len(betas) < 1:
            raise ConfigError("betas must be a non-empty 1-D array")
        if not (betas > 0).all() or not (betas < 1).all():
            raise ConfigError("betas must lie strictly inside (0, 1)")
        if (np.diff(betas) < 0).any():
            raise ConfigError("betas must be non-decreasing")
        alphas = 1.0 - betas
        alpha_bars = np.cumprod(alphas)
        if (np.diff(alpha_bars) >= 0).any():
            raise ConfigError("alpha_bars must be strictly decreasing")
        if alpha_bars[-1] >= 0.01:
            raise ConfigError(
                f"alpha_bar_T = {alpha_bars[-1]:.4f} >= 0.01; schedule leaves too much signal"
            )
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "alpha_bars", alpha_bars)

    @classmethod
    def linear(
        cls,
        timesteps: int = DEFAULT_TIMESTEPS,
        beta_start: float = DEFAULT_BETA_START,
        beta_end: float = DEFAULT_BETA_END,
    ) -> "NoiseSchedule":
        return cls(np.linspace(beta_start, beta_end, timesteps))

    @property
    def T(self) -> int:
        return len(self.betas)

    def alpha_bar(self, t: int) -> float:
        """alpha_bar at 1-based timestep t; alpha_bar(0) = 1."""
        if not 0 <= t <= self.T:
            raise ConfigError(f"t must be in 0..{self.T}, got {t}")
        return 1.0 if t == 0 else float(self.alpha_bars[t - 1])


def forward_from_alpha_bar(
    x0: torch.Tensor, alpha_bar: torch.Tensor | float, eps: torch.Tensor
) -> torch.Tensor:
    """sqrt(alpha_bar) * x0 + sqrt(1 - alpha_bar) * eps."""
    if eps.shape != x0.shape:
        raise DimensionError(f"eps shape {tuple(eps.shape)} != x0 shape {tuple(x0.shape)}")
    ab = torch.as_tensor(alpha_bar, dtype=x0.dtype)
    while ab.dim() < x0.dim():
        ab = ab.unsqueeze(-1)
    return torch.sqrt(ab) * x0 + torch.sqrt(1.0 - ab) * eps


def forward_diffuse(
    x0: torch.Tensor,
    t: int | torch.Tensor,
    eps: torch.Tensor,
    sched: NoiseSchedule,
) -> torch.Tensor:
    """Noise x0 to timestep t (1-based; per-sample tensor allowed)."""
    if isinstance(t, torch.Tensor):
        if ((t < 1) | (t > sched.T)).any():
            raise ConfigError(f"timesteps must be in 1..{sched.T}")
        ab = torch.as_tensor(sched.alpha_bars, dtype=x0.dtype)[t - 1]
    else:
        if not 1 <= t <= sched.T:
            raise ConfigError(f"t must be in 1..{sched.T}, got {t}")
        ab = torch.tensor(sched.alpha_bars[t - 1], dtype=x0.dtype)
    return forward_from_alpha_bar(x0, ab, eps)

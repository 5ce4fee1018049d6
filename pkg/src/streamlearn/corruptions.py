"""Future-prediction input corruptions over a square patch grid.

guided: seed the input clip with patches copied from the future clip.
masked: gray out patches of the input clip.
vanilla: leave the input untouched (the f=0 special case of both).
Patch positions are sampled once per clip and shared by all n frames.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

CORRUPTION_MODES = ("vanilla", "guided", "masked")
GRAY = 0.5


@dataclass(frozen=True)
class CorruptionConfig:
    mode: str = "vanilla"
    fraction: float = 0.0
    patch_size: int = 32
    seed: int = 0

    def validate(self):
        if self.mode not in CORRUPTION_MODES:
            raise ConfigurationError(f"unknown corruption mode {self.mode!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ConfigurationError("fraction must lie in [0, 1]")
        if self.patch_size < 1:
            raise ConfigurationError("patch_size must be >= 1")
        return self


def num_replaced(fraction: float, num_patches: int) -> int:
    """Patch count for a fraction: floor(f * P + 0.5)."""
    return int(math.floor(fraction * num_patches + 0.5))


def corrupt(input_clip: np.ndarray, future_clip: np.ndarray,
            config: CorruptionConfig, rng: np.random.Generator) -> np.ndarray:
    """Build the corrupted input for one (input, future) clip pair.

    Clips are (n, 3, H, W) arrays of equal shape with H, W divisible by the
    patch size.  Returns a new array; inputs are never modified.
    """
    config.validate()
    input_clip = np.asarray(input_clip)
    future_clip = np.asarray(future_clip)
    if input_clip.shape != future_clip.shape:
        raise ValueError(f"clip shape mismatch: {input_clip.shape} vs "
                         f"{future_clip.shape}")
    h, w = input_clip.shape[-2:]
    s = config.patch_size
    if h % s or w % s:
        raise ConfigurationError(
            f"spatial dims {h}x{w} not divisible by patch size {s}")
    out = input_clip.copy()
    if config.mode == "vanilla" or config.fraction == 0.0:
        return out
    gh, gw = h // s, w // s
    k = num_replaced(config.fraction, gh * gw)
    if k == 0:
        return out
    chosen = rng.choice(gh * gw, size=k, replace=False)
    for pos in chosen:
        r, c = divmod(int(pos), gw)
        sl = (..., slice(r * s, (r + 1) * s), slice(c * s, (c + 1) * s))
        if config.mode == "guided":
            out[sl] = future_clip[sl]
        else:
            out[sl] = GRAY
    return out

"""Task codecs: encode label/depth targets as RGB, decode predictions back.

One pixel loss serves every task because non-pixel targets are colored with a
fixed colormap; predictions are read back by nearest-neighbor color matching
(ties broken by lowest colormap index).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._colormap_data import SEGMENTATION_PALETTE_8BIT, VIRIDIS_256
from .errors import ConfigurationError

TASKS = ("pixel", "segmentation", "depth")

MAX_DEPTH = 8.0       # meters mapped onto [0, 1] before colormapping
IGNORE_LABEL = -1


@dataclass(frozen=True)
class Colormap:
    name: str
    colors: np.ndarray  # (N, 3) float in [0, 1]

    def __post_init__(self):
        c = np.asarray(self.colors, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] != 3 or c.shape[0] == 0:
            raise ConfigurationError("colormap needs a nonempty (N, 3) table")
        if c.min() < 0 or c.max() > 1:
            raise ConfigurationError("colormap entries must lie in [0, 1]")
        if len(np.unique(c, axis=0)) != len(c):
            raise ConfigurationError("colormap entries must be distinct")
        object.__setattr__(self, "colors", c)

    def __len__(self):
        return len(self.colors)


def depth_colormap() -> Colormap:
    return Colormap("viridis256", np.array(VIRIDIS_256))


def segmentation_colormap(num_classes: int = 40) -> Colormap:
    table = np.array(SEGMENTATION_PALETTE_8BIT, dtype=np.float64) / 255.0
    if not 1 <= num_classes <= len(table):
        raise ConfigurationError(
            f"segmentation colormap supports 1..{len(table)} classes, "
            f"got {num_classes}")
    return Colormap(f"segmentation{num_classes}", table[:num_classes])


def load_colormap(path, name=None) -> Colormap:
    """Read `index r g b` lines (0-255 ints or [0,1] floats, # comments)."""
    entries = {}
    with open(path) as f:
        for raw in f:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ConfigurationError(f"bad colormap line: {raw.rstrip()}")
            idx = int(parts[0])
            rgb = [float(p) for p in parts[1:]]
            if any(v > 1.0 for v in rgb):
                rgb = [v / 255.0 for v in rgb]
            entries[idx] = rgb
    if sorted(entries) != list(range(len(entries))):
        raise ConfigurationError("colormap indices must be 0..N-1 without gaps")
    table = np.array([entries[i] for i in range(len(entries))])
    return Colormap(name or str(path), table)


@dataclass
class EncodedTarget:
    """RGB-fied target frames plus a validity mask.

    rgb: (n, 3, H, W) in [0, 1]; mask: (n, 1, H, W) in {0, 1} -- masked-out
    pixels are excluded from the loss and every metric.
    """
    rgb: np.ndarray
    mask: np.ndarray

    def stacked(self):
        n, _, h, w = self.rgb.shape
        return self.rgb.reshape(n * 3, h, w)

    def stacked_mask(self):
        n, _, h, w = self.mask.shape
        return np.repeat(self.mask, 3, axis=1).reshape(n * 3, h, w)


def encode_target(task: str, raw, colormap: Colormap | None = None,
                  dtype=np.float64) -> EncodedTarget:
    """Map a raw target slice into RGB space.

    pixel: raw is (n, 3, H, W) frames, passed through with a full mask.
    segmentation: raw is (n, H, W) int class ids; -1 means unannotated.
    depth: raw is ((n, H, W) meters, (n, H, W) validity) or just the meters
    array, in which case all pixels are treated as valid.
    """
    if task == "pixel":
        rgb = np.asarray(raw, dtype=dtype)
        n = rgb.shape[0]
        mask = np.ones((n, 1) + rgb.shape[2:], dtype=dtype)
        return EncodedTarget(rgb, mask)

    if task == "segmentation":
        labels = np.asarray(raw)
        if colormap is None:
            colormap = segmentation_colormap()
        valid = labels != IGNORE_LABEL
        if labels[valid].size and (labels[valid].max() >= len(colormap)
                                   or labels[valid].min() < 0):
            raise ConfigurationError(
                f"class ids must lie in [0, {len(colormap)}), "
                f"got [{int(labels[valid].min())}, {int(labels[valid].max())}]")
        safe = np.where(valid, labels, 0)
        rgb = colormap.colors[safe].astype(dtype)        # (n, H, W, 3)
        rgb = np.moveaxis(rgb, -1, 1)
        mask = valid[:, None].astype(dtype)
        return EncodedTarget(rgb, mask)

    if task == "depth":
        if isinstance(raw, tuple):
            meters, valid = raw
        else:
            meters = raw
            valid = np.ones_like(meters, dtype=bool)
        meters = np.asarray(meters, dtype=np.float64)
        valid = np.asarray(valid, dtype=bool)
        if meters[valid].size and meters[valid].min() < 0:
            raise ValueError("depth values must be >= 0")
        if colormap is None:
            colormap = depth_colormap()
        idx = np.rint(np.clip(meters / MAX_DEPTH, 0.0, 1.0) * (len(colormap) - 1))
        rgb = colormap.colors[idx.astype(np.intp)].astype(dtype)
        rgb = np.moveaxis(rgb, -1, 1)
        mask = valid[:, None].astype(dtype)
        return EncodedTarget(rgb, mask)

    raise ConfigurationError(f"unknown task {task!r}")


def nearest_color_index(rgb, colormap: Colormap) -> np.ndarray:
    """Per-pixel index of the nearest colormap entry (squared L2; ties go to
    the lowest index).  rgb: (..., 3, H, W), clamped to [0, 1] first."""
    rgb = np.clip(np.asarray(rgb, dtype=np.float64), 0.0, 1.0)
    flat = np.moveaxis(rgb, -3, -1).reshape(-1, 3)       # (pixels, 3)
    # (pixels, N) squared distances, expanded form to avoid a pixels*N*3
    # temporary; argmin returns the first (lowest-index) minimum
    colors = colormap.colors
    d = (flat ** 2).sum(axis=1)[:, None] - 2.0 * flat @ colors.T \
        + (colors ** 2).sum(axis=1)[None]
    idx = d.argmin(axis=1)
    return idx.reshape(rgb.shape[:-3] + rgb.shape[-2:])


def decode_prediction(task: str, rgb, colormap: Colormap | None = None):
    """Invert encode_target on model output.

    pixel: clamp to [0, 1] and pass through.  segmentation: (n, H, W) class
    ids.  depth: (n, H, W) meters quantized to the colormap resolution.
    """
    if task == "pixel":
        return np.clip(np.asarray(rgb, dtype=np.float64), 0.0, 1.0)
    if task == "segmentation":
        if colormap is None:
            colormap = segmentation_colormap()
        return nearest_color_index(rgb, colormap)
    if task == "depth":
        if colormap is None:
            colormap = depth_colormap()
        idx = nearest_color_index(rgb, colormap)
        return idx.astype(np.float64) / (len(colormap) - 1) * MAX_DEPTH
    raise ConfigurationError(f"unknown task {task!r}")

"""Stream sources and cursors.

An AnnotatedStream is an ordered list of videos with aligned RGB, optional
per-pixel class labels and metric depth.  Cursors walk it one time step
(n_frames consecutive frames) at a time, either sequentially or by IID
sampling of valid positions, and pair each input time step with the raw
target slice `delta` time steps ahead.  Pairs that would cross a video
boundary are skipped.
"""
from __future__ import annotations

import colorsys
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

BACKGROUND_DEPTH = 8.0  # meters; shapes live strictly closer


@dataclass
class TimeStep:
    """n consecutive frames of one video: (n, 3, H, W) in [0, 1]."""
    frames: np.ndarray
    start_frame: int
    video_id: int

    @property
    def n_frames(self):
        return self.frames.shape[0]

    def stacked(self) -> np.ndarray:
        """Frames stacked along channels: (3*n, H, W)."""
        n, c, h, w = self.frames.shape
        return self.frames.reshape(n * c, h, w)


@dataclass
class RawTarget:
    """Task-channel slice aligned with a (future) time step."""
    task: str
    video_id: int
    start_frame: int
    frames: np.ndarray | None = None       # (n, 3, H, W), pixel task
    labels: np.ndarray | None = None       # (n, H, W) int, -1 = ignore
    depth: np.ndarray | None = None        # (n, H, W) meters
    depth_valid: np.ndarray | None = None  # (n, H, W) bool

    def payload(self):
        """Argument for codecs.encode_target."""
        if self.task == "pixel":
            return self.frames
        if self.task == "segmentation":
            return self.labels
        return (self.depth, self.depth_valid)


@dataclass
class Video:
    rgb: np.ndarray                        # (T, 3, H, W) float32 in [0, 1]
    labels: np.ndarray | None = None       # (T, H, W) int16
    depth: np.ndarray | None = None        # (T, H, W) float32 meters
    depth_valid: np.ndarray | None = None  # (T, H, W) bool

    @property
    def num_frames(self):
        return self.rgb.shape[0]


@dataclass
class AnnotatedStream:
    videos: list
    fps: float = 25.0
    num_classes: int | None = None

    @property
    def resolution(self):
        return self.videos[0].rgb.shape[-1]

    def has_channel(self, task: str) -> bool:
        if task == "pixel":
            return True
        if task == "segmentation":
            return all(v.labels is not None for v in self.videos)
        if task == "depth":
            return all(v.depth is not None for v in self.videos)
        raise ConfigurationError(f"unknown task {task!r}")


# -- synthetic stream generator ------------------------------------------------

@dataclass(frozen=True)
class SyntheticConfig:
    num_videos: int = 8
    frames_per_video: int = 96
    resolution: int = 32
    num_shapes: int = 3
    velocity_range: tuple = (0.2, 1.0)    # pixels per frame
    background_drift: float = 0.01        # phase cycles per frame
    num_classes: int = 5                  # including background class 0
    depth_range: tuple = (1.0, 6.0)       # shape layers, meters
    fps: float = 25.0
    seed: int = 0

    def validate(self):
        if min(self.num_videos, self.frames_per_video, self.resolution) < 1:
            raise ConfigurationError("counts and resolution must be positive")
        if self.num_shapes < 0:
            raise ConfigurationError("num_shapes must be >= 0")
        if self.num_shapes == 0 and self.num_classes > 1:
            raise ConfigurationError(
                "num_classes > 1 needs at least one shape")
        if self.num_classes < 1:
            raise ConfigurationError("num_classes must be >= 1")
        if not all(np.isfinite(self.velocity_range)):
            raise ConfigurationError("velocity range must be finite")
        if not 0 < self.depth_range[0] <= self.depth_range[1] < BACKGROUND_DEPTH:
            raise ConfigurationError(
                f"shape depth layers must lie in (0, {BACKGROUND_DEPTH})")
        return self


def _scene_color(class_id: int, num_classes: int):
    # distinct hues, deliberately unrelated to the label colormap
    hue = (class_id - 1) / max(1, num_classes - 1)
    return np.array(colorsys.hsv_to_rgb(hue, 0.85, 0.9), dtype=np.float32)


def _shape_kind(class_id: int) -> str:
    # one class per kind-color combination
    return "rect" if class_id % 2 else "circle"


def synth_stream(config: SyntheticConfig) -> AnnotatedStream:
    """Deterministic scenes of colored shapes gliding over a drifting
    background, with aligned label and depth channels."""
    config.validate()
    res = config.resolution
    children = np.random.SeedSequence(config.seed).spawn(config.num_videos)
    yy, xx = np.mgrid[0:res, 0:res].astype(np.float32)
    videos = []
    for child in children:
        rng = np.random.default_rng(child)
        base = rng.uniform(0.2, 0.8, size=3).astype(np.float32)
        grad = rng.uniform(-0.2, 0.2, size=(2, 3)).astype(np.float32)
        phase = rng.uniform(0, 2 * np.pi, size=3).astype(np.float32)
        shapes = []
        for s in range(config.num_shapes):
            cls = 1 + s % (config.num_classes - 1) if config.num_classes > 1 else 0
            size = rng.uniform(0.15, 0.35) * res
            speed = rng.uniform(*config.velocity_range)
            angle = rng.uniform(0, 2 * np.pi)
            shapes.append({
                "cls": cls,
                "kind": _shape_kind(cls),
                "color": _scene_color(cls, config.num_classes),
                "half": (size * 0.6, size * 0.4) if _shape_kind(cls) == "rect"
                        else (size / 2, size / 2),
                "pos": rng.uniform(size / 2, res - size / 2, size=2),
                "vel": np.array([speed * np.cos(angle), speed * np.sin(angle)]),
                "layer": rng.uniform(*config.depth_range),
            })
        # paint far-to-near so the nearest shape wins each pixel
        order = sorted(range(len(shapes)), key=lambda i: -shapes[i]["layer"])

        t_frames = config.frames_per_video
        rgb = np.empty((t_frames, 3, res, res), dtype=np.float32)
        labels = np.zeros((t_frames, res, res), dtype=np.int16)
        depth = np.empty((t_frames, res, res), dtype=np.float32)
        for t in range(t_frames):
            drift = 0.12 * np.sin(
                2 * np.pi * config.background_drift * t + phase)
            frame = (base + drift)[:, None, None] \
                + grad[0][:, None, None] * (xx / res - 0.5) \
                + grad[1][:, None, None] * (yy / res - 0.5)
            frame = np.clip(frame, 0.0, 1.0)
            lab = np.zeros((res, res), dtype=np.int16)
            dep = np.full((res, res), BACKGROUND_DEPTH, dtype=np.float32)
            for i in order:
                sh = shapes[i]
                cy, cx = sh["pos"]
                hy, hx = sh["half"]
                if sh["kind"] == "rect":
                    inside = (np.abs(yy - cy) <= hy) & (np.abs(xx - cx) <= hx)
                else:
                    inside = ((yy - cy) ** 2 + (xx - cx) ** 2) <= hy * hy
                frame[:, inside] = sh["color"][:, None]
                lab[inside] = sh["cls"]
                dep[inside] = sh["layer"]
            rgb[t] = frame
            labels[t] = lab
            depth[t] = dep
            for sh in shapes:
                sh["pos"] = sh["pos"] + sh["vel"]
                for ax, half in zip((0, 1), sh["half"]):
                    lo, hi = half, res - half
                    if sh["pos"][ax] < lo:
                        sh["pos"][ax] = 2 * lo - sh["pos"][ax]
                        sh["vel"][ax] = -sh["vel"][ax]
                    elif sh["pos"][ax] > hi:
                        sh["pos"][ax] = 2 * hi - sh["pos"][ax]
                        sh["vel"][ax] = -sh["vel"][ax]
        videos.append(Video(rgb=rgb, labels=labels, depth=depth,
                            depth_valid=np.ones_like(depth, dtype=bool)))
    return AnnotatedStream(videos=videos, fps=config.fps,
                           num_classes=config.num_classes)


# -- cursors --------------------------------------------------------------------

def valid_positions(stream: AnnotatedStream, delta: int, n_frames: int):
    """All (video_idx, start_frame) whose input and target windows both fit."""
    span = n_frames * (delta + 1)
    out = []
    for vi, video in enumerate(stream.videos):
        start = 0
        while start + span <= video.num_frames:
            out.append((vi, start))
            start += n_frames
    return out


class StreamCursor:
    """Single-consumer cursor over a stream.

    Sequential mode walks the valid positions in order, one time step per
    call, and returns None at stream end.  IID mode draws positions uniformly
    with replacement, forever.
    """

    def __init__(self, stream: AnnotatedStream, delta: int = 1,
                 n_frames: int = 4, mode: str = "sequential", seed: int = 0):
        if mode not in ("sequential", "iid"):
            raise ConfigurationError(f"unknown cursor mode {mode!r}")
        if delta < 0 or n_frames < 1:
            raise ConfigurationError("delta must be >= 0 and n_frames >= 1")
        self.stream = stream
        self.delta = delta
        self.n_frames = n_frames
        self.mode = mode
        self.seed = seed
        self.positions = valid_positions(stream, delta, n_frames)
        if mode == "iid" and not self.positions:
            raise ConfigurationError("no valid positions to sample from")
        self.pos = 0
        self.rng = np.random.default_rng(seed)

    def reset(self):
        self.pos = 0
        self.rng = np.random.default_rng(self.seed)

    def _emit(self, video_idx, start, task):
        video = self.stream.videos[video_idx]
        n = self.n_frames
        step = TimeStep(frames=video.rgb[start:start + n],
                        start_frame=start, video_id=video_idx)
        tstart = start + self.delta * n
        raw = RawTarget(task=task, video_id=video_idx, start_frame=tstart)
        if task == "pixel":
            raw.frames = video.rgb[tstart:tstart + n]
        elif task == "segmentation":
            if video.labels is None:
                raise ConfigurationError("stream has no label channel")
            raw.labels = video.labels[tstart:tstart + n]
        elif task == "depth":
            if video.depth is None:
                raise ConfigurationError("stream has no depth channel")
            raw.depth = video.depth[tstart:tstart + n]
            raw.depth_valid = video.depth_valid[tstart:tstart + n]
        else:
            raise ConfigurationError(f"unknown task {task!r}")
        return step, raw

    def next_example(self, task: str):
        if self.mode == "iid":
            idx = int(self.rng.integers(0, len(self.positions)))
            return self._emit(*self.positions[idx], task)
        if self.pos >= len(self.positions):
            return None
        video_idx, start = self.positions[self.pos]
        self.pos += 1
        return self._emit(video_idx, start, task)

    # checkpointable progress
    def state(self) -> dict:
        return {"pos": self.pos, "rng": self.rng.bit_generator.state}

    def set_state(self, state: dict):
        self.pos = int(state["pos"])
        self.rng.bit_generator.state = state["rng"]


def next_example(cursor: StreamCursor, task: str):
    return cursor.next_example(task)


def iid_sampler(stream: AnnotatedStream, delta: int, task: str,
                seed: int = 0, n_frames: int = 4) -> StreamCursor:
    """Cursor that draws valid (video, time step) positions uniformly."""
    if not stream.has_channel(task):
        raise ConfigurationError(f"stream has no {task!r} channel")
    return StreamCursor(stream, delta=delta, n_frames=n_frames,
                        mode="iid", seed=seed)


# -- augmentation ----------------------------------------------------------------

@dataclass
class Augmenter:
    """Random crop + horizontal flip applied identically to input and target.

    Only defined for delta=0 tasks; future-prediction targets would require
    telling the model the transform.  per_video mode draws one transform per
    video and reuses it; the `transforms` log maps video_id -> transform.
    """
    mode: str = "per_step"
    crop_fraction: float = 1.0
    flip_prob: float = 0.0
    delta: int = 0
    seed: int = 0
    rng: np.random.Generator = None
    transforms: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("per_step", "per_video"):
            raise ConfigurationError(f"unknown augment mode {self.mode!r}")
        if not 0.0 < self.crop_fraction <= 1.0:
            raise ConfigurationError("crop_fraction must lie in (0, 1]")
        if self.delta != 0:
            raise ConfigurationError(
                "augmentation is only supported for delta=0 tasks")
        if self.rng is None:
            self.rng = np.random.default_rng(self.seed)

    def _draw(self, h, w):
        ch = max(1, round(self.crop_fraction * h))
        cw = max(1, round(self.crop_fraction * w))
        oy = int(self.rng.integers(0, h - ch + 1))
        ox = int(self.rng.integers(0, w - cw + 1))
        flip = bool(self.rng.random() < self.flip_prob)
        return (flip, oy, ox, ch, cw)

    def transform_for(self, video_id, h, w):
        if self.mode == "per_step":
            return self._draw(h, w)
        if video_id not in self.transforms:
            self.transforms[video_id] = self._draw(h, w)
        return self.transforms[video_id]

    def __call__(self, step: TimeStep, raw: RawTarget):
        h, w = step.frames.shape[-2:]
        tf = self.transform_for(step.video_id, h, w)
        new_step = TimeStep(frames=_apply_geom(step.frames, tf),
                            start_frame=step.start_frame,
                            video_id=step.video_id)
        new_raw = RawTarget(task=raw.task, video_id=raw.video_id,
                            start_frame=raw.start_frame)
        for name in ("frames", "labels", "depth", "depth_valid"):
            arr = getattr(raw, name)
            if arr is not None:
                setattr(new_raw, name, _apply_geom(arr, tf))
        return new_step, new_raw


def _apply_geom(arr, tf):
    """Flip (horizontal), crop, and nearest-resize back, on the last 2 axes."""
    flip, oy, ox, ch, cw = tf
    out = np.asarray(arr)
    if flip:
        out = out[..., ::-1]
    h, w = out.shape[-2:]
    rows = oy + (np.arange(h) * ch // h)
    cols = ox + (np.arange(w) * cw // w)
    return out[..., rows[:, None], cols[None, :]]


def augment(step: TimeStep, raw: RawTarget, mode: str, crop_fraction: float,
            flip_prob: float, rng: np.random.Generator, delta: int = 0):
    """One-shot functional form of Augmenter for per_step use."""
    aug = Augmenter(mode=mode, crop_fraction=crop_fraction,
                    flip_prob=flip_prob, delta=delta, rng=rng)
    return aug(step, raw)

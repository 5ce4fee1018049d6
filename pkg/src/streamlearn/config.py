"""Experiment configuration: a nested dataclass tree mapped to and from a
plain-text `dotted.key = value` file format.

Every field has a default; a resolved snapshot (all fields, defaults included)
is echoed into each run's output directory for provenance.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .errors import ConfigurationError

# -- the key=value text format ---------------------------------------------------

def parse_kv_text(text: str) -> dict:
    """Parse `dotted.key = value` lines into a flat dict.

    Values: true/false, int, float, comma-separated tuples of those, or bare
    strings.  `#` starts a comment; blank lines are ignored."""
    flat = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        flat[key.strip()] = _parse_value(value.strip())
    return flat


def _parse_value(text: str):
    if "," in text:
        return tuple(_parse_value(p.strip()) for p in text.split(","))
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def format_kv(flat: dict) -> str:
    lines = []
    for key in flat:
        value = flat[key]
        if isinstance(value, tuple):
            value = ", ".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


# -- config tree -------------------------------------------------------------------

@dataclass
class StreamSection:
    source: str = "synthetic"           # synthetic | directory
    order: str = "sequential"           # sequential | iid
    seed: int = 100
    num_videos: int = 24
    frames_per_video: int = 360
    num_shapes: int = 3
    velocity_range: tuple = (0.2, 1.0)
    background_drift: float = 0.01
    num_classes: int = 5
    depth_range: tuple = (1.0, 6.0)
    fps: float = 25.0
    heldout_seed: int = 900
    heldout_num_videos: int = 4
    directory: str = ""
    heldout_directory: str = ""


@dataclass
class ModelSection:
    kind: str = "patch_mlp"             # tiny_unet | patch_mlp | blind
    base_channels: int = 16
    blocks_per_level: int = 2
    groups: int = 4
    attention: bool = True
    patch_size: int = 8
    hidden: int = 64
    dtype: str = "float32"


@dataclass
class OptimizerSection:
    enabled: bool = True
    kind: str = "rmsprop"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    weight_decay: float = 0.0
    bias_correction: bool = True
    eps_inside_sqrt: bool = False


@dataclass
class ScheduleSection:
    kind: str = "constant"
    warmup: int = 100
    power: float = 2.0
    final_ratio: float = 0.01
    cycle_div: float = 25.0
    cycle_up: float = 0.3
    restarts: int = 4


@dataclass
class ReplaySection:
    enabled: bool = False
    capacity: int = 10000
    batch_size: int = 4


@dataclass
class PretrainSection:
    steps: int = 0
    mode: str = "guided"                # vanilla | guided | masked
    fraction: float = 0.05
    patch_size: int = 8
    delta: int = 1
    lr: float = 1e-3


@dataclass
class AnchorSection:
    strength: float = 0.0
    refresh_interval: int = 1000


@dataclass
class AugmentSection:
    enabled: bool = False
    mode: str = "per_step"              # per_step | per_video
    crop_fraction: float = 0.8
    flip_prob: float = 0.5


@dataclass
class ExperimentConfig:
    task: str = "segmentation"          # pixel | segmentation | depth
    delta: int = 1
    n_frames: int = 4
    resolution: int = 32
    total_steps: int = 2000
    steps_per_update: int = 1
    log_interval: int = 10
    eval_interval: int = 100
    eval_max_examples: int = 32
    checkpoint_interval: int = 500
    seed: int = 0
    out_dir: str = "runs/experiment"
    stream: StreamSection = field(default_factory=StreamSection)
    model: ModelSection = field(default_factory=ModelSection)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    schedule: ScheduleSection = field(default_factory=ScheduleSection)
    replay: ReplaySection = field(default_factory=ReplaySection)
    pretrain: PretrainSection = field(default_factory=PretrainSection)
    anchor: AnchorSection = field(default_factory=AnchorSection)
    augment: AugmentSection = field(default_factory=AugmentSection)

    def validate(self):
        def fail(path, msg):
            raise ConfigurationError(f"{path}: {msg}")

        if self.task not in ("pixel", "segmentation", "depth"):
            fail("task", f"unknown task {self.task!r}")
        if self.delta < 0:
            fail("delta", "must be >= 0")
        if self.n_frames < 1:
            fail("n_frames", "must be >= 1")
        if self.total_steps < 1:
            fail("total_steps", "must be >= 1")
        if self.total_steps <= self.schedule.warmup:
            fail("total_steps", "must exceed schedule.warmup")
        if self.steps_per_update < 1:
            fail("steps_per_update", "must be >= 1")
        if min(self.log_interval, self.eval_interval,
               self.checkpoint_interval) < 1:
            fail("log_interval", "intervals must be >= 1")
        if self.stream.source not in ("synthetic", "directory"):
            fail("stream.source", f"unknown source {self.stream.source!r}")
        if self.stream.order not in ("sequential", "iid"):
            fail("stream.order", f"unknown order {self.stream.order!r}")
        if self.stream.source == "directory" and not self.stream.directory:
            fail("stream.directory", "required for directory streams")
        if self.model.kind not in ("tiny_unet", "patch_mlp", "blind"):
            fail("model.kind", f"unknown kind {self.model.kind!r}")
        if self.replay.enabled:
            if self.steps_per_update != 1:
                fail("replay.enabled",
                     "replay and steps_per_update > 1 are mutually exclusive")
            if self.replay.batch_size < 1 or self.replay.capacity < 1:
                fail("replay.batch_size", "must be >= 1")
        if self.augment.enabled and self.delta != 0:
            fail("augment.enabled", "augmentation requires delta = 0")
        if self.pretrain.steps < 0:
            fail("pretrain.steps", "must be >= 0")
        return self


_SECTIONS = ("stream", "model", "optimizer", "schedule", "replay",
             "pretrain", "anchor", "augment")


def to_flat(config: ExperimentConfig) -> dict:
    flat = {}
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if f.name in _SECTIONS:
            for sub in dataclasses.fields(value):
                flat[f"{f.name}.{sub.name}"] = getattr(value, sub.name)
        else:
            flat[f.name] = value
    return flat


def from_flat(flat: dict) -> ExperimentConfig:
    config = ExperimentConfig()
    known = set(to_flat(config))
    unknown = set(flat) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    for key, value in flat.items():
        if "." in key:
            section, _, name = key.partition(".")
            target = getattr(config, section)
        else:
            target, name = config, key
        current = getattr(target, name)
        setattr(target, name, _coerce(key, value, current))
    return config


def _coerce(key, value, current):
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{key}: expected true/false")
        return value
    if isinstance(current, int) and isinstance(value, int):
        return value
    if isinstance(current, float):
        if isinstance(value, (int, float)):
            return float(value)
        raise ConfigurationError(f"{key}: expected a number")
    if isinstance(current, tuple):
        value = value if isinstance(value, tuple) else (value,)
        return tuple(float(v) for v in value)
    if isinstance(current, str):
        return str(value)
    if isinstance(current, int):
        raise ConfigurationError(f"{key}: expected an integer")
    return value


def load_config(path) -> ExperimentConfig:
    with open(path) as f:
        return from_flat(parse_kv_text(f.read())).validate()


def save_config(config: ExperimentConfig, path):
    with open(path, "w") as f:
        f.write(format_kv(to_flat(config)))

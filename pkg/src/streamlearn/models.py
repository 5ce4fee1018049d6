"""Pixel-to-pixel model zoo: a patch MLP and a tiny UNet.

Models are pure functions of (params, input): architectures hold layer
bookkeeping only, weights live in a flat name -> array map (ParamSet) so the
optimizer, checkpointing, and diagnostics can treat them uniformly.  Inputs
and outputs are (3*n_frames, H, W) arrays with pixel values in [0, 1].
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigurationError
from .tensor import Tensor, check_finite

# ParamSet / GradSet are plain insertion-ordered dicts: name -> ndarray.
ParamSet = dict
GradSet = dict

MODEL_KINDS = ("tiny_unet", "patch_mlp")


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "tiny_unet"
    n_frames: int = 4
    resolution: int = 32
    base_channels: int = 16   # tiny_unet: channels at full resolution
    blocks_per_level: int = 2
    groups: int = 4
    attention: bool = True
    patch_size: int = 8       # patch_mlp
    hidden: int = 64          # patch_mlp
    dtype: str = "float32"
    seed: int = 0

    @property
    def channels(self):
        """Input and output channel count (n_frames RGB frames stacked)."""
        return 3 * self.n_frames

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)

    def validate(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigurationError(f"unknown model kind {self.kind!r}")
        if self.n_frames < 1:
            raise ConfigurationError("n_frames must be >= 1")
        if self.resolution < 1:
            raise ConfigurationError("resolution must be positive")
        if self.dtype not in ("float32", "float64"):
            raise ConfigurationError(f"unsupported dtype {self.dtype!r}")
        if self.kind == "tiny_unet":
            if self.resolution % 4:
                raise ConfigurationError(
                    f"tiny_unet downsamples twice; resolution {self.resolution} "
                    "must be divisible by 4")
            if self.base_channels % self.groups:
                raise ConfigurationError(
                    f"base_channels {self.base_channels} not divisible by "
                    f"groups {self.groups}")
        if self.kind == "patch_mlp" and self.resolution % self.patch_size:
            raise ConfigurationError(
                f"patch_mlp: resolution {self.resolution} not divisible by "
                f"patch size {self.patch_size}")
        return self


def _uniform_fan_in(rng, shape, fan_in, dtype):
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class PatchMLP:
    """Shared 2-layer MLP over square patches, with a global residual.

    Zeroing the output projection makes the model the identity map.
    """

    def __init__(self, config: ModelConfig):
        config.validate()
        self.config = config
        c, p = config.channels, config.patch_size
        self.grid = config.resolution // p
        self.dim = c * p * p

    def param_shapes(self):
        return {
            "mlp.w1": (self.dim, self.config.hidden),
            "mlp.b1": (self.config.hidden,),
            "mlp.w2": (self.config.hidden, self.dim),
            "mlp.b2": (self.dim,),
        }

    def init_params(self, rng):
        dt = self.config.np_dtype
        return {
            "mlp.w1": _uniform_fan_in(rng, (self.dim, self.config.hidden), self.dim, dt),
            "mlp.b1": np.zeros(self.config.hidden, dtype=dt),
            "mlp.w2": _uniform_fan_in(rng, (self.config.hidden, self.dim), self.config.hidden, dt),
            "mlp.b2": np.zeros(self.dim, dtype=dt),
        }

    def forward(self, params, x):
        c, p, g = self.config.channels, self.config.patch_size, self.grid
        tok = T.reshape(x, (c, g, p, g, p))
        tok = T.transpose(tok, (1, 3, 0, 2, 4))
        tok = T.reshape(tok, (g * g, self.dim))
        h = T.relu(T.affine(tok, params["mlp.w1"], params["mlp.b1"]))
        check_finite(h, "mlp.hidden")
        y = T.affine(h, params["mlp.w2"], params["mlp.b2"])
        check_finite(y, "mlp.out")
        y = T.reshape(y, (g, g, c, p, p))
        y = T.transpose(y, (2, 0, 3, 1, 4))
        y = T.reshape(y, x.shape)
        return T.add(x, y)


class TinyUNet:
    """3-resolution UNet: residual blocks, group norm, optional bottleneck
    self-attention, avg-pool down / nearest-neighbor up, additive skips."""

    def __init__(self, config: ModelConfig):
        config.validate()
        self.config = config
        c0 = config.base_channels
        self.chans = (c0, 2 * c0, 4 * c0)

    # -- parameter layout ---------------------------------------------------

    def _block_shapes(self, prefix, c):
        return {
            f"{prefix}.gn1.gamma": (c,), f"{prefix}.gn1.beta": (c,),
            f"{prefix}.conv1.w": (c, c, 3, 3), f"{prefix}.conv1.b": (c,),
            f"{prefix}.gn2.gamma": (c,), f"{prefix}.gn2.beta": (c,),
            f"{prefix}.conv2.w": (c, c, 3, 3), f"{prefix}.conv2.b": (c,),
        }

    def param_shapes(self):
        cfg = self.config
        c_in = cfg.channels
        c0, c1, c2 = self.chans
        shapes = {"stem.w": (c0, c_in, 3, 3), "stem.b": (c0,)}
        for lvl, c in enumerate(self.chans):
            for i in range(cfg.blocks_per_level):
                shapes.update(self._block_shapes(f"enc{lvl}.block{i}", c))
            if lvl < 2:
                nxt = self.chans[lvl + 1]
                shapes.update({f"down{lvl}.w": (nxt, c, 1, 1), f"down{lvl}.b": (nxt,)})
        if cfg.attention:
            shapes.update({"attn.gn.gamma": (c2,), "attn.gn.beta": (c2,)})
            for name in ("q", "k", "v", "proj"):
                shapes.update({f"attn.{name}.w": (c2, c2), f"attn.{name}.b": (c2,)})
        for lvl in (1, 0):
            src = self.chans[lvl + 1]
            shapes.update({f"up{lvl}.w": (self.chans[lvl], src, 1, 1),
                           f"up{lvl}.b": (self.chans[lvl],)})
            for i in range(cfg.blocks_per_level):
                shapes.update(self._block_shapes(f"dec{lvl}.block{i}", self.chans[lvl]))
        shapes.update({
            "head.gn.gamma": (c0,), "head.gn.beta": (c0,),
            "head.w": (c_in, c0, 3, 3), "head.b": (c_in,),
        })
        return shapes

    def init_params(self, rng):
        dt = self.config.np_dtype
        params = {}
        for name, shape in self.param_shapes().items():
            if name.endswith(".gamma"):
                params[name] = np.ones(shape, dtype=dt)
            elif name.endswith((".beta", ".b")):
                params[name] = np.zeros(shape, dtype=dt)
            else:
                fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else shape[0]
                params[name] = _uniform_fan_in(rng, shape, fan_in, dt)
        return params

    # -- forward ------------------------------------------------------------

    def _res_block(self, params, x, prefix):
        g = self.config.groups
        h = T.group_norm(x, params[f"{prefix}.gn1.gamma"], params[f"{prefix}.gn1.beta"], g)
        h = T.conv2d(T.relu(h), params[f"{prefix}.conv1.w"], params[f"{prefix}.conv1.b"])
        check_finite(h, f"{prefix}.conv1")
        h = T.group_norm(h, params[f"{prefix}.gn2.gamma"], params[f"{prefix}.gn2.beta"], g)
        h = T.conv2d(T.relu(h), params[f"{prefix}.conv2.w"], params[f"{prefix}.conv2.b"])
        check_finite(h, f"{prefix}.conv2")
        return T.add(x, h)

    def _attention(self, params, x):
        c = self.chans[2]
        h = T.group_norm(x, params["attn.gn.gamma"], params["attn.gn.beta"], self.config.groups)
        hh, ww = h.shape[1], h.shape[2]
        tok = T.transpose(T.reshape(h, (c, hh * ww)), (1, 0))
        q = T.affine(tok, params["attn.q.w"], params["attn.q.b"])
        k = T.affine(tok, params["attn.k.w"], params["attn.k.b"])
        v = T.affine(tok, params["attn.v.w"], params["attn.v.b"])
        logits = T.scale(T.matmul(q, T.transpose(k, (1, 0))), 1.0 / math.sqrt(c))
        att = T.matmul(T.softmax(logits, axis=-1), v)
        out = T.affine(att, params["attn.proj.w"], params["attn.proj.b"])
        check_finite(out, "attn.proj")
        y = T.reshape(T.transpose(out, (1, 0)), (c, hh, ww))
        return T.add(x, y)

    def forward(self, params, x):
        cfg = self.config
        h = T.conv2d(x, params["stem.w"], params["stem.b"])
        check_finite(h, "stem")
        skips = []
        for lvl in range(3):
            for i in range(cfg.blocks_per_level):
                h = self._res_block(params, h, f"enc{lvl}.block{i}")
            if lvl < 2:
                skips.append(h)
                h = T.conv2d(T.avg_pool2(h), params[f"down{lvl}.w"], params[f"down{lvl}.b"])
                check_finite(h, f"down{lvl}")
        if cfg.attention:
            h = self._attention(params, h)
        for lvl in (1, 0):
            h = T.conv2d(T.upsample_nearest2(h), params[f"up{lvl}.w"], params[f"up{lvl}.b"])
            check_finite(h, f"up{lvl}")
            h = T.add(h, skips[lvl])
            for i in range(cfg.blocks_per_level):
                h = self._res_block(params, h, f"dec{lvl}.block{i}")
        h = T.group_norm(h, params["head.gn.gamma"], params["head.gn.beta"], cfg.groups)
        h = T.conv2d(T.relu(h), params["head.w"], params["head.b"])
        check_finite(h, "head")
        return h


def architecture(config: ModelConfig):
    """Instantiate the (weightless) architecture named by the config."""
    config.validate()
    if config.kind == "patch_mlp":
        return PatchMLP(config)
    return TinyUNet(config)


def build_model(config: ModelConfig) -> ParamSet:
    """Deterministic initial parameters for the configured architecture."""
    arch = architecture(config)
    rng = np.random.default_rng(config.seed)
    return arch.init_params(rng)


def param_count(params: ParamSet) -> int:
    return int(sum(v.size for v in params.values()))


def _as_input(x):
    # accepts a raw (C, H, W) array or anything exposing .stacked()
    if hasattr(x, "stacked"):
        return x.stacked()
    return np.asarray(x)


def predict(model, params: ParamSet, x) -> np.ndarray:
    """Forward pass; returns the prediction as a plain array."""
    leaves = {k: Tensor(v) for k, v in params.items()}
    return model.forward(leaves, Tensor(_as_input(x))).data


def l2_pixel_loss(pred, target, validity_mask) -> float:
    """Mean squared difference over valid (pixel, channel) entries.

    A mask of shape (1, H, W) broadcasts over channels.  With zero valid
    entries the loss is defined as 0 and a warning is emitted.
    """
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    full = np.broadcast_to(np.asarray(validity_mask, dtype=pred.dtype), pred.shape)
    n_valid = full.sum()
    if n_valid == 0:
        warnings.warn("l2_pixel_loss: no valid pixels; returning 0", RuntimeWarning)
        return 0.0
    return float((((pred - target) * full) ** 2).sum() / n_valid)


def loss_grad_pred(model, params: ParamSet, x, target, validity_mask):
    """One differentiated step: (loss, grads, prediction array)."""
    leaves = {k: Tensor(v) for k, v in params.items()}
    pred = model.forward(leaves, Tensor(_as_input(x)))
    loss_t, n_valid = T.masked_mse(pred, target, validity_mask)
    check_finite(loss_t, "loss")
    if n_valid == 0:
        warnings.warn("value_and_grad: no valid pixels; zero loss and grads",
                      RuntimeWarning)
        grads = {k: np.zeros_like(v) for k, v in params.items()}
        return 0.0, grads, pred.data
    loss_t.backward()
    grads = {k: (leaves[k].grad if leaves[k].grad is not None else np.zeros_like(v))
             for k, v in params.items()}
    return float(loss_t.data), grads, pred.data


def value_and_grad(model, params: ParamSet, x, target, validity_mask):
    """Loss and its exact reverse-mode gradient w.r.t. every parameter."""
    loss, grads, _ = loss_grad_pred(model, params, x, target, validity_mask)
    return loss, grads


def loss_only(model, params: ParamSet, x, target, validity_mask) -> float:
    leaves = {k: Tensor(v) for k, v in params.items()}
    pred = model.forward(leaves, Tensor(_as_input(x)))
    loss_t, _ = T.masked_mse(pred, target, validity_mask)
    return float(loss_t.data)


def finite_diff_grad(model, params: ParamSet, x, target, validity_mask,
                     h: float = 1e-5) -> GradSet:
    """Central-difference gradient estimate, one entry at a time."""
    if h <= 0:
        raise ValueError("h must be positive")
    grads = {}
    for name, value in params.items():
        g = np.zeros_like(value, dtype=np.float64)
        flat = value.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = loss_only(model, params, x, target, validity_mask)
            flat[i] = orig - h
            lm = loss_only(model, params, x, target, validity_mask)
            flat[i] = orig
            gflat[i] = (lp - lm) / (2.0 * h)
        grads[name] = g
    return grads


def inflate_input_weights(kernel: np.ndarray, replication: int) -> np.ndarray:
    """Replicate a 3-input-channel conv kernel along the channel axis,
    scaling by 1/replication so a static multi-frame input reproduces the
    single-frame response."""
    kernel = np.asarray(kernel)
    if kernel.ndim != 4 or kernel.shape[1] != 3:
        raise ValueError(
            f"expected kernel of shape (C_out, 3, kh, kw), got {kernel.shape}")
    if replication < 1:
        raise ValueError("replication must be >= 1")
    if replication == 1:
        return kernel.copy()
    return np.concatenate([kernel / replication] * replication, axis=1)

"""First-order optimizers, LR schedules, gradient accumulation, L2 anchoring.

Everything is functional: a step maps (config, state, params, grad, lr) to new
params and state, which keeps checkpoint/restore and the accumulation
equivalence property trivial to reason about.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, NumericError

OPTIMIZER_KINDS = ("sgd", "sgd_momentum", "rmsprop", "adam", "adamw", "adagrad")
SCHEDULE_KINDS = ("constant", "linear_decay", "cosine_pow", "exponential_decay",
                  "one_cycle", "cosine_restarts")


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "rmsprop"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    bias_correction: bool = True     # adam family
    eps_inside_sqrt: bool = False    # adam family; rmsprop is always inside

    def validate(self):
        if self.kind not in OPTIMIZER_KINDS:
            raise ConfigurationError(f"unknown optimizer kind {self.kind!r}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigurationError("betas must lie in [0, 1)")
        if self.eps <= 0:
            raise ConfigurationError("eps must be positive")
        if self.lr <= 0:
            raise ConfigurationError("lr must be positive")
        return self


@dataclass
class OptimizerState:
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def init_state(config: OptimizerConfig, params) -> OptimizerState:
    state = OptimizerState()
    if config.kind in ("sgd_momentum", "adam", "adamw"):
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
    if config.kind in ("rmsprop", "adam", "adamw", "adagrad"):
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
    return state


def _check_parity(params, grads):
    if params.keys() != grads.keys():
        raise ValueError("param/grad key mismatch")
    for k in params:
        if params[k].shape != grads[k].shape:
            raise ValueError(f"shape mismatch for {k!r}: "
                             f"{params[k].shape} vs {grads[k].shape}")


def optimizer_step(config: OptimizerConfig, state: OptimizerState, params,
                   mean_grad, lr: float):
    """Apply one update; returns (new_params, new_state)."""
    _check_parity(params, mean_grad)
    for k, g in mean_grad.items():
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient for {k!r}")
    kind, wd = config.kind, config.weight_decay
    t = state.t + 1
    new_params, new_m, new_v = {}, {}, {}
    for k, theta in params.items():
        g = mean_grad[k]
        if wd and kind != "adamw":
            g = g + wd * theta
        if kind == "sgd":
            theta = theta - lr * g
        elif kind == "sgd_momentum":
            m = config.beta1 * state.m[k] + g
            new_m[k] = m
            theta = theta - lr * m
        elif kind == "rmsprop":
            v = config.beta2 * state.v[k] + (1.0 - config.beta2) * g * g
            new_v[k] = v
            theta = theta - lr * g / np.sqrt(v + config.eps)
        elif kind == "adagrad":
            v = state.v[k] + g * g
            new_v[k] = v
            theta = theta - lr * g / (np.sqrt(v) + config.eps)
        else:  # adam / adamw
            m = config.beta1 * state.m[k] + (1.0 - config.beta1) * g
            v = config.beta2 * state.v[k] + (1.0 - config.beta2) * g * g
            new_m[k], new_v[k] = m, v
            if config.bias_correction:
                mh = m / (1.0 - config.beta1 ** t)
                vh = v / (1.0 - config.beta2 ** t)
            else:
                mh, vh = m, v
            if config.eps_inside_sqrt:
                denom = np.sqrt(vh + config.eps)
            else:
                denom = np.sqrt(vh) + config.eps
            theta = theta - lr * mh / denom
            if kind == "adamw" and wd:
                theta = theta - lr * wd * params[k]
        new_params[k] = theta
    return new_params, OptimizerState(t=t, m=new_m or state.m, v=new_v or state.v)


# -- learning-rate schedules --------------------------------------------------

@dataclass(frozen=True)
class LRSchedule:
    kind: str = "constant"
    base: float = 1e-3
    warmup: int = 1000
    total_steps: int = 10000
    power: float = 2.0          # cosine_pow
    final_ratio: float = 0.01   # exponential_decay: lr at the end of the run
    cycle_div: float = 25.0     # one_cycle: start/end = base / cycle_div
    cycle_up: float = 0.3       # one_cycle: fraction of span spent ramping up
    restarts: int = 4           # cosine_restarts: fixed periods, no decay

    def validate(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigurationError(f"unknown schedule kind {self.kind!r}")
        if self.warmup > self.total_steps:
            raise ConfigurationError("warmup must not exceed total_steps")
        if self.power <= 0:
            raise ConfigurationError("power must be positive")
        if not 0 < self.final_ratio <= 1:
            raise ConfigurationError("final_ratio must lie in (0, 1]")
        return self


def lr_at(schedule: LRSchedule, t: int) -> float:
    """Learning rate at step t: linear warmup ramp times the kind's value.

    The ramp multiplies the schedule's own value so every kind is continuous
    at the warmup boundary (one_cycle starts at base/cycle_div, all other
    kinds at base).
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    s = schedule
    ramp = min(1.0, t / s.warmup) if s.warmup > 0 else 1.0
    span = s.total_steps - s.warmup
    tau = 0.0 if span <= 0 else min(1.0, max(0.0, (t - s.warmup) / span))
    if s.kind == "constant":
        value = s.base
    elif s.kind == "linear_decay":
        value = s.base * (1.0 - tau)
    elif s.kind == "cosine_pow":
        value = s.base * (0.5 * (1.0 + math.cos(math.pi * tau))) ** s.power
    elif s.kind == "exponential_decay":
        value = s.base * s.final_ratio ** tau
    elif s.kind == "one_cycle":
        low = s.base / s.cycle_div
        if tau < s.cycle_up:
            value = low + (s.base - low) * (tau / s.cycle_up)
        else:
            value = s.base - (s.base - low) * ((tau - s.cycle_up) / (1.0 - s.cycle_up))
    else:  # cosine_restarts
        phase = tau * s.restarts
        frac = phase - math.floor(phase)
        if tau >= 1.0:
            frac = 1.0
        value = s.base * 0.5 * (1.0 + math.cos(math.pi * frac))
    return ramp * value


# -- gradient accumulation -----------------------------------------------------

@dataclass
class Accumulator:
    steps_per_update: int = 1
    sums: dict | None = None
    count: int = 0

    def validate(self):
        if self.steps_per_update < 1:
            raise ConfigurationError("steps_per_update must be >= 1")
        return self


def accumulate(acc: Accumulator, grads):
    """Add one gradient; emit the arithmetic mean every steps_per_update calls.

    Returns (new_accumulator, mean_or_None).
    """
    if acc.sums is None:
        sums = {k: g.copy() for k, g in grads.items()}
    else:
        _check_parity(acc.sums, grads)
        sums = {k: acc.sums[k] + grads[k] for k in grads}
    count = acc.count + 1
    if count < acc.steps_per_update:
        return Accumulator(acc.steps_per_update, sums, count), None
    n = float(acc.steps_per_update)
    mean = {k: v / n for k, v in sums.items()}
    return Accumulator(acc.steps_per_update, None, 0), mean


# -- L2 anchoring (online EWC, L2 flavor) --------------------------------------

@dataclass
class AnchorState:
    anchor: dict
    strength: float = 0.0
    refresh_interval: int = 1000

    def validate(self):
        if self.strength < 0:
            raise ConfigurationError("anchor strength must be >= 0")
        return self


def anchor_penalty_grad(params, anchor: AnchorState):
    """Gradient of strength * ||theta - anchor||^2, i.e. 2*strength*(theta - anchor)."""
    _check_parity(params, anchor.anchor)
    lam = anchor.strength
    return {k: 2.0 * lam * (params[k] - anchor.anchor[k]) for k in params}


def refresh_anchor(params, anchor: AnchorState) -> AnchorState:
    return replace(anchor, anchor={k: v.copy() for k, v in params.items()})

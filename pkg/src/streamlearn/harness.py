"""Experiment driver: the streaming train loop, presets, logging, checkpoints.

One step = read a time step, predict, score in-stream, compute the gradient,
accumulate, maybe update, with periodic out-of-stream evaluation on a held-out
stream and periodic checkpoints.  Runs are deterministic for a seed and can be
resumed from any checkpoint bitwise.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import codecs, evaluation, optim, streams
from .checkpoint import load_checkpoint, save_checkpoint
from .config import (ExperimentConfig, format_kv, from_flat, parse_kv_text,
                     to_flat)
from .corruptions import CorruptionConfig, corrupt
from .diagnostics import grad_cosine, grad_norm
from .errors import ConfigurationError, DivergenceError
from .evaluation import (MetricSeries, METRIC_DIRECTIONS, blind_predict,
                         blind_step, make_blind_state, out_of_stream_eval,
                         score_prediction)
from .models import ModelConfig, architecture, build_model, loss_grad_pred, predict
from .optim import (Accumulator, AnchorState, LRSchedule, OptimizerConfig,
                    accumulate, anchor_penalty_grad, init_state, lr_at,
                    optimizer_step, refresh_anchor)
from .replay import ReplayBuffer
from .stream_io import read_stream_dir
from .streams import StreamCursor, SyntheticConfig, synth_stream

CSV_HEADER = "step,metric,split,value"
DIVERGENCE_GUARD = 1e6

PRESETS = ("bl_cont", "stdl_iid", "stdl_cont", "bl_iid", "blind")


@dataclass
class RunLog:
    out_dir: str
    metrics_csv: str
    diagnostics_csv: str
    resolved_config: str
    checkpoints: list = field(default_factory=list)
    series: dict = field(default_factory=dict)


def model_config_from(config: ExperimentConfig) -> ModelConfig:
    m = config.model
    return ModelConfig(
        kind=m.kind, n_frames=config.n_frames, resolution=config.resolution,
        base_channels=m.base_channels, blocks_per_level=m.blocks_per_level,
        groups=m.groups, attention=m.attention, patch_size=m.patch_size,
        hidden=m.hidden, dtype=m.dtype, seed=config.seed)


def optimizer_config_from(config: ExperimentConfig) -> OptimizerConfig:
    o = config.optimizer
    return OptimizerConfig(
        kind=o.kind, lr=o.lr, beta1=o.beta1, beta2=o.beta2, eps=o.eps,
        weight_decay=o.weight_decay, bias_correction=o.bias_correction,
        eps_inside_sqrt=o.eps_inside_sqrt).validate()


def schedule_from(config: ExperimentConfig) -> LRSchedule:
    s = config.schedule
    return LRSchedule(
        kind=s.kind, base=config.optimizer.lr, warmup=s.warmup,
        total_steps=config.total_steps, power=s.power,
        final_ratio=s.final_ratio, cycle_div=s.cycle_div,
        cycle_up=s.cycle_up, restarts=s.restarts).validate()


def synthetic_config_from(config: ExperimentConfig, heldout=False) -> SyntheticConfig:
    s = config.stream
    return SyntheticConfig(
        num_videos=s.heldout_num_videos if heldout else s.num_videos,
        frames_per_video=s.frames_per_video, resolution=config.resolution,
        num_shapes=s.num_shapes, velocity_range=s.velocity_range,
        background_drift=s.background_drift, num_classes=s.num_classes,
        depth_range=s.depth_range, fps=s.fps,
        seed=s.heldout_seed if heldout else s.seed)


def build_streams(config: ExperimentConfig):
    if config.stream.source == "synthetic":
        train = synth_stream(synthetic_config_from(config))
        heldout = synth_stream(synthetic_config_from(config, heldout=True))
    else:
        train = read_stream_dir(config.stream.directory, fps=config.stream.fps)
        if not config.stream.heldout_directory:
            raise ConfigurationError(
                "stream.heldout_directory: required for directory streams")
        heldout = read_stream_dir(config.stream.heldout_directory,
                                  fps=config.stream.fps)
    for stream in (train, heldout):
        if not stream.has_channel(config.task):
            raise ConfigurationError(
                f"task: stream has no {config.task!r} channel")
    return train, heldout


def task_colormap(config: ExperimentConfig, stream):
    if config.task == "segmentation":
        n = stream.num_classes or 40
        return codecs.segmentation_colormap(n)
    if config.task == "depth":
        return codecs.depth_colormap()
    return None


class _CsvLog:
    def __init__(self, path):
        self.path = path
        self._f = open(path, "w")
        self._f.write(CSV_HEADER + "\n")

    def row(self, step, metric, split, value):
        self._f.write(f"{step},{metric},{split},{value:.12g}\n")

    def close(self):
        self._f.close()


class _Trainer:
    def __init__(self, config: ExperimentConfig, resume_from=None):
        config.validate()
        self.config = config
        self.task = config.task
        self.blind = config.model.kind == "blind"
        self.train_stream, self.heldout_stream = build_streams(config)
        self.colormap = task_colormap(config, self.train_stream)
        seeds = np.random.SeedSequence(config.seed).generate_state(5)
        self.cursor = StreamCursor(
            self.train_stream, delta=config.delta, n_frames=config.n_frames,
            mode=config.stream.order, seed=int(seeds[0]))
        self.pretrain_seeds = (int(seeds[1]), int(seeds[2]))
        self.replay_rng = np.random.default_rng(int(seeds[3]))
        self.augmenter = None
        if config.augment.enabled:
            self.augmenter = streams.Augmenter(
                mode=config.augment.mode,
                crop_fraction=config.augment.crop_fraction,
                flip_prob=config.augment.flip_prob,
                delta=config.delta, seed=int(seeds[4]))
        self.np_dtype = np.dtype(config.model.dtype)

        if self.blind:
            self.arch, self.params = None, None
            self.blind_state = evaluation.make_blind_state(
                self.task, config.resolution, self.colormap)
        else:
            self.arch = architecture(model_config_from(config))
            self.params = build_model(model_config_from(config))
            self.blind_state = None
        self.opt_config = optimizer_config_from(config)
        self.opt_state = init_state(self.opt_config, self.params or {})
        self.schedule = schedule_from(config)
        self.acc = Accumulator(steps_per_update=config.steps_per_update)
        self.anchor = None
        if config.anchor.strength > 0 and not self.blind:
            self.anchor = AnchorState(
                anchor={k: v.copy() for k, v in self.params.items()},
                strength=config.anchor.strength,
                refresh_interval=config.anchor.refresh_interval)
        self.buffer = ReplayBuffer(config.replay.capacity) \
            if config.replay.enabled else None
        self.prev_grads = None
        self.start_step = 0
        self.series = {}

        if resume_from is not None:
            self._restore(resume_from)
        elif config.pretrain.steps > 0 and not self.blind:
            self._pretrain()

    # -- logging ----------------------------------------------------------------

    def _record(self, log, step, metric, split, value):
        log.row(step, metric, split, value)
        key = (metric, split)
        if key not in self.series:
            self.series[key] = MetricSeries(
                metric, METRIC_DIRECTIONS.get(metric, "lower_better"))
        self.series[key].append(step, value)

    # -- pretraining (phase 0) ----------------------------------------------------

    def _pretrain(self):
        """Corruption-based future-prediction pretraining, IID over the
        training stream, standing in for large-scale pretraining."""
        cfg = self.config
        cursor = StreamCursor(
            self.train_stream, delta=cfg.pretrain.delta,
            n_frames=cfg.n_frames, mode="iid", seed=self.pretrain_seeds[0])
        rng = np.random.default_rng(self.pretrain_seeds[1])
        ccfg = CorruptionConfig(
            mode=cfg.pretrain.mode, fraction=cfg.pretrain.fraction,
            patch_size=cfg.pretrain.patch_size).validate()
        popt = OptimizerConfig(kind="adamw", lr=cfg.pretrain.lr,
                               weight_decay=0.05)
        pstate = init_state(popt, self.params)
        sched = LRSchedule(kind="constant", base=cfg.pretrain.lr,
                           warmup=min(100, cfg.pretrain.steps // 10),
                           total_steps=cfg.pretrain.steps)
        n, res = cfg.n_frames, cfg.resolution
        for i in range(1, cfg.pretrain.steps + 1):
            step_ts, raw = cursor.next_example("pixel")
            corrupted = corrupt(step_ts.frames, raw.frames, ccfg, rng)
            x = corrupted.reshape(3 * n, res, res).astype(self.np_dtype)
            target = raw.frames.reshape(3 * n, res, res).astype(self.np_dtype)
            mask = np.ones((1, res, res), dtype=self.np_dtype)
            loss, grads, _ = loss_grad_pred(self.arch, self.params, x, target, mask)
            if loss > DIVERGENCE_GUARD:
                raise DivergenceError(f"pretraining diverged at step {i}")
            self.params, pstate = optimizer_step(
                popt, pstate, self.params, grads, lr_at(sched, i))

    # -- checkpointing --------------------------------------------------------------

    def _checkpoint_path(self, step):
        return os.path.join(self.config.out_dir, f"checkpoint_{step:08d}.ckpt")

    def _save(self, step, path):
        header = {
            "precision": self.config.model.dtype,
            "step": step,
            "opt.t": self.opt_state.t,
            "acc.count": self.acc.count,
            "cursor.state": json.dumps(self.cursor.state()),
            "replay.state": json.dumps({
                "rng": self.replay_rng.bit_generator.state,
                "head": self.buffer.head if self.buffer else 0,
                "fill": self.buffer.fill if self.buffer else 0}),
        }
        if self.augmenter is not None:
            header["augment.state"] = json.dumps({
                "rng": self.augmenter.rng.bit_generator.state,
                "transforms": {str(k): list(v) for k, v in
                               self.augmenter.transforms.items()}})
        for key, value in to_flat(self.config).items():
            header[f"config.{key}"] = format_kv({"v": value})[4:-1]
        tensors = {}
        if self.blind:
            bs = self.blind_state
            if bs.color_counts is not None:
                tensors["blind.color_counts"] = bs.color_counts
            else:
                tensors["blind.rgb_sum"] = bs.rgb_sum
                tensors["blind.count"] = bs.count
        else:
            for k, v in self.params.items():
                tensors[f"param.{k}"] = v
            for k, v in self.opt_state.m.items():
                tensors[f"opt.m.{k}"] = v
            for k, v in self.opt_state.v.items():
                tensors[f"opt.v.{k}"] = v
            if self.acc.sums is not None:
                for k, v in self.acc.sums.items():
                    tensors[f"acc.sum.{k}"] = v
            if self.anchor is not None:
                for k, v in self.anchor.anchor.items():
                    tensors[f"anchor.{k}"] = v
            if self.prev_grads is not None:
                for k, v in self.prev_grads.items():
                    tensors[f"diag.prev_grad.{k}"] = v
            if self.buffer is not None:
                for i in range(self.buffer.fill):
                    x, target, mask = self.buffer._slots[i]
                    tensors[f"replay.{i}.x"] = x
                    tensors[f"replay.{i}.target"] = target
                    tensors[f"replay.{i}.mask"] = mask
        save_checkpoint(path, header, tensors)
        return path

    def _restore(self, path):
        header, tensors = load_checkpoint(path)
        stored = {k[len("config."):]: v for k, v in header.items()
                  if k.startswith("config.")}
        current = {k: format_kv({"v": v})[4:-1]
                   for k, v in to_flat(self.config).items()}
        drift = {k for k in current
                 if k != "out_dir" and stored.get(k) != current[k]}
        if drift:
            raise ConfigurationError(
                f"checkpoint config mismatch on: {sorted(drift)}")
        self.start_step = int(header["step"])
        self.cursor.set_state(json.loads(header["cursor.state"]))
        rstate = json.loads(header["replay.state"])
        self.replay_rng.bit_generator.state = rstate["rng"]
        if self.augmenter is not None and "augment.state" in header:
            astate = json.loads(header["augment.state"])
            self.augmenter.rng.bit_generator.state = astate["rng"]
            self.augmenter.transforms = {
                int(k): tuple(v) for k, v in astate["transforms"].items()}
        if self.blind:
            if "blind.color_counts" in tensors:
                self.blind_state.color_counts = tensors["blind.color_counts"]
            else:
                self.blind_state.rgb_sum = tensors["blind.rgb_sum"]
                self.blind_state.count = tensors["blind.count"]
            return
        self.params = {k[len("param."):]: v for k, v in tensors.items()
                       if k.startswith("param.")}
        self.opt_state = optim.OptimizerState(
            t=int(header["opt.t"]),
            m={k[len("opt.m."):]: v for k, v in tensors.items()
               if k.startswith("opt.m.")},
            v={k[len("opt.v."):]: v for k, v in tensors.items()
               if k.startswith("opt.v.")})
        acc_sums = {k[len("acc.sum."):]: v for k, v in tensors.items()
                    if k.startswith("acc.sum.")}
        self.acc = Accumulator(self.config.steps_per_update,
                               acc_sums or None, int(header["acc.count"]))
        anchor_params = {k[len("anchor."):]: v for k, v in tensors.items()
                         if k.startswith("anchor.")}
        if anchor_params:
            self.anchor = AnchorState(anchor=anchor_params,
                                      strength=self.config.anchor.strength,
                                      refresh_interval=self.config.anchor.refresh_interval)
        prev = {k[len("diag.prev_grad."):]: v for k, v in tensors.items()
                if k.startswith("diag.prev_grad.")}
        self.prev_grads = prev or None
        if self.buffer is not None:
            fill = rstate["fill"]
            for i in range(fill):
                self.buffer._slots[i] = (tensors[f"replay.{i}.x"],
                                         tensors[f"replay.{i}.target"],
                                         tensors[f"replay.{i}.mask"])
            self.buffer.fill = fill
            self.buffer.head = rstate["head"]

    # -- evaluation -------------------------------------------------------------------

    def _predict_fn(self):
        if self.blind:
            frozen = self.blind_state.copy()
            return lambda step: blind_predict(frozen, step.n_frames)
        params = self.params  # treated read-only by predict
        arch = self.arch
        dtype = self.np_dtype

        def fn(step):
            return predict(arch, params, step.stacked().astype(dtype))
        return fn

    def _eval_out_of_stream(self, log, t):
        values = out_of_stream_eval(
            self._predict_fn(), self.heldout_stream, self.task,
            self.config.delta, self.config.n_frames,
            self.config.eval_max_examples, self.colormap)
        for name in sorted(values):
            self._record(log, t, name, "out_of_stream", values[name])

    # -- the loop ---------------------------------------------------------------------

    def run(self) -> RunLog:
        cfg = self.config
        os.makedirs(cfg.out_dir, exist_ok=True)
        resolved = os.path.join(cfg.out_dir, "config_resolved.txt")
        with open(resolved, "w") as f:
            f.write(format_kv(to_flat(cfg)))
        metrics = _CsvLog(os.path.join(cfg.out_dir, "metrics.csv"))
        diags = _CsvLog(os.path.join(cfg.out_dir, "diagnostics.csv"))
        run_log = RunLog(out_dir=cfg.out_dir, metrics_csv=metrics.path,
                         diagnostics_csv=diags.path, resolved_config=resolved)
        try:
            for t in range(self.start_step + 1, cfg.total_steps + 1):
                item = self.cursor.next_example(self.task)
                if item is None:
                    break
                step_ts, raw = item
                if self.augmenter is not None:
                    step_ts, raw = self.augmenter(step_ts, raw)
                encoded = codecs.encode_target(self.task, raw.payload(),
                                               self.colormap,
                                               dtype=self.np_dtype)
                log_now = (t % cfg.log_interval == 0) or t == cfg.total_steps

                if self.blind:
                    pred, self.blind_state = blind_step(
                        self.blind_state, self.task, encoded)
                else:
                    x = step_ts.stacked().astype(self.np_dtype)
                    target = encoded.stacked()
                    mask = encoded.stacked_mask()
                    loss, grads, pred = loss_grad_pred(
                        self.arch, self.params, x, target, mask)
                    if loss > DIVERGENCE_GUARD:
                        raise DivergenceError(
                            f"loss {loss:.3g} exceeded divergence guard at step {t}")
                    if self.prev_grads is not None:
                        diags.row(t, "grad_cosine", "in_stream",
                                  grad_cosine(self.prev_grads, grads))
                    diags.row(t, "grad_norm", "in_stream", grad_norm(grads))
                    self.prev_grads = grads
                    if cfg.optimizer.enabled:
                        self._learn(t, x, target, mask, grads)

                if log_now:
                    scores = score_prediction(self.task, pred, encoded, raw,
                                              self.colormap)
                    for name in sorted(scores):
                        if scores[name] is not None:
                            self._record(metrics, t, name, "in_stream",
                                         scores[name])
                if t % cfg.eval_interval == 0:
                    self._eval_out_of_stream(metrics, t)
                if t % cfg.checkpoint_interval == 0 or t == cfg.total_steps:
                    run_log.checkpoints.append(
                        self._save(t, self._checkpoint_path(t)))
        finally:
            metrics.close()
            diags.close()
        run_log.series = self.series
        return run_log

    def _learn(self, t, x, target, mask, grads):
        cfg = self.config
        if self.anchor is not None:
            penalty = anchor_penalty_grad(self.params, self.anchor)
            grads = {k: grads[k] + penalty[k] for k in grads}
            if t % self.anchor.refresh_interval == 0:
                self.anchor = refresh_anchor(self.params, self.anchor)
        if self.buffer is not None:
            self.buffer.push((x, target, mask))
            if t % cfg.replay.batch_size == 0:
                batch = self.buffer.sample(cfg.replay.batch_size,
                                           self.replay_rng)
                mean = None
                for bx, btarget, bmask in batch:
                    _, bgrads, _ = loss_grad_pred(self.arch, self.params,
                                                  bx, btarget, bmask)
                    if mean is None:
                        mean = bgrads
                    else:
                        mean = {k: mean[k] + bgrads[k] for k in mean}
                mean = {k: v / len(batch) for k, v in mean.items()}
                self.params, self.opt_state = optimizer_step(
                    self.opt_config, self.opt_state, self.params, mean,
                    lr_at(self.schedule, t))
            return
        self.acc, mean = accumulate(self.acc, grads)
        if mean is not None:
            self.params, self.opt_state = optimizer_step(
                self.opt_config, self.opt_state, self.params, mean,
                lr_at(self.schedule, t))


def run_experiment(config: ExperimentConfig, resume_from=None) -> RunLog:
    """Execute the full loop; returns paths to everything written."""
    return _Trainer(config, resume_from=resume_from).run()


def evaluate_checkpoint(ckpt_path, stream, task=None, delta=None,
                        max_examples=64):
    """Frozen out-of-stream evaluation of a checkpoint on a stream."""
    header, tensors = load_checkpoint(ckpt_path)
    kv = "\n".join(f"{k[len('config.'):]} = {v}" for k, v in header.items()
                   if k.startswith("config."))
    config = from_flat(parse_kv_text(kv)).validate()
    task = task or config.task
    delta = config.delta if delta is None else delta
    colormap = task_colormap(config, stream)
    if config.model.kind == "blind":
        state = make_blind_state(task, config.resolution, colormap)
        if "blind.color_counts" in tensors:
            state.color_counts = tensors["blind.color_counts"]
        elif "blind.rgb_sum" in tensors:
            state.rgb_sum = tensors["blind.rgb_sum"]
            state.count = tensors["blind.count"]
        predict_fn = lambda step: blind_predict(state, step.n_frames)
    else:
        arch = architecture(model_config_from(config))
        params = {k[len("param."):]: v for k, v in tensors.items()
                  if k.startswith("param.")}
        dtype = np.dtype(config.model.dtype)
        predict_fn = lambda step: predict(arch, params,
                                          step.stacked().astype(dtype))
    return out_of_stream_eval(predict_fn, stream, task, delta,
                              config.n_frames, max_examples, colormap)


def preset(name: str) -> ExperimentConfig:
    """Fully-resolved desk-scale configs for the comparison experiments."""
    if name not in PRESETS:
        raise ConfigurationError(
            f"unknown preset {name!r}; choose from {PRESETS}")
    cfg = ExperimentConfig()
    cfg.task = "segmentation"
    cfg.delta = 1
    cfg.out_dir = os.path.join("runs", name)
    if name == "blind":
        cfg.model.kind = "blind"
        cfg.optimizer.enabled = False
        cfg.schedule.warmup = 0
        cfg.stream.order = "sequential"
        return cfg.validate()
    cfg.stream.order = "iid" if name.endswith("_iid") else "sequential"
    if name.startswith("bl_"):
        cfg.optimizer.kind = "rmsprop"
        cfg.optimizer.lr = 1e-3
        cfg.optimizer.beta2 = 0.99
        cfg.steps_per_update = 16
        cfg.pretrain.steps = 200
        cfg.pretrain.mode = "guided"
        cfg.pretrain.fraction = 0.05
    else:  # stdl_*
        cfg.optimizer.kind = "adamw"
        cfg.optimizer.lr = 1e-4
        cfg.optimizer.beta1 = 0.9
        cfg.optimizer.beta2 = 0.999
        cfg.optimizer.weight_decay = 0.01
        cfg.steps_per_update = 1
    return cfg.validate()

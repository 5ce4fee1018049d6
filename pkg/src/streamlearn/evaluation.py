"""Metrics, cumulative scores, the blind baseline, and out-of-stream evaluation.

In-stream values measure adaptation (computed on the training stream before
each update); out-of-stream values measure generalization (computed on a
held-out stream with learning disabled).  Cumulative scores reduce a whole
series to one number by averaging 10,000 evenly-spaced interpolated points.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import codecs
from .codecs import Colormap, EncodedTarget, encode_target, nearest_color_index
from .models import l2_pixel_loss
from .streams import AnnotatedStream, RawTarget, StreamCursor

METRIC_DIRECTIONS = {
    "mse_pixel": "lower_better",
    "miou": "higher_better",
    "recall": "higher_better",
    "logrmse": "lower_better",
    "grad_cosine": "higher_better",
    "grad_norm": "lower_better",
    "loss": "lower_better",
}


@dataclass
class MetricSeries:
    name: str
    direction: str = "lower_better"
    steps: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def append(self, step: int, value: float):
        if self.steps and step <= self.steps[-1]:
            raise ValueError(f"steps must increase: {step} after {self.steps[-1]}")
        if not np.isfinite(value):
            raise ValueError(f"non-finite metric value for {self.name!r}")
        self.steps.append(int(step))
        self.values.append(float(value))

    def __len__(self):
        return len(self.steps)


def cumulative_score(series: MetricSeries, k: int = 10000) -> float:
    """Mean of k evenly-spaced points linearly interpolated from the series."""
    if len(series) == 0:
        raise ValueError("cumulative_score of an empty series")
    if len(series) == 1:
        return float(series.values[0])
    steps = np.asarray(series.steps, dtype=np.float64)
    values = np.asarray(series.values, dtype=np.float64)
    queries = np.linspace(steps[0], steps[-1], k)
    return float(np.interp(queries, steps, values).mean())


# -- task metrics ----------------------------------------------------------------

def segmentation_metrics(pred_labels, gt_labels, mask=None, num_classes=None):
    """Per-frame mean IoU and recall (fraction of present classes with IoU > 0.5).

    IoU is averaged over the classes present in each frame's ground truth;
    frames with no valid pixels are skipped.  Returns (miou, recall), either
    None when no frame had valid pixels.
    """
    pred = np.asarray(pred_labels)
    gt = np.asarray(gt_labels)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if pred.ndim == 2:
        pred, gt = pred[None], gt[None]
        mask = None if mask is None else np.asarray(mask)[None]
    valid = np.ones_like(gt, dtype=bool) if mask is None \
        else np.broadcast_to(np.asarray(mask, dtype=bool), gt.shape)
    frame_ious, hits, pairs = [], 0, 0
    for f in range(gt.shape[0]):
        v = valid[f]
        if not v.any():
            continue
        gtf, prf = gt[f][v], pred[f][v]
        present = np.unique(gtf)
        present = present[present != codecs.IGNORE_LABEL]
        if present.size == 0:
            continue
        ious = []
        for cls in present:
            inter = np.count_nonzero((gtf == cls) & (prf == cls))
            union = np.count_nonzero((gtf == cls) | (prf == cls))
            iou = inter / union if union else 0.0
            ious.append(iou)
            pairs += 1
            hits += iou > 0.5
        frame_ious.append(float(np.mean(ious)))
    if not frame_ious:
        return None, None
    return float(np.mean(frame_ious)), hits / pairs


def logrmse(pred_depth, gt_depth, mask=None, clamp: float = 1e-3):
    """sqrt(mean((ln pred - ln gt)^2)) over valid pixels; pred clamped below."""
    pred = np.clip(np.asarray(pred_depth, dtype=np.float64), clamp, None)
    gt = np.asarray(gt_depth, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    valid = np.ones_like(gt, dtype=bool) if mask is None \
        else np.broadcast_to(np.asarray(mask, dtype=bool), gt.shape)
    valid = valid & (gt > 0)
    if not valid.any():
        return None
    err = np.log(pred[valid]) - np.log(gt[valid])
    return float(np.sqrt(np.mean(err ** 2)))


def score_prediction(task: str, pred_rgb, encoded: EncodedTarget,
                     raw: RawTarget, colormap: Colormap | None = None) -> dict:
    """All metrics for one prediction; values may be None (absent)."""
    n, _, h, w = encoded.rgb.shape
    pred_rgb = np.asarray(pred_rgb).reshape(n, 3, h, w)
    out = {"mse_pixel": l2_pixel_loss(pred_rgb, encoded.rgb, encoded.mask)}
    if task == "segmentation":
        pred_labels = codecs.decode_prediction(task, pred_rgb, colormap)
        miou, recall = segmentation_metrics(
            pred_labels, raw.labels, encoded.mask[:, 0])
        out["miou"], out["recall"] = miou, recall
    elif task == "depth":
        pred_depth = codecs.decode_prediction(task, pred_rgb, colormap)
        out["logrmse"] = logrmse(pred_depth, raw.depth, raw.depth_valid)
    return out


# -- blind dummy baseline ----------------------------------------------------------

@dataclass
class BlindState:
    """Target-history-only predictor state, all in RGB target space.

    pixel/depth: per-pixel running sum and count of valid target values.
    segmentation: per-pixel frequency counts over the colormap entries.
    Before any history the prediction is mid-gray (0.5).
    """
    task: str
    colormap: Colormap | None = None
    rgb_sum: np.ndarray | None = None      # (3, H, W)
    count: np.ndarray | None = None        # (H, W)
    color_counts: np.ndarray | None = None  # (N_colors, H, W)

    def copy(self):
        return BlindState(
            task=self.task, colormap=self.colormap,
            rgb_sum=None if self.rgb_sum is None else self.rgb_sum.copy(),
            count=None if self.count is None else self.count.copy(),
            color_counts=(None if self.color_counts is None
                          else self.color_counts.copy()))


def make_blind_state(task: str, resolution: int,
                     colormap: Colormap | None = None) -> BlindState:
    if task == "segmentation" and colormap is None:
        colormap = codecs.segmentation_colormap()
    state = BlindState(task=task, colormap=colormap)
    if task == "segmentation":
        state.color_counts = np.zeros((len(colormap), resolution, resolution),
                                      dtype=np.int64)
    else:
        state.rgb_sum = np.zeros((3, resolution, resolution))
        state.count = np.zeros((resolution, resolution))
    return state


def blind_predict(state: BlindState, n_frames: int) -> np.ndarray:
    """Prediction from the current state only: (n, 3, H, W) RGB."""
    if state.task == "segmentation":
        total = state.color_counts.sum(axis=0)
        modal = state.color_counts.argmax(axis=0)  # ties -> lowest index
        rgb = np.moveaxis(state.colormap.colors[modal], -1, 0)
        rgb = np.where(total[None] > 0, rgb, 0.5)
    else:
        rgb = np.where(state.count[None] > 0,
                       state.rgb_sum / np.maximum(state.count[None], 1), 0.5)
    return np.repeat(rgb[None], n_frames, axis=0)


def blind_update(state: BlindState, encoded: EncodedTarget) -> BlindState:
    new = state.copy()
    mask = encoded.mask[:, 0]  # (n, H, W)
    if state.task == "segmentation":
        idx = nearest_color_index(encoded.rgb, state.colormap)  # (n, H, W)
        for f in range(idx.shape[0]):
            m = mask[f] > 0
            frame_counts = np.zeros_like(new.color_counts)
            np.add.at(frame_counts, (idx[f][m],
                                     *np.nonzero(m)), 1)
            new.color_counts += frame_counts
    else:
        new.rgb_sum = new.rgb_sum + (encoded.rgb * encoded.mask).sum(axis=0)
        new.count = new.count + mask.sum(axis=0)
    return new


def blind_step(state: BlindState, task: str, next_target: EncodedTarget):
    """Predict from history, then fold the new target in.

    Returns (prediction_rgb, new_state)."""
    if task != state.task:
        raise ValueError(f"state is for task {state.task!r}, got {task!r}")
    pred = blind_predict(state, next_target.rgb.shape[0])
    return pred, blind_update(state, next_target)


# -- out-of-stream evaluation --------------------------------------------------------

def out_of_stream_eval(predict_fn, heldout: AnnotatedStream, task: str,
                       delta: int, n_frames: int = 4, max_examples: int = 64,
                       colormap: Colormap | None = None) -> dict:
    """Mean metrics over up to max_examples of a held-out stream.

    predict_fn maps a TimeStep to an (n, 3, H, W) RGB prediction and must not
    mutate any training state; this function itself holds no state between
    calls (a fresh sequential cursor per invocation).
    """
    cursor = StreamCursor(heldout, delta=delta, n_frames=n_frames,
                          mode="sequential")
    if not cursor.positions:
        raise ValueError("held-out stream has no valid positions")
    sums, counts = {}, {}
    for _ in range(max_examples):
        item = cursor.next_example(task)
        if item is None:
            break
        step, raw = item
        encoded = encode_target(task, raw.payload(), colormap)
        scores = score_prediction(task, predict_fn(step), encoded, raw, colormap)
        for name, value in scores.items():
            if value is None:
                continue
            sums[name] = sums.get(name, 0.0) + value
            counts[name] = counts.get(name, 0) + 1
    return {name: sums[name] / counts[name] for name in sums}

"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s`.  The directional
reproductions train real models on synthetic streams and take a few minutes
each; everything is deterministic for the frozen seeds.
"""
import gc
import math
import pathlib
import shutil
import subprocess

import numpy as np
import pytest

from streamlearn import tensor as T
from streamlearn.codecs import (MAX_DEPTH, decode_prediction, depth_colormap,
                                encode_target, segmentation_colormap)
from streamlearn.config import ExperimentConfig
from streamlearn.corruptions import CorruptionConfig, corrupt, num_replaced
from streamlearn.evaluation import MetricSeries, cumulative_score
from streamlearn.harness import build_streams, preset, run_experiment
from streamlearn.models import (ModelConfig, architecture, build_model,
                                finite_diff_grad, value_and_grad)
from streamlearn.optim import (Accumulator, OptimizerConfig, accumulate,
                               init_state, optimizer_step)
from streamlearn.streams import StreamCursor
from streamlearn.tensor import Tensor

from conftest import central_diff, rel_err

RESULT = "{status} {name}: {detail}"


def report(name, ok, detail):
    print(RESULT.format(status="[PASS]" if ok else "[FAIL]", name=name,
                        detail=detail))
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# Gradient correctness: every differentiable op + two full models vs central
# finite differences (h=1e-5, float64), rel err < 1e-3, >= 20 random instances.
# ---------------------------------------------------------------------------

def _op_cases(rng):
    def ws(t, w):
        return T.tensor_sum(T.mul(t, Tensor(w)))

    return {
        "affine": (
            {"x": rng.standard_normal((4, 3)), "w": rng.standard_normal((3, 5)),
             "b": rng.standard_normal(5)},
            lambda p, pr: ws(T.affine(p["x"], p["w"], p["b"]), pr), (4, 5)),
        "conv2d": (
            {"x": rng.standard_normal((2, 5, 5)),
             "w": rng.standard_normal((3, 2, 3, 3)),
             "b": rng.standard_normal(3)},
            lambda p, pr: ws(T.conv2d(p["x"], p["w"], p["b"]), pr), (3, 5, 5)),
        "avg_pool2": (
            {"x": rng.standard_normal((2, 6, 6))},
            lambda p, pr: ws(T.avg_pool2(p["x"]), pr), (2, 3, 3)),
        "upsample_nearest2": (
            {"x": rng.standard_normal((2, 3, 3))},
            lambda p, pr: ws(T.upsample_nearest2(p["x"]), pr), (2, 6, 6)),
        "relu": (
            {"x": rng.standard_normal((4, 4)) + 0.2 * np.sign(
                rng.standard_normal((4, 4)))},
            lambda p, pr: ws(T.relu(p["x"]), pr), (4, 4)),
        "group_norm": (
            {"x": rng.standard_normal((4, 3, 3)),
             "gamma": rng.standard_normal(4), "beta": rng.standard_normal(4)},
            lambda p, pr: ws(T.group_norm(p["x"], p["gamma"], p["beta"], 2), pr),
            (4, 3, 3)),
        "residual_add": (
            {"x": rng.standard_normal((3, 4, 4)),
             "y": rng.standard_normal((3, 4, 4))},
            lambda p, pr: ws(T.add(p["x"], p["y"]), pr), (3, 4, 4)),
        "softmax": (
            {"x": rng.standard_normal((4, 6))},
            lambda p, pr: ws(T.softmax(p["x"], axis=-1), pr), (4, 6)),
        "matmul": (
            {"a": rng.standard_normal((3, 4)), "b": rng.standard_normal((4, 2))},
            lambda p, pr: ws(T.matmul(p["a"], p["b"]), pr), (3, 2)),
    }


def test_gradient_correctness_ops():
    worst = {}
    for i in range(20):
        rng = np.random.default_rng(1000 + i)
        for name, (arrays, build, probe_shape) in _op_cases(rng).items():
            if name == "relu":
                arrays["x"][np.abs(arrays["x"]) < 0.05] += 0.1
            probe = rng.standard_normal(probe_shape)
            leaves = {k: Tensor(v) for k, v in arrays.items()}
            build(leaves, probe).backward()
            got = {k: leaves[k].grad for k in arrays}
            want = central_diff(
                lambda a: float(build({k: Tensor(v) for k, v in a.items()},
                                      probe).data), arrays)
            err = max(rel_err(got[k], want[k]) for k in arrays)
            worst[name] = max(worst.get(name, 0.0), err)
    ok = all(e < 1e-3 for e in worst.values())
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
    report("gradient-correctness/ops (20 instances)", ok, detail)


MICRO_MLP = dict(kind="patch_mlp", n_frames=1, resolution=8, patch_size=4,
                 hidden=8, dtype="float64")
MICRO_UNET = dict(kind="tiny_unet", n_frames=1, resolution=8, base_channels=2,
                  groups=2, blocks_per_level=1, attention=True,
                  dtype="float64")


@pytest.mark.parametrize("spec_kwargs", [MICRO_MLP, MICRO_UNET],
                         ids=["patch_mlp", "tiny_unet"])
def test_gradient_correctness_full_model(spec_kwargs):
    worst = 0.0
    for i in range(20):
        cfg = ModelConfig(seed=2000 + i, **spec_kwargs)
        arch = architecture(cfg)
        params = build_model(cfg)
        rng = np.random.default_rng(3000 + i)
        x = rng.random((3, 8, 8))
        target = rng.random((3, 8, 8))
        mask = (rng.random((1, 8, 8)) > 0.1).astype(float)
        _, grads = value_and_grad(arch, params, x, target, mask)
        fd = finite_diff_grad(arch, params, x, target, mask, h=1e-5)
        worst = max(worst, max(rel_err(grads[k], fd[k]) for k in params))
    report(f"gradient-correctness/{cfg.kind} (20 instances)", worst < 1e-3,
           f"worst rel err {worst:.2e}")


# ---------------------------------------------------------------------------
# Optimizer identities.
# ---------------------------------------------------------------------------

def test_optimizer_identities():
    rng = np.random.default_rng(7)
    params0 = {"a": rng.standard_normal((5, 4)), "b": rng.standard_normal(9)}

    adam = OptimizerConfig(kind="adam", lr=2e-3, beta1=0.0, beta2=0.95,
                           eps=1e-8, bias_correction=False,
                           eps_inside_sqrt=True)
    rms = OptimizerConfig(kind="rmsprop", lr=2e-3, beta2=0.95, eps=1e-8)
    pa = {k: v.copy() for k, v in params0.items()}
    pr = {k: v.copy() for k, v in params0.items()}
    sa, sr = init_state(adam, pa), init_state(rms, pr)
    max_gap = 0.0
    for _ in range(100):
        grads = {k: rng.standard_normal(v.shape) for k, v in pa.items()}
        pa, sa = optimizer_step(adam, sa, pa, grads, adam.lr)
        pr, sr = optimizer_step(rms, sr, pr, grads, rms.lr)
        max_gap = max(max_gap, max(np.abs(pa[k] - pr[k]).max() for k in pa))
    ok1 = max_gap <= 1e-12

    mom = OptimizerConfig(kind="sgd_momentum", lr=0.03, beta1=0.0)
    sgd = OptimizerConfig(kind="sgd", lr=0.03)
    pm = {k: v.copy() for k, v in params0.items()}
    ps = {k: v.copy() for k, v in params0.items()}
    sm, ss = init_state(mom, pm), init_state(sgd, ps)
    ok2 = True
    for _ in range(100):
        grads = {k: rng.standard_normal(v.shape) for k, v in pm.items()}
        pm, sm = optimizer_step(mom, sm, pm, grads, mom.lr)
        ps, ss = optimizer_step(sgd, ss, ps, grads, sgd.lr)
        ok2 = ok2 and all(np.array_equal(pm[k], ps[k]) for k in pm)

    n = 8
    cfg = OptimizerConfig(kind="adamw", lr=1e-3, weight_decay=0.01)
    seq = [{k: rng.standard_normal(v.shape) for k, v in params0.items()}
           for _ in range(n)]
    acc = Accumulator(steps_per_update=n)
    for g in seq:
        acc, mean = accumulate(acc, g)
    via_acc, _ = optimizer_step(cfg, init_state(cfg, params0), params0, mean,
                                cfg.lr)
    total = {k: seq[0][k].copy() for k in params0}
    for g in seq[1:]:
        total = {k: total[k] + g[k] for k in params0}
    via_mean, _ = optimizer_step(cfg, init_state(cfg, params0), params0,
                                 {k: v / float(n) for k, v in total.items()},
                                 cfg.lr)
    ok3 = all(np.array_equal(via_acc[k], via_mean[k]) for k in params0)

    report("optimizer-identities", ok1 and ok2 and ok3,
           f"adam(b1=0)~rmsprop gap {max_gap:.1e}; sgd_momentum(0)==sgd {ok2}; "
           f"accumulate bitwise {ok3}")


# ---------------------------------------------------------------------------
# Directional reproductions on synthetic streams.
# ---------------------------------------------------------------------------

def _experiment(out, task, delta, steps, videos, frames, seed, velocity,
                classes=5, shapes=3, drift=0.005, hidden=64):
    cfg = ExperimentConfig()
    cfg.task = task
    cfg.delta = delta
    cfg.total_steps = steps
    cfg.log_interval = 10
    cfg.eval_interval = max(1, steps // 20)
    cfg.eval_max_examples = 24
    cfg.checkpoint_interval = steps
    cfg.seed = seed
    cfg.out_dir = str(out)
    cfg.stream.num_videos = videos
    cfg.stream.frames_per_video = frames
    cfg.stream.num_shapes = shapes
    cfg.stream.num_classes = classes
    cfg.stream.velocity_range = velocity
    cfg.stream.background_drift = drift
    cfg.stream.heldout_num_videos = 3
    cfg.model.kind = "patch_mlp"
    cfg.model.hidden = hidden
    cfg.optimizer.kind = "rmsprop"
    cfg.optimizer.beta2 = 0.99
    cfg.schedule.warmup = 100
    return cfg


def _mean_grad_cosine(log):
    rows = pathlib.Path(log.diagnostics_csv).read_text().splitlines()[1:]
    vals = [float(r.split(",")[3]) for r in rows
            if r.split(",")[1] == "grad_cosine"]
    return float(np.mean(vals))


def test_gradient_correlation_direction(tmp_path):
    """Sequential streams produce strongly correlated consecutive gradients;
    the IID permutation of the same stream does not."""
    cosines = {}
    for order in ("sequential", "iid"):
        cfg = _experiment(tmp_path / order, "pixel", 4, 2200, 11, 880, 0,
                          (0.1, 0.5))
        cfg.stream.order = order
        cfg.log_interval = 1
        cfg.optimizer.kind = "sgd"
        cfg.optimizer.lr = 1e-3
        cfg.pretrain.steps = 300
        cfg.pretrain.mode = "vanilla"
        cfg.pretrain.delta = 4
        log = run_experiment(cfg)
        cosines[order] = _mean_grad_cosine(log)
        del log
        gc.collect()
    ok = cosines["sequential"] > 0.3 and -0.1 <= cosines["iid"] <= 0.1
    report("gradient-correlation-direction", ok,
           f"sequential {cosines['sequential']:+.3f} (> 0.3), "
           f"iid {cosines['iid']:+.3f} (in [-0.1, 0.1])")


def _smoothed_final_quartile(series, alpha=1e-3):
    vals = np.asarray(series.values)
    sm = np.empty_like(vals)
    sm[0] = vals[0]
    for i in range(1, len(vals)):
        sm[i] = alpha * vals[i] + (1 - alpha) * sm[i - 1]
    return float(sm[len(sm) * 3 // 4:].mean())


def test_momentum_hurts_direction(tmp_path):
    """adamw(beta1=0.9) trails rmsprop on smoothed in-stream loss; the
    comparison toggles only the momentum knob (matched beta2, eps handling,
    no bias correction), same lr, averaged over 3 seeds."""
    finals = {"adamw": [], "rmsprop": []}
    for seed in (0, 1, 2):
        for kind, b1 in (("adamw", 0.9), ("rmsprop", 0.0)):
            cfg = _experiment(tmp_path / f"{kind}{seed}", "pixel", 4, 2000,
                              60, 144, seed, (0.05, 0.2), drift=0.002)
            cfg.log_interval = 1
            cfg.optimizer.kind = kind
            cfg.optimizer.lr = 5e-2
            cfg.optimizer.beta1 = b1
            if kind == "adamw":
                cfg.optimizer.bias_correction = False
                cfg.optimizer.eps_inside_sqrt = True
            cfg.pretrain.steps = 300
            cfg.pretrain.mode = "vanilla"
            cfg.pretrain.delta = 4
            log = run_experiment(cfg)
            finals[kind].append(
                _smoothed_final_quartile(log.series[("mse_pixel", "in_stream")]))
            del log
            gc.collect()
    ratio = float(np.mean(finals["adamw"]) / np.mean(finals["rmsprop"]))
    report("momentum-hurts-direction", ratio >= 1.05,
           f"adamw/rmsprop smoothed final-quartile loss ratio {ratio:.3f} "
           f"(>= 1.05)")


def test_update_frequency_direction(tmp_path):
    """n=1 adapts better in-stream; n=16 generalizes better out-of-stream,
    on at least 2 of 3 seeds (synthetic segmentation)."""
    wins_in = wins_out = 0
    lines = []
    for seed in (0, 1, 2):
        scores = {}
        for n in (1, 16):
            cfg = _experiment(tmp_path / f"n{n}s{seed}", "segmentation", 1,
                              12000, 150, 324, seed, (0.5, 1.5))
            cfg.steps_per_update = n
            cfg.optimizer.lr = 0.2
            cfg.log_interval = 20
            cfg.eval_interval = 300
            cfg.eval_max_examples = 120
            log = run_experiment(cfg)
            scores[n] = (
                cumulative_score(log.series[("miou", "in_stream")]),
                cumulative_score(log.series[("miou", "out_of_stream")]))
            del log
            gc.collect()
        win_in = scores[1][0] >= scores[16][0]
        win_out = scores[16][1] >= scores[1][1]
        wins_in += win_in
        wins_out += win_out
        lines.append(f"seed{seed} in({scores[1][0]:.3f} vs {scores[16][0]:.3f})"
                     f" out({scores[1][1]:.3f} vs {scores[16][1]:.3f})")
    ok = wins_in >= 2 and wins_out >= 2
    report("update-frequency-direction", ok,
           f"in-wins {wins_in}/3, out-wins {wins_out}/3; " + "; ".join(lines))


def test_schedule_direction(tmp_path):
    """Cosine^2 decay sacrifices in-stream adaptation and matches or beats
    constant lr out-of-stream, on at least 2 of 3 seeds."""
    wins = 0
    lines = []
    for seed in (0, 1, 2):
        scores = {}
        for kind in ("constant", "cosine_pow"):
            cfg = _experiment(tmp_path / f"{kind}{seed}", "segmentation", 1,
                              4800, 60, 324, seed, (0.5, 1.5))
            cfg.schedule.kind = kind
            cfg.optimizer.lr = 0.05
            cfg.eval_interval = 120
            cfg.eval_max_examples = 120
            log = run_experiment(cfg)
            scores[kind] = (
                cumulative_score(log.series[("miou", "in_stream")]),
                cumulative_score(log.series[("miou", "out_of_stream")]))
            del log
            gc.collect()
        ok = (scores["cosine_pow"][0] <= scores["constant"][0]
              and scores["cosine_pow"][1] >= scores["constant"][1])
        wins += ok
        lines.append(f"seed{seed} in({scores['constant'][0]:.3f} vs "
                     f"{scores['cosine_pow'][0]:.3f}) out({scores['constant'][1]:.3f}"
                     f" vs {scores['cosine_pow'][1]:.3f})")
    report("schedule-direction", wins >= 2,
           f"{wins}/3 seeds; " + "; ".join(lines))


def test_blind_baseline_behavior(tmp_path):
    """The blind dummy adapts in-stream but scores at class-frequency chance
    out-of-stream."""
    cfg = ExperimentConfig()
    cfg.task = "segmentation"
    cfg.delta = 1
    cfg.model.kind = "blind"
    cfg.optimizer.enabled = False
    cfg.schedule.warmup = 0
    cfg.total_steps = 99   # one 400-frame video
    cfg.log_interval = 2
    cfg.eval_interval = 99
    cfg.eval_max_examples = 120
    cfg.checkpoint_interval = 99
    cfg.out_dir = str(tmp_path / "blind")
    cfg.stream.num_videos = 1
    cfg.stream.frames_per_video = 400
    cfg.stream.velocity_range = (0.02, 0.08)
    cfg.stream.num_classes = 3
    cfg.stream.num_shapes = 2
    cfg.stream.background_drift = 0.002
    cfg.stream.heldout_num_videos = 3
    cfg.seed = 0
    log = run_experiment(cfg)
    in_miou = cumulative_score(log.series[("miou", "in_stream")])
    oos_miou = log.series[("miou", "out_of_stream")].values[-1]

    # analytic chance: an all-background prediction scored from the held-out
    # stream's class frequencies alone
    _, heldout = build_streams(cfg)
    cur = StreamCursor(heldout, delta=1, n_frames=4)
    vals = []
    for _ in range(120):
        item = cur.next_example("segmentation")
        if item is None:
            break
        _, raw = item
        for f in range(raw.labels.shape[0]):
            lab = raw.labels[f]
            present = np.unique(lab)
            vals.append((lab == 0).mean() / present.size
                        if 0 in present else 0.0)
    chance = float(np.mean(vals))
    gap = in_miou - oos_miou
    ok = gap >= 0.2 and abs(oos_miou - chance) <= 0.05
    report("blind-baseline", ok,
           f"in {in_miou:.3f}, out {oos_miou:.3f}, gap {gap:+.3f} (>= 0.2), "
           f"chance {chance:.3f}, |out-chance| {abs(oos_miou - chance):.3f} "
           f"(<= 0.05)")


# ---------------------------------------------------------------------------
# Codec exactness.
# ---------------------------------------------------------------------------

def test_codec_exactness():
    cmap = segmentation_colormap(40)
    labels = np.arange(40).reshape(1, 5, 8)
    enc = encode_target("segmentation", labels, cmap)
    dec = decode_prediction("segmentation", enc.rgb, cmap)
    seg_ok = np.array_equal(dec, labels)

    dmap = depth_colormap()
    grid = np.linspace(0.0, 8.0, 1000).reshape(1, 25, 40)
    denc = encode_target("depth", grid, dmap)
    ddec = decode_prediction("depth", denc.rgb, dmap)
    derr = float(np.abs(ddec - grid).max())
    ok = seg_ok and derr <= MAX_DEPTH / 255 + 1e-12
    report("codec-exactness", ok,
           f"segmentation roundtrip identity {seg_ok}; depth max err "
           f"{derr:.5f} (<= {MAX_DEPTH / 255:.5f})")


# ---------------------------------------------------------------------------
# Corruption counts.
# ---------------------------------------------------------------------------

def test_corruption_counts():
    rng = np.random.default_rng(0)
    inp = rng.random((4, 3, 224, 224))
    fut = rng.random((4, 3, 224, 224))
    counts_ok = True
    details = []
    for f, want in ((0.05, 2), (0.10, 5), (0.50, 25), (0.75, 37)):
        got = num_replaced(f, 49)
        counts_ok &= got == want == math.floor(f * 49 + 0.5)
        cfg = CorruptionConfig(mode="masked", fraction=f, patch_size=32)
        out = corrupt(inp, fut, cfg, np.random.default_rng(1))
        gray = sum(bool(np.all(out[..., r * 32:(r + 1) * 32,
                                  c * 32:(c + 1) * 32] == 0.5))
                   for r in range(7) for c in range(7))
        counts_ok &= gray == want
        details.append(f"f={f}: {got}")
    ident = np.array_equal(
        corrupt(inp, fut, CorruptionConfig("masked", 0.0, 32),
                np.random.default_rng(2)), inp)
    full = np.array_equal(
        corrupt(inp, fut, CorruptionConfig("guided", 1.0, 32),
                np.random.default_rng(3)), fut)
    ok = counts_ok and ident and full
    report("corruption-counts", ok,
           ", ".join(details) + f"; f=0 identity {ident}; guided f=1 {full}")


# ---------------------------------------------------------------------------
# Cumulative score.
# ---------------------------------------------------------------------------

def test_cumulative_score_criterion():
    const = MetricSeries("m")
    for step, v in ((0, 0.7), (50, 0.7), (999, 0.7)):
        const.append(step, v)
    exact = cumulative_score(const) == 0.7

    ramp = MetricSeries("m")
    ramp.append(0, 0.0)
    ramp.append(12345, 1.0)
    ramp_err = abs(cumulative_score(ramp) - 0.5)

    a = MetricSeries("m")
    for s, v in ((0, 0.2), (100, 1.0), (300, 0.4)):
        a.append(s, v)
    b = MetricSeries("m")
    for s, v in ((0, 0.2), (25, 0.4), (100, 1.0), (200, 0.7), (300, 0.4)):
        b.append(s, v)
    collinear_gap = abs(cumulative_score(a) - cumulative_score(b))
    ok = exact and ramp_err <= 1.0 / (2 * 10000) and collinear_gap <= 1e-12
    report("cumulative-score", ok,
           f"constant exact {exact}; ramp err {ramp_err:.2e} "
           f"(<= {1/(2*10000):.2e}); collinear gap {collinear_gap:.2e}")


# ---------------------------------------------------------------------------
# Determinism & restart.
# ---------------------------------------------------------------------------

def _determinism_config(out):
    cfg = ExperimentConfig()
    cfg.task = "segmentation"
    cfg.delta = 1
    cfg.total_steps = 120
    cfg.log_interval = 10
    cfg.eval_interval = 30
    cfg.eval_max_examples = 8
    cfg.checkpoint_interval = 40
    cfg.schedule.warmup = 20
    cfg.stream.num_videos = 3
    cfg.stream.frames_per_video = 200
    cfg.model.kind = "patch_mlp"
    cfg.model.hidden = 16
    cfg.pretrain.steps = 20
    cfg.out_dir = str(out)
    return cfg.validate()


def test_determinism_and_restart(tmp_path):
    a = run_experiment(_determinism_config(tmp_path / "a"))
    b = run_experiment(_determinism_config(tmp_path / "b"))
    identical = (pathlib.Path(a.metrics_csv).read_bytes()
                 == pathlib.Path(b.metrics_csv).read_bytes())

    resumed = run_experiment(
        _determinism_config(tmp_path / "c"),
        resume_from=str(tmp_path / "a" / "checkpoint_00000040.ckpt"))
    full_rows = [r for r in
                 pathlib.Path(a.metrics_csv).read_text().splitlines()[1:]
                 if int(r.split(",")[0]) > 40]
    res_rows = pathlib.Path(resumed.metrics_csv).read_text().splitlines()[1:]
    restart_ok = full_rows == res_rows
    ok = identical and restart_ok
    report("determinism-and-restart", ok,
           f"rerun byte-identical {identical}; resumed rows identical "
           f"{restart_ok} ({len(res_rows)} rows)")


# ---------------------------------------------------------------------------
# [SECONDARY] Plot regeneration from a completed preset run's CSVs.
# ---------------------------------------------------------------------------

PLOTS_CLI = pathlib.Path(__file__).resolve().parents[1] / "plots" / "dist" / "main.js"


@pytest.mark.skipif(shutil.which("node") is None or not PLOTS_CLI.exists(),
                    reason="plots component not built (run npm install && "
                           "npm run build in plots/)")
def test_plot_regeneration_secondary(tmp_path):
    cfg = preset("bl_cont")
    cfg.total_steps = 300
    cfg.schedule.warmup = 50
    cfg.stream.num_videos = 6
    cfg.stream.frames_per_video = 220
    cfg.eval_interval = 60
    cfg.eval_max_examples = 8
    cfg.checkpoint_interval = 300
    cfg.pretrain.steps = 30
    cfg.out_dir = str(tmp_path / "preset_run")
    log = run_experiment(cfg)

    curves = tmp_path / "curves.png"
    hist = tmp_path / "hist.png"
    r1 = subprocess.run(
        ["node", str(PLOTS_CLI), "render", "--kind", "curves", "--csv",
         log.metrics_csv, "--metric", "miou", "--alpha", "1e-3",
         "--out", str(curves)], capture_output=True, text=True)
    r2 = subprocess.run(
        ["node", str(PLOTS_CLI), "render", "--kind", "histogram", "--csv",
         log.diagnostics_csv, "--metric", "grad_cosine",
         "--out", str(hist)], capture_output=True, text=True)
    ok = (r1.returncode == 0 and r2.returncode == 0
          and curves.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
          and hist.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n")
    report("plot-regeneration (secondary)", ok,
           f"curves rc={r1.returncode} ({curves.stat().st_size}B), "
           f"histogram rc={r2.returncode} ({hist.stat().st_size}B)"
           + (f"; stderr: {r1.stderr} {r2.stderr}" if not ok else ""))

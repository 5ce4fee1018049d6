"""Command-line entry points.

    streamlearn run <config> [--resume CKPT]
    streamlearn preset <name> --out <path>
    streamlearn eval <checkpoint> <stream_dir> [--task T] [--delta D]
    streamlearn synth <config> --out <dir>

Exit codes: 0 success, 1 configuration error, 2 numeric divergence.
"""
from __future__ import annotations

import argparse
import sys

from .config import load_config, parse_kv_text, save_config
from .errors import ConfigurationError, DivergenceError
from .harness import PRESETS, evaluate_checkpoint, preset, run_experiment
from .stream_io import read_stream_dir, write_stream_dir
from .streams import SyntheticConfig, synth_stream


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="streamlearn",
        description="Online pixel-to-pixel learning from one video stream")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--resume", default=None, metavar="CKPT")

    p_preset = sub.add_parser("preset", help="write a named preset config")
    p_preset.add_argument("name", choices=PRESETS)
    p_preset.add_argument("--out", required=True)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a stream")
    p_eval.add_argument("checkpoint")
    p_eval.add_argument("stream_dir")
    p_eval.add_argument("--task", default=None,
                        choices=("pixel", "segmentation", "depth"))
    p_eval.add_argument("--delta", type=int, default=None)
    p_eval.add_argument("--max-examples", type=int, default=64)

    p_synth = sub.add_parser(
        "synth", help="materialize a synthetic stream as a frame directory")
    p_synth.add_argument("config")
    p_synth.add_argument("--out", required=True)
    return parser


def _synth_config(path) -> SyntheticConfig:
    with open(path) as f:
        flat = parse_kv_text(f.read())
    # accept either bare synthetic keys or an experiment config's stream.*
    fields = {k: v for k, v in flat.items() if not k.startswith("stream.")}
    fields.update({k[len("stream."):]: v for k, v in flat.items()
                   if k.startswith("stream.")})
    kwargs = {}
    for name in ("num_videos", "frames_per_video", "resolution", "num_shapes",
                 "velocity_range", "background_drift", "num_classes",
                 "depth_range", "fps", "seed"):
        if name in fields:
            kwargs[name] = fields[name]
    if "resolution" not in kwargs and "resolution" in flat:
        kwargs["resolution"] = flat["resolution"]
    return SyntheticConfig(**kwargs).validate()


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            run_log = run_experiment(config, resume_from=args.resume)
            print(f"metrics: {run_log.metrics_csv}")
            print(f"diagnostics: {run_log.diagnostics_csv}")
            for path in run_log.checkpoints:
                print(f"checkpoint: {path}")
        elif args.command == "preset":
            save_config(preset(args.name), args.out)
            print(f"wrote {args.out}")
        elif args.command == "eval":
            stream = read_stream_dir(args.stream_dir)
            values = evaluate_checkpoint(
                args.checkpoint, stream, task=args.task, delta=args.delta,
                max_examples=args.max_examples)
            for name in sorted(values):
                print(f"{name} {values[name]:.6g}")
        elif args.command == "synth":
            stream = synth_stream(_synth_config(args.config))
            write_stream_dir(stream, args.out)
            print(f"wrote {len(stream.videos)} videos to {args.out}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"numeric divergence: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

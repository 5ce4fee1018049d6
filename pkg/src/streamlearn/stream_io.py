"""Frame-directory stream format.

Layout:

    root/manifest.txt            one video directory name per line, in order
    root/<video>/00000000.png    8-bit RGB frames, zero-padded numbering
    root/<video>/labels/         optional, 8-bit single channel, 255 = ignore
    root/<video>/depth/          optional, 16-bit millimeters, 0 = invalid

RGB values quantize to 1/255 on write; depth quantizes to 1 mm.
"""
from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .errors import ConfigurationError
from .streams import AnnotatedStream, Video

MANIFEST = "manifest.txt"
IGNORE_8BIT = 255


def write_stream_dir(stream: AnnotatedStream, root):
    os.makedirs(root, exist_ok=True)
    names = []
    for vi, video in enumerate(stream.videos):
        name = f"video_{vi:04d}"
        names.append(name)
        vdir = os.path.join(root, name)
        os.makedirs(vdir, exist_ok=True)
        if video.labels is not None:
            os.makedirs(os.path.join(vdir, "labels"), exist_ok=True)
        if video.depth is not None:
            os.makedirs(os.path.join(vdir, "depth"), exist_ok=True)
        for t in range(video.num_frames):
            fname = f"{t:08d}.png"
            rgb8 = np.clip(np.rint(video.rgb[t] * 255), 0, 255).astype(np.uint8)
            Image.fromarray(np.moveaxis(rgb8, 0, -1), mode="RGB").save(
                os.path.join(vdir, fname))
            if video.labels is not None:
                lab = video.labels[t]
                if lab.max() >= IGNORE_8BIT:
                    raise ValueError("class ids >= 255 cannot be written")
                lab8 = np.where(lab < 0, IGNORE_8BIT, lab).astype(np.uint8)
                Image.fromarray(lab8, mode="L").save(
                    os.path.join(vdir, "labels", fname))
            if video.depth is not None:
                mm = np.rint(video.depth[t] * 1000.0)
                mm = np.clip(mm, 1, 65535)  # 0 is reserved for invalid
                if video.depth_valid is not None:
                    mm = np.where(video.depth_valid[t], mm, 0)
                Image.fromarray(mm.astype("<u2")).save(
                    os.path.join(vdir, "depth", fname))
    with open(os.path.join(root, MANIFEST), "w") as f:
        f.write("\n".join(names) + "\n")
    return root


def read_stream_dir(root, fps: float = 25.0,
                    num_classes: int | None = None) -> AnnotatedStream:
    manifest = os.path.join(root, MANIFEST)
    if not os.path.exists(manifest):
        raise ConfigurationError(f"missing {manifest}")
    with open(manifest) as f:
        names = [line.strip() for line in f if line.strip()]
    if not names:
        raise ConfigurationError(f"{manifest} lists no videos")
    videos = []
    max_label = -1
    for name in names:
        vdir = os.path.join(root, name)
        frame_files = sorted(fn for fn in os.listdir(vdir)
                             if fn.endswith(".png"))
        if not frame_files:
            raise ConfigurationError(f"{vdir} holds no frames")
        rgb, labels, depth, valid = [], [], [], []
        has_labels = os.path.isdir(os.path.join(vdir, "labels"))
        has_depth = os.path.isdir(os.path.join(vdir, "depth"))
        for fname in frame_files:
            img = np.asarray(Image.open(os.path.join(vdir, fname)))
            rgb.append(np.moveaxis(img, -1, 0).astype(np.float32) / 255.0)
            if has_labels:
                lab = np.asarray(Image.open(
                    os.path.join(vdir, "labels", fname))).astype(np.int16)
                labels.append(np.where(lab == IGNORE_8BIT, -1, lab))
            if has_depth:
                mm = np.asarray(Image.open(
                    os.path.join(vdir, "depth", fname))).astype(np.float32)
                depth.append(mm / 1000.0)
                valid.append(mm > 0)
        videos.append(Video(
            rgb=np.stack(rgb),
            labels=np.stack(labels) if has_labels else None,
            depth=np.stack(depth) if has_depth else None,
            depth_valid=np.stack(valid) if has_depth else None))
        if has_labels:
            max_label = max(max_label, int(videos[-1].labels.max()))
    if num_classes is None and max_label >= 0:
        num_classes = max_label + 1
    return AnnotatedStream(videos=videos, fps=fps, num_classes=num_classes)

"""Config text format and the binary checkpoint container."""
import numpy as np
import pytest

from streamlearn.checkpoint import load_checkpoint, save_checkpoint
from streamlearn.config import (ExperimentConfig, format_kv, from_flat,
                                load_config, parse_kv_text, save_config,
                                to_flat)
from streamlearn.errors import ConfigurationError


def test_kv_parse_types():
    flat = parse_kv_text("""
    # comment
    a = 3
    b = 0.5       # trailing comment
    c = true
    d = hello
    e = 1.0, 2.5
    """)
    assert flat == {"a": 3, "b": 0.5, "c": True, "d": "hello", "e": (1.0, 2.5)}


def test_kv_bad_line_errors():
    with pytest.raises(ConfigurationError):
        parse_kv_text("just words\n")


def test_config_roundtrip(tmp_path):
    cfg = ExperimentConfig()
    cfg.optimizer.kind = "adamw"
    cfg.stream.velocity_range = (0.5, 2.0)
    cfg.total_steps = 777
    path = tmp_path / "c.txt"
    save_config(cfg, path)
    back = load_config(path)
    assert to_flat(back) == to_flat(cfg)


def test_unknown_key_errors():
    with pytest.raises(ConfigurationError, match="unknown config keys"):
        from_flat({"optimizer.momentum": 0.9})


def test_type_coercion_errors():
    with pytest.raises(ConfigurationError):
        from_flat({"total_steps": "many"})
    with pytest.raises(ConfigurationError):
        from_flat({"optimizer.lr": "fast"})
    with pytest.raises(ConfigurationError):
        from_flat({"replay.enabled": 1})


def test_validation_paths_in_messages():
    cfg = ExperimentConfig()
    cfg.stream.source = "webcam"
    with pytest.raises(ConfigurationError, match="stream.source"):
        cfg.validate()
    cfg = ExperimentConfig()
    cfg.replay.enabled = True
    cfg.steps_per_update = 4
    with pytest.raises(ConfigurationError, match="replay"):
        cfg.validate()
    cfg = ExperimentConfig()
    cfg.augment.enabled = True
    cfg.delta = 1
    with pytest.raises(ConfigurationError, match="augment"):
        cfg.validate()


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {
        "a.f32": rng.standard_normal((3, 4)).astype(np.float32),
        "b.f64": rng.standard_normal((2, 2, 2)),
        "c.i64": rng.integers(-5, 5, size=(7,)),
        "d.bool": rng.random((4, 4)) > 0.5,
        "e.scalarish": np.array([1.5]),
    }
    header = {"precision": "float64", "step": 42, "note": "x = y"}
    path = tmp_path / "t.ckpt"
    save_checkpoint(path, header, tensors)
    h, t = load_checkpoint(path)
    assert h["precision"] == "float64"
    assert h["step"] == "42"
    assert h["note"] == "x = y"
    assert set(t) == set(tensors)
    for k in tensors:
        want = tensors[k]
        if want.dtype == np.bool_:
            want = want.astype("u1")
        assert np.array_equal(t[k], want)
        assert t[k].dtype == want.dtype


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"PK\x03\x04 definitely not ours\n")
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_checkpoint_bitwise_float_roundtrip(tmp_path):
    # values must come back exactly for bitwise resume
    arr = np.array([1e-308, -0.0, np.pi, 1.0 + 2 ** -52])
    path = tmp_path / "b.ckpt"
    save_checkpoint(path, {}, {"w": arr})
    _, t = load_checkpoint(path)
    assert t["w"].tobytes() == arr.tobytes()

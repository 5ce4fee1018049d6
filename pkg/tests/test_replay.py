"""Replay buffer: circular writes, uniform reads."""
import numpy as np
import pytest

from streamlearn.replay import ReplayBuffer


def ex(v):
    return (np.full((2, 2), float(v)), np.full((2, 2), float(v) + 10),
            np.ones((1, 2)))


def stored_values(buffer):
    return sorted(e[0][0, 0] for e in buffer._slots[:buffer.fill])


def test_circular_overwrite():
    buf = ReplayBuffer(capacity=2)
    for v in (1, 2, 3):
        buf.push(ex(v))
    assert stored_values(buf) == [2.0, 3.0]


def test_fill_saturates():
    buf = ReplayBuffer(capacity=3)
    for v in range(10):
        buf.push(ex(v))
        assert buf.fill == min(v + 1, 3)
    assert len(buf) == 3


def test_push_preserves_untouched_entries():
    buf = ReplayBuffer(capacity=4)
    for v in range(3):
        buf.push(ex(v))
    snapshot = [tuple(a.copy() for a in e) for e in buf._slots[:3]]
    buf.push(ex(99))
    for before, after in zip(snapshot, buf._slots[:3]):
        for a, b in zip(before, after):
            assert np.array_equal(a, b)


def test_single_fill_sampled_thrice():
    buf = ReplayBuffer(capacity=5)
    buf.push(ex(7))
    out = buf.sample(3, np.random.default_rng(0))
    assert len(out) == 3
    assert all(o[0][0, 0] == 7.0 for o in out)


def test_sampling_deterministic_per_seed():
    buf = ReplayBuffer(capacity=10)
    for v in range(10):
        buf.push(ex(v))
    a = [e[0][0, 0] for e in buf.sample(50, np.random.default_rng(4))]
    b = [e[0][0, 0] for e in buf.sample(50, np.random.default_rng(4))]
    assert a == b


def test_sampling_frequencies_uniform():
    buf = ReplayBuffer(capacity=10)
    for v in range(10):
        buf.push(ex(v))
    rng = np.random.default_rng(11)
    draws = [e[0][0, 0] for e in buf.sample(10000, rng)]
    values, counts = np.unique(draws, return_counts=True)
    assert len(values) == 10
    freqs = counts / 10000
    assert np.all(np.abs(freqs - 0.1) <= 0.02)


def test_empty_sample_errors():
    with pytest.raises(ValueError):
        ReplayBuffer(capacity=2).sample(1, np.random.default_rng(0))


def test_shape_mismatch_errors():
    buf = ReplayBuffer(capacity=2)
    buf.push(ex(1))
    with pytest.raises(ValueError):
        buf.push((np.zeros((3, 3)), np.zeros((2, 2)), np.ones((1, 2))))


def test_bad_capacity_errors():
    with pytest.raises(ValueError):
        ReplayBuffer(capacity=0)

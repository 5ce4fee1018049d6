"""Gradient-stream diagnostics."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from streamlearn.diagnostics import grad_cosine, grad_norm, summarize


def gset(*arrays):
    return {f"g{i}": np.asarray(a, dtype=float) for i, a in enumerate(arrays)}


def test_identical_gradients_cosine_one():
    g = gset([1.0, 2.0], [[3.0, -1.0]])
    assert grad_cosine(g, g) == pytest.approx(1.0)


def test_opposite_gradients_cosine_minus_one():
    g = gset([1.0, 2.0])
    h = gset([-1.0, -2.0])
    assert grad_cosine(g, h) == pytest.approx(-1.0)


def test_orthogonal_gradients_cosine_zero():
    assert grad_cosine(gset([1.0, 0.0]), gset([0.0, 1.0])) == 0.0


def test_zero_norm_defined_zero():
    assert grad_cosine(gset([0.0, 0.0]), gset([1.0, 1.0])) == 0.0


def test_cosine_clamped_to_unit_interval(rng):
    for _ in range(50):
        a = gset(rng.standard_normal(17))
        b = gset(rng.standard_normal(17))
        assert -1.0 <= grad_cosine(a, b) <= 1.0


@given(a=st.floats(min_value=1e-3, max_value=1e3),
       b=st.floats(min_value=1e-3, max_value=1e3))
def test_cosine_scale_invariant(a, b):
    g = gset([1.0, -2.0, 0.5])
    h = gset([0.3, 0.7, -1.1])
    base = grad_cosine(g, h)
    scaled = grad_cosine({k: a * v for k, v in g.items()},
                         {k: b * v for k, v in h.items()})
    assert scaled == pytest.approx(base, abs=1e-9)


def test_key_mismatch_errors():
    with pytest.raises(ValueError):
        grad_cosine({"a": np.ones(2)}, {"b": np.ones(2)})
    with pytest.raises(ValueError):
        grad_cosine({"a": np.ones(2)}, {"a": np.ones(3)})


def test_per_layer_breakdown():
    g = {"a": np.array([1.0, 0.0]), "b": np.array([2.0])}
    h = {"a": np.array([0.0, 1.0]), "b": np.array([-2.0])}
    per = grad_cosine(g, h, per_layer=True)
    assert per["a"] == 0.0 and per["b"] == pytest.approx(-1.0)


def test_grad_norm():
    assert grad_norm(gset([3.0], [4.0])) == pytest.approx(5.0)


def test_summarize_all_equal_single_bin():
    counts, edges, mean, var = summarize([5.0, 5.0, 5.0], bins=4)
    assert counts.sum() == 3
    assert (counts > 0).sum() == 1
    assert mean == 5.0 and var == 0.0


def test_summarize_two_values_two_bins():
    counts, _, _, _ = summarize([0.0, 1.0], bins=2)
    assert counts.tolist() == [1, 1]


def test_summarize_hand_moments():
    counts, _, mean, var = summarize([1.0, 2.0, 3.0], bins=3)
    assert mean == pytest.approx(2.0)
    assert var == pytest.approx(2.0 / 3.0)
    assert counts.sum() == 3


def test_summarize_counts_total(rng):
    values = rng.standard_normal(257)
    counts, _, _, _ = summarize(values, bins=13)
    assert counts.sum() == 257


def test_summarize_validation():
    with pytest.raises(ValueError):
        summarize([], bins=2)
    with pytest.raises(ValueError):
        summarize([1.0], bins=0)

import numpy as np
import pytest


def central_diff(f, arrays, h=1e-5):
    """Finite-difference gradient of scalar f(arrays) w.r.t. every entry.

    arrays: dict name -> float64 ndarray (perturbed in place, restored).
    Returns dict name -> gradient array.  Independent of any autodiff path.
    """
    grads = {}
    for name, a in arrays.items():
        g = np.zeros_like(a)
        flat, gflat = a.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = f(arrays)
            flat[i] = orig - h
            lm = f(arrays)
            flat[i] = orig
            gflat[i] = (lp - lm) / (2 * h)
        grads[name] = g
    return grads


def rel_err(a, b, floor=1e-6):
    """Max relative error with an absolute floor for near-zero references."""
    a, b = np.asarray(a), np.asarray(b)
    return float((np.abs(a - b) / np.maximum(np.abs(b), floor)).max())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

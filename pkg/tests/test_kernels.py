"""Backend parity: the numba kernels must agree with the numpy reference."""


import numpy as np
import pytest

from pwdlab.kernels import numpy_impl

numba_impl = pytest.importorskip("pwdlab.kernels.numba_impl")

from conftest import make_rng


def _random_concepts(rng, n, count):
    kinds = rng.integers(0, 3, count).astype(np.int8)
    v1 = rng.integers(0, n, count)
    v2 = rng.integers(-1, n, count)
    v2[kinds != numpy_impl.KIND_CONJ] = -1
    v1[kinds != numpy_impl.KIND_CONJ] = -1
    same = (v2 == v1) & (kinds == numpy_impl.KIND_CONJ)
    v2[same] = -1
    return kinds, v1.astype(np.int64), v2.astype(np.int64)


def test_disagreement_parity():
    rng = make_rng(80)
    X = (rng.random((500, 6)) < 0.5).astype(np.uint8)
    labels = (rng.random(500) < 0.4).astype(np.uint8)
    kinds, v1, v2 = _random_concepts(rng, 6, 40)
    a = numpy_impl.conjunction_disagreements(X, labels, kinds, v1, v2)
    b = numba_impl.conjunction_disagreements(X, labels, kinds, v1, v2)
    assert np.array_equal(a, b)


def test_eval_parity():
    rng = make_rng(81)
    X = (rng.random((200, 5)) < 0.5).astype(np.uint8)
    kinds, v1, v2 = _random_concepts(rng, 5, 25)
    a = numpy_impl.conjunction_eval(X, kinds, v1, v2)
    b = numba_impl.conjunction_eval(X, kinds, v1, v2)
    assert np.array_equal(a, b)


def test_bernoulli_log_density_parity():
    rng = make_rng(82)
    y = (rng.random((300, 7)) < 0.5).astype(np.int8)
    biases = rng.uniform(0.05, 0.95, 7)
    a = numpy_impl.bernoulli_log_density(y, np.log2(biases), np.log2(1 - biases))
    b = numba_impl.bernoulli_log_density(y, np.log2(biases), np.log2(1 - biases))
    assert np.allclose(a, b, rtol=1e-12, atol=1e-10)


def test_bary_log_density_parity():
    rng = make_rng(83)
    y = rng.integers(0, 3, (300, 4)).astype(np.int8)
    table = rng.dirichlet(np.ones(3), size=4)
    a = numpy_impl.bary_log_density(y, np.log2(table))
    b = numba_impl.bary_log_density(y, np.log2(table))
    assert np.allclose(a, b, rtol=1e-12, atol=1e-10)


def test_gaussian_log_density_parity():
    rng = make_rng(84)
    y = rng.normal(size=(300, 3))
    mean = rng.uniform(0, 1, 3)
    a = numpy_impl.gaussian_log_density(y, mean, 1.3)
    b = numba_impl.gaussian_log_density(y, mean, 1.3)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-10)


def test_backend_selection_env(monkeypatch):
    import pwdlab.kernels as k

    assert k.backend_name() in ("numba", "numpy")

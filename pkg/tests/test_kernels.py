import numpy as np
import pytest

from scenred import kernels

py = kernels.load("python")
try:
    cy = kernels.load("cython")
except ImportError:  # pragma: no cover - exercised only without a compiler
    cy = None

needs_cy = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


@needs_cy
@pytest.mark.parametrize("n", [1, 2, 7, 300])
def test_kernels_agree(n):
    rng = np.random.default_rng(n)
    X = rng.normal(size=(n, 5))
    C1, C2 = py.sq_euclidean(X), cy.sq_euclidean(X)
    assert np.allclose(C1, C2, rtol=1e-12, atol=1e-12)
    p = rng.dirichlet(np.ones(n))
    m = min(n, 6)
    a, b = py.forward_select(C1, p, m), cy.forward_select(C1, p, m)
    assert list(a[0]) == list(b[0])
    assert np.allclose(a[1], b[1], equal_nan=True, rtol=1e-12, atol=1e-15)
    sel = np.sort(np.array(a[0], dtype=np.intp))
    for k1, k2 in zip(py.nearest_selected(C1, sel), cy.nearest_selected(C1, sel)):
        assert np.allclose(k1, k2)


@needs_cy
def test_ties_identical_across_kernels():
    C = np.zeros((5, 5))
    p = np.full(5, 0.2)
    assert list(py.forward_select(C, p, 3)[0]) == list(cy.forward_select(C, p, 3)[0]) == [0, 1, 2]


def test_pure_python_switch(monkeypatch):
    import importlib
    import scenred.kernels as k

    monkeypatch.setenv("SCENRED_PURE_PYTHON", "1")
    mod = importlib.reload(k)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("SCENRED_PURE_PYTHON")
        importlib.reload(k)

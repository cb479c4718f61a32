import numpy as np
import pytest

from gapstrand import _brkernel_py as py
from gapstrand import cell_model as cm
from gapstrand import kernels

compiled = pytest.importorskip("gapstrand._brkernel", reason="compiled kernel not built")


@pytest.fixture
def batch():
    rng = np.random.default_rng(7)
    n = 5000
    v = rng.uniform(-100, 60, n)
    v[:4] = [-47.0, -23.0, -5.0, 0.0]  # removable singularities of the rate formulas
    y = np.vstack([rng.uniform(0, 1, (6, n)), np.exp(rng.uniform(-18, -12, (1, n)))])
    return v, y


def test_backend_reported():
    assert kernels.BACKEND in ("compiled", "python")


def test_ionic_current_agrees(batch):
    v, y = batch
    p = cm.DEFAULT_PARAMS.vector
    np.testing.assert_allclose(compiled.ionic_current(v, y, p), py.ionic_current(v, y, p), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("dt", [1e-3, 0.01, 0.5])
def test_step_gates_agrees(batch, dt):
    v, y = batch
    p = cm.DEFAULT_PARAMS.vector
    rates = cm.DEFAULT_PARAMS.rate_table
    y_c, y_p = y.copy(), y.copy()
    compiled.step_gates(v, y_c, dt, rates, p)
    py.step_gates(v, y_p, dt, rates, p)
    np.testing.assert_allclose(y_c, y_p, rtol=1e-12, atol=1e-15)

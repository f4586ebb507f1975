import subprocess
import sys

import numpy as np
import pytest

from conftest import random_simplex
from qpa import kernels
from qpa.qpa_map import iterate, step_identical, step_mixed

BACKENDS = kernels.available_backends()


@pytest.fixture(params=BACKENDS)
def impl(request):
    return kernels.backend(request.param)


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
    assert "python" in BACKENDS
    with pytest.raises(ValueError):
        kernels.backend("fortran")


def test_step_batch_matches_scalar_map(impl, rng):
    pts = random_simplex(rng, 500)
    out, prob = impl.step_batch(np.ascontiguousarray(pts))
    for w, o, p in zip(pts, out, prob):
        ref = step_identical(w)
        assert np.max(np.abs(o - ref.state.as_array())) < 1e-15
        assert abs(p - ref.success_prob) < 1e-15


def test_iterate_batch_matches_scalar_iterate(impl, rng):
    pts = random_simplex(rng, 300)
    pts = np.ascontiguousarray(pts[pts[:, 0] > 0.5])
    pts = np.vstack([pts, [[1.0, 0, 0, 0], [0.25] * 4]])
    final, iters, conv, minf, logy = impl.iterate_batch(pts, 60, 1e-6)
    for k, w in enumerate(pts):
        t = iterate(w, max_iters=60, fid_tol=1e-6)
        assert iters[k] == t.iterations_used and conv[k] == t.converged
        assert np.max(np.abs(final[k] - t.final.as_array())) < 1e-13
        recorded = t.fidelities[1:] or t.fidelities
        assert minf[k] == pytest.approx(min(recorded), abs=1e-13)
        assert logy[k] == pytest.approx(np.sum(np.log([p.success_prob for p in t.points])), abs=1e-12)


def test_mixed_step_batch_matches_scalar(impl, rng):
    a = np.ascontiguousarray(random_simplex(rng, 200))
    b = np.ascontiguousarray(random_simplex(rng, 200))
    u = rng.random(200)
    out, prob, ok = impl.mixed_step_batch(a, b, u)
    for k in range(200):
        ref = step_mixed(a[k], b[k])
        assert np.max(np.abs(out[k] - ref.state.as_array())) < 1e-15
        assert abs(prob[k] - ref.success_prob) < 1e-15
        assert ok[k] == (u[k] < prob[k])


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_backends_agree_bitwise(rng):
    c, p = kernels.backend("cython"), kernels.backend("python")
    pts = np.ascontiguousarray(random_simplex(rng, 5000))
    for x, y in zip(c.iterate_batch(pts, 200, 1e-6), p.iterate_batch(pts, 200, 1e-6)):
        assert np.allclose(x, y, rtol=0, atol=1e-13)
    u = rng.random(5000)
    for x, y in zip(c.mixed_step_batch(pts, pts[::-1].copy(), u), p.mixed_step_batch(pts, pts[::-1].copy(), u)):
        assert np.allclose(x, y, rtol=0, atol=1e-15)


def test_fallback_selected_without_extension():
    code = (
        "import sys; sys.modules['qpa._ckernels'] = None\n"
        "import qpa\n"
        "from qpa.qpa_map import fixed_point_scan\n"
        "assert qpa.BACKEND == 'python', qpa.BACKEND\n"
        "assert fixed_point_scan(200, seed=1).ok\n"
    )
    res = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr

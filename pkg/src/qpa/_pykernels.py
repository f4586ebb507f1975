"""Numpy implementation of the recurrence kernels (fallback for ``_ckernels``)."""
import numpy as np


def _step(pts):
    a, b, c, d = pts.T
    n = (a + b) ** 2 + (c + d) ** 2
    out = np.stack([a * a + b * b, 2.0 * c * d, c * c + d * d, 2.0 * a * b], axis=1)
    return out / n[:, None], n


def step_batch(pts):
    """Apply the identical-pair map to each row; returns (states, success_probs)."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    return _step(pts)


def iterate_batch(pts, max_iters, fid_tol):
    """Iterate every row until 1 - A < fid_tol or max_iters steps.

    Returns (final_states, iterations, converged, min_fidelity, log_yield_units).
    """
    x = np.array(pts, dtype=np.float64, order="C")
    n = len(x)
    iters = np.zeros(n, dtype=np.int64)
    done = 1.0 - x[:, 0] < fid_tol
    minf = np.where(done, x[:, 0], 2.0)
    logy = np.zeros(n)
    for k in range(1, max_iters + 1):
        active = ~done
        if not active.any():
            break
        y, nk = _step(x[active])
        x[active] = y
        iters[active] = k
        logy[active] += np.log(nk)
        minf[active] = np.minimum(minf[active], y[:, 0])
        done[active] = 1.0 - y[:, 0] < fid_tol
    return x, iters, done.copy(), minf, logy


def mixed_step_batch(first, second, uniforms):
    """Two-pair map per row plus a sampled coincide/discard outcome.

    Row j succeeds iff uniforms[j] < N_j.  Returns (states, success_probs, success).
    """
    a, b, c, d = np.asarray(first, dtype=np.float64).T
    a2, b2, c2, d2 = np.asarray(second, dtype=np.float64).T
    n = (a + b) * (a2 + b2) + (c + d) * (c2 + d2)
    out = np.stack([a * a2 + b * b2, c2 * d + c * d2, c * c2 + d * d2, a * b2 + a2 * b], axis=1)
    return out / n[:, None], n, np.asarray(uniforms) < n

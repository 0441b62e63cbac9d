"""NumPy implementations of the compiled kernels in ``_kernels.pyx``.

Same signatures, same return conventions: results are written into ``out``
(or ``y``) and the index of the first offending evaluation point is returned,
``-1`` when every point succeeded.
"""

import numpy as np

_CHUNK = 512


def _first_hit(mask):
    rows = np.flatnonzero(mask.any(axis=1))
    return int(rows[0]) if rows.size else -1


def pr_eval(poles, residues, h2, d, s, out, tol):
    lim = tol * (1.0 + np.abs(poles))
    for start in range(0, s.shape[0], _CHUNK):
        z = s[start:start + _CHUNK, None] - poles[None, :]
        hit = _first_hit(np.abs(z) <= lim)
        if hit >= 0:
            return start + hit
        inv = 1.0 / z
        out[start:start + _CHUNK] = d + (residues * inv + h2 * inv * inv).sum(axis=1)
    return -1


def pr_deriv(poles, residues, h2, s, out, tol):
    lim = tol * (1.0 + np.abs(poles))
    for start in range(0, s.shape[0], _CHUNK):
        z = s[start:start + _CHUNK, None] - poles[None, :]
        hit = _first_hit(np.abs(z) <= lim)
        if hit >= 0:
            return start + hit
        inv = 1.0 / z
        inv2 = inv * inv
        out[start:start + _CHUNK] = -(residues * inv2 + 2.0 * h2 * inv2 * inv).sum(axis=1)
    return -1


def hess_eval(H, bh, ch, d, s, out, pivot_tol):
    # Same elimination as the compiled kernel, vectorised over a block of points.
    n = H.shape[0]
    chunk = max(1, min(_CHUNK, 2_000_000 // max(n * n, 1)))
    for start in range(0, s.shape[0], chunk):
        sb = s[start:start + chunk]
        m = sb.shape[0]
        M = np.broadcast_to(-H, (m, n, n)).copy()
        idx = np.arange(n)
        M[:, idx, idx] += sb[:, None]
        x = np.broadcast_to(bh, (m, n)).copy()
        thresh = pivot_tol * np.abs(M).sum(axis=2).max(axis=1)
        rows = np.arange(m)
        for col in range(n - 1):
            swap = np.abs(M[:, col + 1, col]) > np.abs(M[:, col, col])
            if swap.any():
                top = M[swap, col, col:].copy()
                M[swap, col, col:] = M[swap, col + 1, col:]
                M[swap, col + 1, col:] = top
                xt = x[swap, col].copy()
                x[swap, col] = x[swap, col + 1]
                x[swap, col + 1] = xt
            piv = M[:, col, col]
            bad = np.abs(piv) <= thresh
            if bad.any():
                return start + int(rows[bad][0])
            f = M[:, col + 1, col] / piv
            M[:, col + 1, col + 1:] -= f[:, None] * M[:, col, col + 1:]
            x[:, col + 1] -= f * x[:, col]
        if n > 0:
            bad = np.abs(M[:, n - 1, n - 1]) <= thresh
            if bad.any():
                return start + int(rows[bad][0])
        for r in range(n - 1, -1, -1):
            x[:, r] = (x[:, r] - np.einsum("kj,kj->k", M[:, r, r + 1:], x[:, r + 1:])) / M[:, r, r]
        out[start:start + m] = d + x @ ch
    return -1


def rk4(At, bt, c, d, u, umid, dt, x0, y):
    x = np.array(x0, dtype=float)
    steps = u.shape[0]
    for k in range(steps):
        y[k] = c @ x + d * u[k]
        if k == steps - 1:
            break
        k1 = At @ x + bt * u[k]
        k2 = At @ (x + 0.5 * dt * k1) + bt * umid[k]
        k3 = At @ (x + 0.5 * dt * k2) + bt * umid[k]
        k4 = At @ (x + dt * k3) + bt * u[k + 1]
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return None

"""Dense numerical kernels shared by the rest of the package.

Everything here is a pure function of its inputs. Matrices are plain NumPy
arrays; real matrices are simply the special case with zero imaginary part.
"""

import heapq
import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from .errors import (ConvergenceFailure, SingularE, SingularMatrix,
                     ToleranceNotMet, UnstablePencil)

__all__ = ["GenEigResult", "solve_complex", "check_nonsingular", "gen_eig",
           "lyap_solve", "quad_line"]

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-14
E_SINGULAR_TOL = 1e-12


def _lu(M):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spla.LinAlgWarning)
        return spla.lu_factor(M, check_finite=True)


def _min_pivot(lu):
    return np.abs(np.diag(lu[0])).min() if lu[0].size else np.inf


def solve_complex(M, rhs):
    """Solve ``M x = rhs`` by LU with partial pivoting.

    Raises
    ------
    SingularMatrix
        If a pivot magnitude falls below ``1e-14 * ||M||_inf``.
    """
    M = np.asarray(M)
    rhs = np.asarray(rhs)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"M must be square, got shape {M.shape}")
    if rhs.shape[0] != M.shape[0]:
        raise ValueError("rhs length does not match M")
    if M.shape[0] == 0:
        return np.zeros(rhs.shape, dtype=np.result_type(M, rhs, float))
    lu = _lu(M)
    norm = np.abs(M).sum(axis=1).max()
    if _min_pivot(lu) <= PIVOT_TOL * norm:
        raise SingularMatrix(f"pivot below {PIVOT_TOL:g}*||M||_inf (||M||_inf={norm:.3e})")
    return spla.lu_solve(lu, rhs, check_finite=False)


def check_nonsingular(E):
    """Raise :class:`SingularE` if the pivoted LU of ``E`` shows a tiny pivot."""
    E = np.asarray(E)
    if E.size == 0:
        return
    lu = _lu(E)
    norm = np.abs(E).sum(axis=1).max()
    if not norm or _min_pivot(lu) <= E_SINGULAR_TOL * norm:
        raise SingularE("E is numerically singular")


@dataclass(frozen=True)
class GenEigResult:
    """Eigenvalues and both eigenvector families of a pencil ``(A, E)``.

    Columns satisfy ``A x_i = lam_i E x_i`` and ``y_i^H A = lam_i y_i^H E``.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray


def gen_eig(A, E):
    """Solve the generalized eigenproblem of the pencil ``(A, E)``.

    ``E`` must be nonsingular, so every eigenvalue is finite.
    """
    A = np.asarray(A, dtype=float)
    E = np.asarray(E, dtype=float)
    if A.shape != E.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A and E must be square and of equal size")
    n = A.shape[0]
    if n == 0:
        empty = np.zeros((0, 0), dtype=complex)
        return GenEigResult(np.zeros(0, dtype=complex), empty, empty)
    check_nonsingular(E)
    try:
        lam, vl, vr = spla.eig(A, E, left=True, right=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    if not np.all(np.isfinite(lam)):
        raise ConvergenceFailure("non-finite eigenvalue for a nonsingular E")
    return GenEigResult(lam.astype(complex), vr.astype(complex), vl.astype(complex))


def lyap_solve(A, E, Q):
    """Solve ``A P E^T + E P A^T + Q = 0`` for symmetric ``P``.

    The pencil is reduced to ``E^{-1} A`` and handed to the Bartels-Stewart
    solver in SciPy, followed by up to two steps of iterative refinement on
    the residual of the generalized equation.
    """
    A = np.asarray(A, dtype=float)
    E = np.asarray(E, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    lam = gen_eig(A, E).eigenvalues
    if np.any(lam.real >= 0):
        raise UnstablePencil(f"max real part {lam.real.max():.3e} >= 0")
    lu = spla.lu_factor(E)
    At = spla.lu_solve(lu, A)

    def solve(R):
        Rt = spla.lu_solve(lu, spla.lu_solve(lu, R).T).T
        X = spla.solve_continuous_lyapunov(At, -Rt)
        return 0.5 * (X + X.T)

    P = solve(Q)
    qnorm = max(np.linalg.norm(Q), np.finfo(float).tiny)
    for _ in range(2):
        R = A @ P @ E.T + E @ P @ A.T + Q
        if np.linalg.norm(R) <= 1e-12 * qnorm:
            break
        P = P + solve(R)
    return 0.5 * (P + P.T)


# Gauss-Kronrod 7/15 rule on [-1, 1].
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970])
_WG = np.zeros(15)
_WG[1::2] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
             0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
             0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
             0.129484966168869693270611432679082]


def _gk_panels(g, a, b):
    """Apply the 7/15 rule to every panel ``[a_j, b_j]`` in one vectorised call."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _XK[None, :]
    fx = np.asarray(g(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise ToleranceNotMet("integrand returned a non-finite value")
    k = half * (fx @ _WK)
    gl = half * (fx @ _WG)
    rnd = half * (np.abs(fx) @ _WK)
    return k, np.abs(k - gl), rnd


def quad_line(f, tol=1e-10, breakpoints=(), max_evals=1_000_000, abs_tol=0.0,
              full_output=False):
    """Return ``(1/2pi) * integral of f over the real line``.

    The line is mapped onto ``(-pi/2, pi/2)`` through ``w = tan(theta)`` and
    the result is refined by global adaptive Gauss-Kronrod subdivision until
    the estimated error drops below ``tol`` relative to the running value.

    Parameters
    ----------
    f
        Vectorised integrand: takes a float array of frequencies and returns
        an array of the same shape.
    tol
        Relative tolerance.
    breakpoints
        Frequencies where the integrand varies sharply (e.g. resonance peaks);
        they become panel boundaries of the initial partition.
    max_evals
        Budget of integrand evaluations.
    abs_tol
        Absolute error floor on the returned value, for integrals that may
        cancel to zero.
    full_output
        Also return ``(error_estimate, evaluations)``.
    """
    def g(theta):
        c = np.cos(theta)
        return f(np.tan(theta)) / (c * c)

    edges = np.linspace(-0.5 * np.pi, 0.5 * np.pi, 17)
    if len(breakpoints):
        extra = np.arctan(np.asarray(breakpoints, dtype=float))
        edges = np.unique(np.concatenate([edges, extra, -extra]))
    a, b = edges[:-1], edges[1:]
    keep = b - a > 1e-14
    a, b = a[keep], b[keep]
    vals, errs, rnds = _gk_panels(g, a, b)
    evals = 15 * a.size
    heap = [(-e, i) for i, e in enumerate(errs)]
    heapq.heapify(heap)
    panels = {i: (a[i], b[i], vals[i], errs[i], rnds[i]) for i in range(a.size)}
    next_id = a.size
    total = vals.sum()
    err = errs.sum()
    rnd = rnds.sum()
    eps = np.finfo(float).eps
    while err > max(tol * abs(total), abs_tol * 2 * np.pi, 50 * eps * rnd):
        if evals + 30 * min(len(heap), 8) > max_evals:
            raise ToleranceNotMet(
                f"budget of {max_evals} evaluations exhausted "
                f"(value {total / (2 * np.pi):.6e}, error estimate {err / (2 * np.pi):.2e})")
        batch = [heapq.heappop(heap)[1] for _ in range(min(len(heap), 8))]
        lo, hi = [], []
        for pid in batch:
            pa, pb = panels[pid][:2]
            pm = 0.5 * (pa + pb)
            lo += [pa, pm]
            hi += [pm, pb]
        lo, hi = np.array(lo), np.array(hi)
        nv, ne, nr = _gk_panels(g, lo, hi)
        evals += 15 * lo.size
        for pid in batch:
            _, _, v, e, r = panels.pop(pid)
            total -= v
            err -= e
            rnd -= r
        for j in range(lo.size):
            panels[next_id] = (lo[j], hi[j], nv[j], ne[j], nr[j])
            heapq.heappush(heap, (-ne[j], next_id))
            next_id += 1
        # resum to stop drift in the running totals
        arr = np.array([p[2:] for p in panels.values()])
        total, err, rnd = arr.sum(axis=0)
    value = total / (2 * np.pi)
    if full_output:
        return value, err / (2 * np.pi), evals
    return value

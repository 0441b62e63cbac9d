"""Gramian-based baselines: H2 norm, balanced truncation, and output-weighted FWBT."""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.linalg as spla

from .errors import NotStrictlyProper, RankDeficientGramian
from .lti import StateSpace, as_prf, is_stable
from .numkit import lyap_solve

__all__ = ["GramianPair", "BalancedResult", "gramians", "h2_norm_gramian",
           "balanced_truncation", "fwbt", "cascade"]

logger = logging.getLogger(__name__)

PSD_TOL = 1e-10
RANK_TOL = 1e-14


@dataclass(frozen=True)
class GramianPair:
    """Controllability ``P`` and observability ``Q`` Gramians of a descriptor system.

    ``P`` solves ``A P E^T + E P A^T + b b^T = 0`` and ``Q`` solves
    ``A^T Q E + E^T Q A + c c^T = 0``, so that ``||G||_2^2 = c^T P c``.
    """

    P: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        for name in ("P", "Q"):
            M = getattr(self, name)
            if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(np.abs(M).max(initial=0), 1e-300)):
                raise ValueError(f"{name} is not symmetric")
            if M.size:
                ev = np.linalg.eigvalsh(M)
                if ev[0] < -PSD_TOL * max(abs(ev[-1]), 1e-300):
                    raise ValueError(f"{name} is not positive semidefinite (min eig {ev[0]:.3e})")


def gramians(sys):
    """Solve both Lyapunov equations of a stable descriptor system."""
    P = lyap_solve(sys.A, sys.E, np.outer(sys.b, sys.b))
    Q = lyap_solve(sys.A.T, sys.E.T, np.outer(sys.c, sys.c))
    return GramianPair(P, Q)


def h2_norm_gramian(sys):
    """Unweighted H2 norm ``sqrt(c^T P c)`` from the controllability Gramian."""
    if sys.d != 0:
        raise NotStrictlyProper("H2 norm requires d = 0")
    if sys.n == 0:
        return 0.0
    P = lyap_solve(sys.A, sys.E, np.outer(sys.b, sys.b))
    return float(np.sqrt(max(sys.c @ P @ sys.c, 0.0)))


@dataclass
class BalancedResult:
    reduced: StateSpace
    hankel_singular_values: np.ndarray
    stable: bool
    requested_order: int
    deflated: bool = False
    notes: list = field(default_factory=list)


def _psd_factor(M):
    """Return ``R`` with ``M = R R^T`` (eigen-factor, tolerant of semidefiniteness)."""
    lam, U = np.linalg.eigh(0.5 * (M + M.T))
    return U * np.sqrt(np.clip(lam, 0.0, None))


def _square_root(sys, P, Q, r, strict):
    R = _psd_factor(P)
    L = _psd_factor(Q)
    U, hsv, Zt = np.linalg.svd(L.T @ sys.E @ R)
    notes = []
    rank = int(np.sum(hsv > RANK_TOL * hsv[0])) if hsv.size and hsv[0] > 0 else 0
    k = min(r, rank)
    if k < r:
        msg = f"Gramian product has numerical rank {rank} < r={r}; truncating to {k}"
        if strict or k == 0:
            raise RankDeficientGramian(msg)
        logger.warning(msg)
        notes.append(msg)
    scale = 1.0 / np.sqrt(hsv[:k])
    T = (R @ Zt[:k].T) * scale
    Wl = (L @ U[:, :k]) * scale
    red = StateSpace(Wl.T @ sys.E @ T, Wl.T @ sys.A @ T, Wl.T @ sys.b, T.T @ sys.c, sys.d)
    return BalancedResult(red, hsv, bool(is_stable(red)), r, k < r, notes)


def balanced_truncation(sys, r, full_output=False, strict=False):
    """Square-root balanced truncation to order ``r``.

    Parameters
    ----------
    sys : StateSpace
        Stable system with nonsingular ``E``.
    r : int
        Target order, ``1 <= r <= n``.
    full_output : bool
        Return a :class:`BalancedResult` (Hankel singular values, stability
        flag, deflation notes) instead of the bare reduced system.
    strict : bool
        Raise :class:`RankDeficientGramian` instead of truncating to the
        numerical rank.
    """
    if not 1 <= r <= sys.n:
        raise ValueError(f"r must lie in [1, {sys.n}]")
    g = gramians(sys)
    res = _square_root(sys, g.P, g.Q, r, strict)
    return res if full_output else res.reduced


def cascade(G, W):
    """Realization of the series connection ``y = W(G u)`` (G first)."""
    if not isinstance(W, StateSpace):
        W = StateSpace.constant(float(np.real(as_prf(W).d))) if as_prf(W).n == 0 else None
        if W is None:
            raise TypeError("a dynamic weight must be given as a StateSpace")
    n, p = G.n, W.n
    E = spla.block_diag(G.E, W.E)
    A = np.zeros((n + p, n + p))
    A[:n, :n] = G.A
    A[n:, n:] = W.A
    A[n:, :n] = np.outer(W.b, G.c)
    b = np.concatenate([G.b, W.b * G.d])
    c = np.concatenate([W.d * G.c, W.c])
    return StateSpace(E, A, b, c, W.d * G.d)


def fwbt(G, W, r, full_output=False, strict=False):
    """Frequency-weighted balanced truncation with output weighting (Enns).

    The controllability Gramian is that of G; the observability Gramian is
    the leading ``n x n`` block of the observability Gramian of the cascade
    ``W G``. The reduced model is not guaranteed stable: check
    ``BalancedResult.stable`` (``full_output=True``) rather than expecting an
    exception.
    """
    if not 1 <= r <= G.n:
        raise ValueError(f"r must lie in [1, {G.n}]")
    C = cascade(G, W)
    P = lyap_solve(G.A, G.E, np.outer(G.b, G.b))
    Qc = lyap_solve(C.A.T, C.E.T, np.outer(C.c, C.c))
    Q = 0.5 * (Qc[:G.n, :G.n] + Qc[:G.n, :G.n].T)
    res = _square_root(G, P, Q, r, strict)
    if not res.stable:
        logger.warning("FWBT reduced model of order %d is unstable", r)
    return res if full_output else res.reduced

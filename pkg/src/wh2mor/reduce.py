"""Interpolatory Petrov-Galerkin reduction and the (weighted) IRKA iterations."""

from dataclasses import asdict, dataclass, field
import logging

import numpy as np
import scipy.linalg as spla

from .errors import (BasisMismatch, NotConverged, ShiftAtPole, SingularE,
                     SingularMatrix, SingularReducedE, TotalRankCollapse,
                     UnstableReducedPencil, Wh2Error)
from .lti import StateSpace, as_prf, tf_deriv, tf_eval
from .numkit import check_nonsingular, gen_eig, solve_complex

__all__ = [
    "ShiftSet", "ReductionBases", "DominantSelection", "WirkaConfig", "WirkaReport",
    "IrkaReport", "build_basis_V", "build_basis_W", "project", "interpolation_residuals",
    "hermite_residuals", "dominant_poles", "suggest_split", "wirka", "irka", "ss_difference",
]

logger = logging.getLogger(__name__)

TAGS = ("mirrored_G_pole", "mirrored_W_pole", "iterate")
DEFLATION_TOL = 1e-10
METRICS = ("residue_magnitude", "residue_over_real_part")


def _is_real_point(z):
    return abs(z.imag) <= 1e-12 * max(1.0, abs(z))


@dataclass(frozen=True)
class ShiftSet:
    """Conjugation-closed multiset of interpolation points with provenance tags."""

    points: np.ndarray
    provenance: tuple

    def __post_init__(self):
        pts = np.array(np.ravel(self.points), dtype=complex)
        tags = tuple(self.provenance)
        if len(tags) != pts.size:
            raise ValueError("one provenance tag per point is required")
        bad = set(tags) - set(TAGS)
        if bad:
            raise ValueError(f"unknown provenance tags {sorted(bad)}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "provenance", tags)
        self._check_closed()

    def _check_closed(self):
        scale = max(1.0, np.abs(self.points).max(initial=0.0))
        up = sorted((z for z in self.points if not _is_real_point(z) and z.imag > 0),
                    key=lambda z: (z.real, z.imag))
        down = sorted((z.conjugate() for z in self.points
                       if not _is_real_point(z) and z.imag < 0),
                      key=lambda z: (z.real, z.imag))
        if len(up) != len(down) or any(abs(a - b) > 1e-10 * scale for a, b in zip(up, down)):
            raise ValueError("shift set is not closed under conjugation")

    @classmethod
    def mirrored(cls, poles, tag):
        pts = -np.asarray(poles, dtype=complex)
        return cls(pts, (tag,) * pts.size)

    def __len__(self):
        return self.points.size

    def sorted_points(self):
        return self.points[np.lexsort((self.points.imag, self.points.real))]


@dataclass(frozen=True)
class ReductionBases:
    """Real ``n x r`` bases ``V`` (right) and ``W`` (left) of a projection."""

    V: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        for name in ("V", "W"):
            M = np.asarray(getattr(self, name))
            if not np.isrealobj(M):
                raise ValueError(f"{name} must be real")
            if M.ndim != 2:
                raise ValueError(f"{name} must be a matrix")
            sv = np.linalg.svd(M, compute_uv=False)
            if sv.size and sv[-1] <= DEFLATION_TOL * sv[0]:
                raise ValueError(f"{name} is rank deficient")
        if self.V.shape != self.W.shape:
            raise BasisMismatch(f"V{self.V.shape} and W{self.W.shape} differ in shape")


def _basis(sys, shifts, transpose, events):
    if not len(shifts):
        return np.zeros((sys.n, 0))
    M0 = sys.A.T if transpose else sys.A
    E0 = sys.E.T if transpose else sys.E
    rhs = (sys.c if transpose else sys.b).astype(complex)
    cols = []
    for z in shifts.points:
        if not _is_real_point(z) and z.imag < 0:
            continue  # its conjugate partner contributes both columns
        try:
            x = solve_complex(z * E0 - M0, rhs)
        except SingularMatrix as exc:
            raise ShiftAtPole(f"shift {z} is (numerically) a pole") from exc
        if _is_real_point(z):
            cols.append(x.real)
        else:
            cols += [x.real, x.imag]
    X = np.column_stack(cols)
    norms = np.linalg.norm(X, axis=0)
    if not np.any(norms > 0):
        raise TotalRankCollapse("every Krylov direction vanished")
    X = X[:, norms > 0] / norms[norms > 0]
    Q, R, _ = spla.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > DEFLATION_TOL * diag[0]))
    if rank == 0:
        raise TotalRankCollapse("every Krylov direction is dependent")
    if rank < len(shifts) and events is not None:
        events.append({"basis": "W" if transpose else "V", "requested": len(shifts),
                       "kept": rank, "shifts": [str(z) for z in shifts.points]})
    return Q[:, :rank]


def build_basis_V(sys, shifts, events=None):
    """Orthonormal real basis of ``span{(s_i E - A)^{-1} b}``.

    A conjugate pair costs one complex solve whose real and imaginary parts
    replace the two complex directions. Near-dependent columns are dropped
    (column-pivoted QR, drop tolerance ``1e-10``) and, if ``events`` is a
    list, recorded there.
    """
    return _basis(sys, shifts, False, events)


def build_basis_W(sys, shifts, events=None):
    """Orthonormal real basis of ``span{(s_i E - A)^{-T} c}``; see
    :func:`build_basis_V`."""
    return _basis(sys, shifts, True, events)


def project(sys, V, W=None):
    """Petrov-Galerkin reduction ``(W^T E V, W^T A V, W^T b, V^T c, d)``.

    ``V`` may also be a :class:`ReductionBases`.
    """
    if isinstance(V, ReductionBases):
        V, W = V.V, V.W
    if V.shape[1] != W.shape[1]:
        raise BasisMismatch(f"V has {V.shape[1]} columns, W has {W.shape[1]}")
    Er = W.T @ sys.E @ V
    try:
        check_nonsingular(Er)
    except SingularE as exc:
        raise SingularReducedE("W^T E V is singular") from exc
    # the LU test is scale-free; also compare against the size of the factors
    if Er.size:
        bound = np.linalg.norm(W, 2) * np.linalg.norm(sys.E, 2) * np.linalg.norm(V, 2)
        if np.linalg.svd(Er, compute_uv=False)[-1] <= 1e-12 * bound:
            raise SingularReducedE("W^T E V is singular relative to ||W|| ||E|| ||V||")
    return StateSpace(Er, W.T @ sys.A @ V, W.T @ sys.b, V.T @ sys.c, sys.d)


def interpolation_residuals(G, Gr, points):
    """``|G(s) - Gr(s)| / |G(s)|`` at each point (absolute if ``G(s) == 0``)."""
    out = []
    for z in np.ravel(points):
        a, b = tf_eval(G, complex(z)), tf_eval(Gr, complex(z))
        out.append(abs(a - b) / abs(a) if a else abs(a - b))
    return out


def hermite_residuals(G, Gr, points):
    """Relative derivative mismatch ``|G'(s) - Gr'(s)| / |G'(s)|``."""
    out = []
    for z in np.ravel(points):
        a, b = tf_deriv(G, complex(z)), tf_deriv(Gr, complex(z))
        out.append(abs(a - b) / abs(a) if a else abs(a - b))
    return out


def ss_difference(G, H):
    """State-space realization of ``G - H`` on the block-diagonal pencil."""
    return StateSpace(spla.block_diag(G.E, H.E), spla.block_diag(G.A, H.A),
                      np.concatenate([G.b, H.b]), np.concatenate([G.c, -H.c]), G.d - H.d)


# --- dominance ---------------------------------------------------------------

@dataclass(frozen=True)
class DominantSelection:
    poles: np.ndarray
    indices: tuple
    normalized: np.ndarray
    requested: int
    adjustment: int


def _modes(prf):
    """Group term indices into real poles and conjugate pairs (positive member first)."""
    p = prf.poles
    scale = max(1.0, np.abs(p).max(initial=0.0))
    used = np.zeros(p.size, dtype=bool)
    modes = []
    for i in range(p.size):
        if used[i]:
            continue
        used[i] = True
        if abs(p[i].imag) <= 1e-12 * scale:
            modes.append((i,))
            continue
        dist = np.abs(p - np.conj(p[i]))
        dist[used] = np.inf
        j = int(np.argmin(dist)) if (~used).any() else -1
        if j >= 0 and dist[j] <= 1e-9 * scale:
            used[j] = True
            modes.append((i, j) if p[i].imag > 0 else (j, i))
        else:
            modes.append((i,))
    return modes


def _metric(prf, metric):
    if metric == "residue_magnitude":
        return np.abs(prf.residues)
    if metric == "residue_over_real_part":
        return np.abs(prf.residues) / np.abs(prf.poles.real)
    raise ValueError(f"unknown dominance metric {metric!r}; expected one of {METRICS}")


def dominant_poles(prf, k, metric="residue_magnitude"):
    """Select the ``k`` most dominant poles, keeping conjugate pairs together.

    Modes are ranked by the metric (ties: smaller ``|pole|`` first) and taken
    until at least ``k`` poles are selected; a pair that straddles the limit
    is taken whole and the overshoot is reported as ``adjustment``.
    ``normalized`` is the per-pole metric sorted in decreasing order and
    divided by its maximum.
    """
    prf = as_prf(prf)
    if k > prf.n:
        raise ValueError(f"cannot select {k} poles out of {prf.n}")
    vals = _metric(prf, metric)
    modes = _modes(prf)
    ranked = sorted(modes, key=lambda m: (-vals[m[0]], abs(prf.poles[m[0]]), -prf.poles[m[0]].imag))
    picked = []
    for m in ranked:
        if len(picked) >= k:
            break
        picked.extend(m)
    order = sorted(range(prf.n), key=lambda i: (-vals[i], abs(prf.poles[i]), -prf.poles[i].imag))
    top = vals[order[0]] if prf.n else 1.0
    normalized = vals[order] / top if prf.n and top > 0 else vals[order]
    return DominantSelection(prf.poles[picked], tuple(picked), normalized, k, len(picked) - k)


def suggest_split(prf, r, metric="residue_magnitude"):
    """Heuristic ``nu``: position of the largest relative drop in the
    normalized residue sequence of G (restricted to the first ``r`` entries)."""
    phi = dominant_poles(prf, 0, metric).normalized[: r + 1]
    if phi.size < 2:
        return min(r, phi.size)
    with np.errstate(divide="ignore"):
        ratio = phi[1:] / phi[:-1]
    return int(np.argmin(ratio)) + 1


# --- W-IRKA --------------------------------------------------------------------

@dataclass(frozen=True)
class WirkaConfig:
    r: int
    nu: int
    varpi: int
    tol: float = 1e-6
    max_iter: int = 100
    dominance_metric: str = "residue_magnitude"
    unstable_shift_policy: str = "mirror"

    def __post_init__(self):
        if self.nu < 0 or self.varpi < 0:
            raise ValueError("nu and varpi must be nonnegative")
        if self.r != self.nu + self.varpi:
            raise ValueError(f"r={self.r} must equal nu+varpi={self.nu + self.varpi}")
        if self.r < 1:
            raise ValueError("r must be positive")
        if self.dominance_metric not in METRICS:
            raise ValueError(f"unknown dominance metric {self.dominance_metric!r}")
        if self.unstable_shift_policy not in ("mirror", "halt"):
            raise ValueError("unstable_shift_policy must be 'mirror' or 'halt'")


@dataclass
class WirkaReport:
    """Per-iteration record of a W-IRKA run.

    Error values are norms (not squares). ``sum2_terms`` are the reduced-pole
    contributions to the squared error expression, which vanish at a fixed
    point; ``error_method`` names the path that produced
    ``weighted_error_expr_value`` (see :func:`wh2mor.wh2.weighted_error`).
    """

    iterations: int = 0
    shift_history: list = field(default_factory=list)
    shift_changes: list = field(default_factory=list)
    converged: bool = False
    final_sigma_interp_residuals: list = field(default_factory=list)
    frozen_zeta_interp_residuals: list = field(default_factory=list)
    mirror_interp_residuals: list = field(default_factory=list)
    weighted_error_expr_value: float = float("nan")
    weighted_error_quad_value: float = float("nan")
    error_method: str = ""
    sum2_terms: list = field(default_factory=list)
    g_norm_w: float = float("nan")
    deflation_events: list = field(default_factory=list)
    unstable_events: list = field(default_factory=list)
    selection_adjustments: dict = field(default_factory=dict)
    zeta: ShiftSet = None
    r_effective: int = 0

    def to_dict(self):
        def conv(x):
            if isinstance(x, ShiftSet):
                return {"points": [[z.real, z.imag] for z in x.points],
                        "provenance": list(x.provenance)}
            if isinstance(x, (complex, np.complexfloating)):
                return [float(np.real(x)), float(np.imag(x))]
            if isinstance(x, (np.floating, np.integer)):
                return x.item()
            if isinstance(x, dict):
                return {k: conv(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [conv(v) for v in x]
            return x
        return {k: conv(v) for k, v in vars(self).items()}


def _next_shifts(lam, policy, it, events):
    sigma = -lam
    bad = lam.real >= 0
    if bad.any():
        if policy == "halt":
            return None
        # reflect the offending shifts into the right half-plane
        sigma = np.where(bad, np.conj(lam), sigma)
        events.append({"iteration": it, "poles": [str(z) for z in lam[bad]]})
    return sigma[np.lexsort((sigma.imag, sigma.real))]


def _rel_change(new, old):
    old_sorted = old[np.lexsort((old.imag, old.real))]
    if new.size != old_sorted.size:
        return np.inf
    return float(np.linalg.norm(new - old_sorted) / np.linalg.norm(old_sorted))


def wirka(G, W, config, compute_quad=True, quad_tol=1e-8, raise_on_failure=False,
          callback=None):
    """Weighted iterative rational Krylov reduction of ``G`` for weight ``W``.

    The left basis is built once from the mirrored ``nu`` dominant poles of G
    and ``varpi`` dominant poles of W and never changes; the right basis is
    rebuilt from the mirrored reduced poles until the shifts settle.

    ``callback(iteration, V, W, sigma)``, if given, sees the bases after the
    initial build (iteration 0) and after every update of ``V``.

    Returns
    -------
    reduced : StateSpace
    report : WirkaReport
    """
    if not isinstance(G, StateSpace):
        raise TypeError("G must be a StateSpace realization")
    if config.r > G.n:
        raise ValueError(f"r={config.r} exceeds n={G.n}")
    g, w = G.prf, as_prf(W)
    report = WirkaReport()

    sel_g = dominant_poles(g, config.nu, config.dominance_metric)
    varpi = max(config.r - len(sel_g.poles), 0) if config.varpi else 0
    if varpi > w.n:
        raise ValueError(f"varpi={varpi} exceeds the {w.n} poles of W")
    sel_w = dominant_poles(w, varpi, config.dominance_metric)
    report.selection_adjustments = {"nu": len(sel_g.poles) - config.nu,
                                    "varpi": len(sel_w.poles) - config.varpi}
    if any(report.selection_adjustments.values()):
        logger.info("dominant selection adjusted for conjugate pairs: %s",
                    report.selection_adjustments)
    zeta = ShiftSet(np.concatenate([-sel_g.poles, -sel_w.poles]),
                    ("mirrored_G_pole",) * len(sel_g.poles)
                    + ("mirrored_W_pole",) * len(sel_w.poles))
    report.zeta = zeta
    sigma = zeta
    Wb = build_basis_W(G, zeta, report.deflation_events)
    Wb.setflags(write=False)
    V = build_basis_V(G, sigma, report.deflation_events)
    r_eff = Wb.shape[1]
    report.r_effective = r_eff
    if V.shape[1] != r_eff:
        raise BasisMismatch(f"V has {V.shape[1]} columns, W has {r_eff}")
    report.shift_history.append(sigma)
    if callback is not None:
        callback(0, V, Wb, sigma)

    for it in range(1, config.max_iter + 1):
        Er = Wb.T @ G.E @ V
        Ar = Wb.T @ G.A @ V
        try:
            lam = gen_eig(Ar, Er).eigenvalues
        except SingularE as exc:
            raise SingularReducedE(f"W^T E V singular at iteration {it}") from exc
        new = _next_shifts(lam, config.unstable_shift_policy, it, report.unstable_events)
        if new is None:
            report.iterations = it
            raise UnstableReducedPencil(
                f"reduced pencil unstable at iteration {it}", project(G, V, Wb), report)
        change = _rel_change(new, sigma.points)
        sigma = ShiftSet(new, ("iterate",) * new.size)
        V = build_basis_V(G, sigma, report.deflation_events)
        if V.shape[1] != r_eff:
            raise BasisMismatch(f"iteration {it}: V deflated to {V.shape[1]} < {r_eff} columns")
        report.shift_history.append(sigma)
        report.shift_changes.append(change)
        report.iterations = it
        if callback is not None:
            callback(it, V, Wb, sigma)
        logger.debug("W-IRKA iteration %d: relative shift change %.3e", it, change)
        if change <= config.tol:
            report.converged = True
            break

    Gr = project(G, V, Wb)
    report.final_sigma_interp_residuals = interpolation_residuals(G, Gr, sigma.points)
    report.frozen_zeta_interp_residuals = interpolation_residuals(G, Gr, zeta.points)
    _fill_errors(report, G, Gr, W, compute_quad, quad_tol)
    if not report.converged:
        msg = f"W-IRKA did not converge in {config.max_iter} iterations"
        logger.warning(msg)
        if raise_on_failure:
            raise NotConverged(msg, Gr, report)
    return Gr, report


def _fill_errors(report, G, Gr, W, compute_quad, quad_tol):
    from .wh2 import weighted_error, weighted_error_expr, weighted_norm, weighted_norm_quad
    gr = Gr.prf
    try:
        report.mirror_interp_residuals = interpolation_residuals(G, Gr, -gr.poles)
    except Wh2Error:
        report.mirror_interp_residuals = []
    try:
        report.g_norm_w = weighted_norm(G, W)
    except Wh2Error:
        pass
    if gr.is_stable():
        try:
            eb = weighted_error_expr(G, Gr, W)
            report.weighted_error_expr_value = float(np.sqrt(max(eb.total, 0.0)))
            report.error_method = "expression"
            report.sum2_terms = [t for _, t in eb.sum2_terms]
        except Wh2Error:
            report.weighted_error_expr_value, report.error_method = weighted_error(G, Gr, W)
        if compute_quad:
            floor = (quad_tol * report.g_norm_w) ** 2 if np.isfinite(report.g_norm_w) else 0.0
            report.weighted_error_quad_value = weighted_norm_quad(
                ss_difference(G, Gr), W, tol=quad_tol, abs_tol=floor)
    else:
        report.error_method = "unstable"
        report.weighted_error_expr_value = float("inf")
        report.weighted_error_quad_value = float("inf")


# --- IRKA -------------------------------------------------------------------------

@dataclass
class IrkaReport:
    iterations: int = 0
    converged: bool = False
    shift_history: list = field(default_factory=list)
    shift_changes: list = field(default_factory=list)
    interp_residuals: list = field(default_factory=list)
    hermite_residuals: list = field(default_factory=list)
    mirror_value_residuals: list = field(default_factory=list)
    mirror_hermite_residuals: list = field(default_factory=list)
    deflation_events: list = field(default_factory=list)
    unstable_events: list = field(default_factory=list)

    def to_dict(self):
        out = asdict(self)
        out["shift_history"] = [[[z.real, z.imag] for z in s.points] for s in self.shift_history]
        return out


def _initial_irka_shifts(prf, r):
    sel = dominant_poles(prf, r, "residue_magnitude")
    pts = list(-sel.poles)
    if sel.adjustment > 0:
        # the last pair overshoots: replace it by one real shift at its mirrored real part
        pts = pts[:-2] + [complex(abs(sel.poles[-1].real))]
    return ShiftSet(pts, ("mirrored_G_pole",) * len(pts))


def irka(G, r, tol=1e-6, max_iter=100, unstable_shift_policy="mirror", raise_on_failure=False):
    """Unweighted IRKA: both bases follow the mirrored reduced poles (Hermite shifts)."""
    if not isinstance(G, StateSpace):
        raise TypeError("G must be a StateSpace realization")
    if r > G.n:
        raise ValueError(f"r={r} exceeds n={G.n}")
    report = IrkaReport()
    sigma = _initial_irka_shifts(G.prf, r)
    report.shift_history.append(sigma)

    def reduce_at(shifts):
        V = build_basis_V(G, shifts, report.deflation_events)
        Wb = build_basis_W(G, shifts, report.deflation_events)
        return project(G, V, Wb)

    Gr = reduce_at(sigma)
    for it in range(1, max_iter + 1):
        lam = gen_eig(Gr.A, Gr.E).eigenvalues
        new = _next_shifts(lam, unstable_shift_policy, it, report.unstable_events)
        if new is None:
            report.iterations = it
            raise UnstableReducedPencil(f"reduced pencil unstable at iteration {it}", Gr, report)
        change = _rel_change(new, sigma.points)
        sigma = ShiftSet(new, ("iterate",) * new.size)
        Gr = reduce_at(sigma)
        report.shift_history.append(sigma)
        report.shift_changes.append(change)
        report.iterations = it
        if change <= tol:
            report.converged = True
            break
    report.interp_residuals = interpolation_residuals(G, Gr, sigma.points)
    report.hermite_residuals = hermite_residuals(G, Gr, sigma.points)
    try:
        mirrors = -Gr.prf.poles
        report.mirror_value_residuals = interpolation_residuals(G, Gr, mirrors)
        report.mirror_hermite_residuals = hermite_residuals(G, Gr, mirrors)
    except Wh2Error:
        pass
    if not report.converged:
        msg = f"IRKA did not converge in {max_iter} iterations"
        logger.warning(msg)
        if raise_on_failure:
            raise NotConverged(msg, Gr, report)
    return Gr, report

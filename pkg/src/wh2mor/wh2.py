"""Weighted-H2 inner products, norms and optimality quantities by residues.

For transfer functions ``G, H`` in H2 and a weight ``W`` in H-infinity,

    <G, H>_W = (1/2pi) * int conj(G(iw) W(iw)) W(iw) H(iw) dw

is evaluated as a finite sum over the poles of ``H`` and of ``W``. The
quadrature routines at the bottom of the module evaluate the same integrals
directly on the imaginary axis and share nothing with the residue path.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (CommonPoles, NegativeRadicand, NonSimplePoles,
                     NonSimpleWeightPoles, NotStrictlyProper, UnstablePencil,
                     Wh2Error)
from .lti import PoleResidueForm, StateSpace, as_prf, difference, freq_response
from .numkit import quad_line

__all__ = [
    "InnerProductBreakdown", "NormBreakdown", "ErrorBreakdown", "OptimalityResidual",
    "check_disjoint", "weighted_inner", "weighted_norm", "f_map_eval", "f_map_deriv",
    "f_map_residues", "weighted_error_expr", "weighted_error", "weighted_norm_quad",
    "weighted_inner_quad", "optimality_residuals",
]

CLASH_TOL = 1e-8
LEAK_TOL = 1e-10
REMOVABLE_RADIUS = 1e-4


@dataclass(frozen=True)
class InnerProductBreakdown:
    """Value of ``<G, H>_W`` with its per-pole contributions."""

    value: complex
    h_pole_terms: list
    w_pole_terms: list
    branch_tags: list

    @property
    def total_of_terms(self):
        return sum(t for _, t in self.h_pole_terms) + sum(t for _, t in self.w_pole_terms)


@dataclass(frozen=True)
class NormBreakdown:
    value: float
    radicand: float
    g_pole_terms: list
    w_pole_terms: list


@dataclass(frozen=True)
class ErrorBreakdown:
    """Squared weighted error split into the three pole families.

    ``sum1_terms`` belong to the poles of G, ``sum2_terms`` to the reduced
    poles and ``sum3_terms`` to the weight poles; each entry is
    ``(pole, contribution)``.
    """

    total: float
    sum1_terms: list
    sum2_terms: list
    sum3_terms: list

    @property
    def sums(self):
        return tuple(float(np.real(sum(t for _, t in terms)))
                     for terms in (self.sum1_terms, self.sum2_terms, self.sum3_terms))


@dataclass(frozen=True)
class OptimalityResidual:
    pole: complex
    f_abs: float
    df_abs: float
    f_rel: float
    df_rel: float
    f_scale: float = field(default=0.0)
    df_scale: float = field(default=0.0)


def _pole_scale(*prfs):
    m = max((np.abs(p.poles).max(initial=0.0) for p in prfs), default=0.0)
    return m if m > 0 else 1.0


def check_disjoint(a, b, name_a="H", name_b="W"):
    """Raise :class:`CommonPoles` if any pole of ``a`` is within
    ``1e-8 * max|pole|`` of a pole of ``b``."""
    if not a.n or not b.n:
        return
    tol = CLASH_TOL * _pole_scale(a, b)
    dist = np.abs(a.poles[:, None] - b.poles[None, :])
    if dist.min() <= tol:
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        raise CommonPoles(
            f"pole {a.poles[i]:.6g} of {name_a} coincides with pole {b.poles[j]:.6g} of {name_b}")


def _strictly_proper(p, name):
    if p.d != 0:
        raise NotStrictlyProper(f"{name} must be strictly proper (d = {p.d})")


def _stable(p, name):
    if not p.is_stable():
        raise UnstablePencil(f"{name} must be stable")


def _simple(p, name, exc=NonSimplePoles):
    if p.has_double_poles:
        raise exc(f"{name} must have simple poles")


def _ev(p, s):
    return freq_response(p, s)


def _dv(p, s):
    from .lti import tf_deriv
    return np.asarray(tf_deriv(p, np.asarray(s, dtype=complex)))


def _product_deriv(g, w, s):
    """d/ds [G(s) W(s) W(-s)]."""
    s = np.asarray(s, dtype=complex)
    G, Gd = _ev(g, s), _dv(g, s)
    Wp, Wpd = _ev(w, s), _dv(w, s)
    Wm, Wmd = _ev(w, -s), _dv(w, -s)
    return Gd * Wp * Wm + G * Wpd * Wm - G * Wp * Wmd


def _real_checked(value, scale, what):
    if abs(value.imag) > LEAK_TOL * max(scale, abs(value), 1e-300):
        raise Wh2Error(f"{what}: imaginary leakage {value.imag:.3e} exceeds "
                       f"{LEAK_TOL:g} x scale {scale:.3e}")
    return float(value.real)


def weighted_inner(G, H, W=1.0):
    """Weighted inner product ``<G, H>_W`` by residue calculus.

    ``H`` may carry explicit double-pole terms (``h2`` coefficients); each
    such pole contributes the extra ``-h_{-2} d/ds[G W W(-.)]`` term at the
    mirrored pole.
    """
    g, h, w = as_prf(G), as_prf(H), as_prf(W)
    _strictly_proper(g, "G")
    _strictly_proper(h, "H")
    _stable(g, "G")
    _stable(h, "H")
    _stable(w, "W")
    _simple(w, "W", NonSimpleWeightPoles)
    check_disjoint(h, w, "H", "W")

    mu = h.poles
    chi = _ev(g, -mu) * _ev(w, -mu) * _ev(w, mu) * h.residues
    tags = ["simple"] * mu.size
    dbl = np.flatnonzero(h.h2 != 0)
    if dbl.size:
        chi[dbl] -= h.h2[dbl] * _product_deriv(g, w, -mu[dbl])
        for k in dbl:
            tags[k] = "double"
    gam = w.poles
    wt = _ev(g, -gam) * _ev(w, -gam) * _ev(h, gam) * w.residues
    value = complex(chi.sum() + wt.sum())
    return InnerProductBreakdown(value, list(zip(mu, chi)), list(zip(gam, wt)), tags)


def weighted_norm(G, W=1.0, full_output=False):
    """Weighted-H2 norm ``||G W||_H2`` from the poles and residues of G and W."""
    g, w = as_prf(G), as_prf(W)
    _strictly_proper(g, "G")
    _simple(g, "G")
    _simple(w, "W", NonSimpleWeightPoles)
    _stable(g, "G")
    _stable(w, "W")
    check_disjoint(g, w, "G", "W")
    lam = g.poles
    t1 = _ev(g, -lam) * _ev(w, -lam) * _ev(w, lam) * g.residues
    gam = w.poles
    t2 = _ev(g, -gam) * _ev(w, -gam) * _ev(g, gam) * w.residues
    rad = complex(t1.sum() + t2.sum())
    scale = float(np.abs(t1).sum() + np.abs(t2).sum())
    radicand = _real_checked(rad, scale, "weighted_norm")
    if radicand < -LEAK_TOL * scale:
        raise NegativeRadicand(f"radicand {radicand:.3e} is negative beyond roundoff")
    value = float(np.sqrt(max(radicand, 0.0)))
    if full_output:
        return NormBreakdown(value, radicand, list(zip(lam, t1)), list(zip(gam, t2)))
    return value


# --- the F map -------------------------------------------------------------

def _divdiff(p, s, a):
    """``(f(s) - f(a)) / (s - a)`` for a pole-residue ``f``, free of cancellation."""
    zs = s[:, None] - p.poles[None, :]
    za = a[:, None] - p.poles[None, :]
    simple = -(p.residues / (zs * za)).sum(axis=1)
    if p.has_double_poles:
        simple = simple - (p.h2 * (zs + za) / (zs * zs * za * za)).sum(axis=1)
    return simple


def _divdiff_ds(p, s, a):
    """``d/ds (f(s) - f(a)) / (s - a)``."""
    zs = s[:, None] - p.poles[None, :]
    za = a[:, None] - p.poles[None, :]
    out = (p.residues / (zs * zs * za)).sum(axis=1)
    if p.has_double_poles:
        out = out + (p.h2 * (zs + 2 * za) / (zs ** 3 * za * za)).sum(axis=1)
    return out


def _near_mirrored_weight_pole(w, s):
    if not w.n:
        return np.zeros(s.shape, dtype=bool)
    a = -w.poles
    radius = REMOVABLE_RADIUS * np.maximum(1.0, np.abs(a))
    return (np.abs(s[:, None] - a[None, :]) < radius[None, :]).any(axis=1)


def _f_coeffs(g, w):
    gam = w.poles
    return _ev(g, -gam) * _ev(w, -gam) * w.residues


def _f_direct(g, w, s, coef):
    val = _ev(g, s) * _ev(w, s) * _ev(w, -s)
    if w.n:
        val = val + (coef[None, :] / (s[:, None] + w.poles[None, :])).sum(axis=1)
    return val


def _f_removable(g, w, s):
    # F(s) = d_W G(s)W(s) - sum_k psi_k (GW)[s, -gamma_k]
    a_all = -w.poles
    Gs, Ws = _ev(g, s), _ev(w, s)
    val = w.d * Gs * Ws
    for a, psi in zip(a_all, w.residues):
        av = np.full(s.shape, a)
        dd = _divdiff(g, s, av) * Ws + complex(_ev(g, a)) * _divdiff(w, s, av)
        val = val - psi * dd
    return val


def _fd_direct(g, w, s, coef):
    val = _product_deriv(g, w, s)
    if w.n:
        val = val - (coef[None, :] / (s[:, None] + w.poles[None, :]) ** 2).sum(axis=1)
    return val


def _fd_removable(g, w, s):
    a_all = -w.poles
    Gs, Ws = _ev(g, s), _ev(w, s)
    Gd, Wd = _dv(g, s), _dv(w, s)
    val = w.d * (Gd * Ws + Gs * Wd)
    for a, psi in zip(a_all, w.residues):
        av = np.full(s.shape, a)
        ddd = (_divdiff_ds(g, s, av) * Ws + _divdiff(g, s, av) * Wd
               + complex(_ev(g, a)) * _divdiff_ds(w, s, av))
        val = val - psi * ddd
    return val


def _f_dispatch(G, W, s, direct, which):
    g, w = as_prf(G), as_prf(W)
    _simple(w, "W", NonSimpleWeightPoles)
    pts = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
    coef = _f_coeffs(g, w)
    near = np.zeros(pts.shape, dtype=bool) if direct else _near_mirrored_weight_pole(w, pts)
    out = np.empty(pts.shape, dtype=complex)
    far_fn, near_fn = ((_f_direct, _f_removable) if which == "f"
                       else (_fd_direct, _fd_removable))
    if (~near).any():
        out[~near] = far_fn(g, w, pts[~near], coef)
    if near.any():
        out[near] = near_fn(g, w, pts[near])
    return out.reshape(np.shape(s)) if np.ndim(s) else complex(out[0])


def f_map_eval(G, W, s, direct=False):
    """``F(s) = G(s)W(s)W(-s) + sum_k G(-g_k)W(-g_k) res[W, g_k] / (s + g_k)``.

    Within ``1e-4 * max(1, |g_k|)`` of a mirrored weight pole ``-g_k`` the
    cancelling singular pair is rewritten through exact divided differences
    of ``G W``, which also yields the finite limit at ``-g_k`` itself.
    ``direct=True`` forces the plain formula everywhere.
    """
    return _f_dispatch(G, W, s, direct, "f")


def f_map_deriv(G, W, s, direct=False):
    """Analytic derivative ``F'(s)``; same removable-point handling as
    :func:`f_map_eval`."""
    return _f_dispatch(G, W, s, direct, "df")


def f_map_residues(G, W, radius=1e-5):
    """Numerical residue of ``F`` at each mirrored weight pole.

    ``(s + g_k) F(s)`` is evaluated with the direct formula at four points
    ``-g_k + h e^{i theta}``, ``theta`` in {0, pi/2, pi, 3pi/2}; their mean
    cancels the linear term and leaves the residue up to ``O(h^2)``.
    Returns ``[(-g_k, residue_estimate, term_scale), ...]`` where
    ``term_scale`` is the size of the cancelling singular coefficient.
    """
    g, w = as_prf(G), as_prf(W)
    coef = _f_coeffs(g, w)
    dirs = np.exp(0.5j * np.pi * np.arange(4))
    out = []
    for gam, c in zip(w.poles, coef):
        h = radius * max(1.0, abs(gam))
        s = -gam + h * dirs
        vals = (s + gam) * f_map_eval(g, w, s, direct=True)
        out.append((-gam, complex(vals.mean()), abs(c)))
    return out


# --- error expression --------------------------------------------------------

def weighted_error_expr(G, Gr, W=1.0):
    """Squared weighted error ``||G - Gr||_W^2`` as three pole sums.

    Requires G, Gr and W pairwise pole-disjoint.
    """
    g, gr, w = as_prf(G), as_prf(Gr), as_prf(W)
    for p, name in ((g, "G"), (gr, "G_r")):
        _strictly_proper(p, name)
        _simple(p, name)
        _stable(p, name)
    _simple(w, "W", NonSimpleWeightPoles)
    _stable(w, "W")
    check_disjoint(g, gr, "G", "G_r")
    check_disjoint(g, w, "G", "W")
    check_disjoint(gr, w, "G_r", "W")

    def e(s):
        return _ev(g, s) - _ev(gr, s)

    lam, lh, gam = g.poles, gr.poles, w.poles
    t1 = e(-lam) * _ev(w, -lam) * _ev(w, lam) * g.residues
    t2 = -e(-lh) * _ev(w, -lh) * _ev(w, lh) * gr.residues
    t3 = e(-gam) * _ev(w, -gam) * e(gam) * w.residues
    tot = complex(t1.sum() + t2.sum() + t3.sum())
    scale = float(np.abs(t1).sum() + np.abs(t2).sum() + np.abs(t3).sum())
    total = _real_checked(tot, scale, "weighted_error_expr")
    if total < -LEAK_TOL * scale:
        raise NegativeRadicand(f"error expression {total:.3e} is negative beyond roundoff")
    return ErrorBreakdown(total, list(zip(lam, t1)), list(zip(lh, t2)), list(zip(gam, t3)))


def weighted_error(G, Gr, W=1.0, tol=1e-10):
    """Weighted error norm with fallbacks.

    Returns ``(value, method)``: the three-sum expression when the poles are
    disjoint, otherwise the residue norm of the difference system, otherwise
    quadrature. ``method`` names the path used.
    """
    try:
        return float(np.sqrt(max(weighted_error_expr(G, Gr, W).total, 0.0))), "expression"
    except (CommonPoles, NonSimplePoles):
        pass
    try:
        return weighted_norm(difference(G, Gr), W), "difference"
    except (CommonPoles, NonSimplePoles):
        pass
    return weighted_norm_quad(difference(G, Gr), W, tol=tol), "quadrature"


# --- quadrature oracle -------------------------------------------------------

def _breakpoints(*systems):
    pts = []
    for sys in systems:
        if isinstance(sys, StateSpace) and sys.n:
            lam = np.linalg.eigvals(np.linalg.solve(sys.E, sys.A))
        elif isinstance(sys, PoleResidueForm):
            lam = sys.poles
        else:
            continue
        pts.extend(np.abs(lam.imag[lam.imag != 0]).tolist())
    return pts


def weighted_norm_quad(G, W=1.0, tol=1e-10, abs_tol=0.0):
    """``sqrt((1/2pi) int |G(iw) W(iw)|^2 dw)`` by adaptive quadrature.

    ``abs_tol`` is an absolute error floor on the squared norm; set it when
    the norm may be (nearly) zero, e.g. the error of an exact reduction.
    """
    for p, name in ((G, "G"), (W, "W")):
        if isinstance(p, PoleResidueForm) and not p.is_stable():
            raise UnstablePencil(f"{name} must be stable")

    def integrand(omega):
        s = 1j * omega
        return np.abs(freq_response(G, s) * freq_response(W, s)) ** 2

    return float(np.sqrt(quad_line(integrand, tol=tol, breakpoints=_breakpoints(G, W),
                                   abs_tol=abs_tol)))


def weighted_inner_quad(G, H, W=1.0, tol=1e-10):
    """``<G, H>_W`` by quadrature of its defining integral (complex result)."""
    bps = _breakpoints(G, H, W)

    def prod(omega):
        s = 1j * omega
        ws = freq_response(W, s)
        return np.conj(freq_response(G, s) * ws) * ws * freq_response(H, s)

    scale = quad_line(lambda om: np.abs(prod(om)), tol=1e-6, breakpoints=bps)
    floor = tol * scale
    re = quad_line(lambda om: prod(om).real, tol=tol, breakpoints=bps, abs_tol=floor)
    im = quad_line(lambda om: prod(om).imag, tol=tol, breakpoints=bps, abs_tol=floor)
    return complex(re, im)


def optimality_residuals(G, Gr, W=1.0):
    """Mismatch of ``F`` and ``F'`` against ``F_r``, ``F_r'`` at ``-pole`` for
    every reduced pole; both absolute and relative values are reported."""
    gr = as_prf(Gr)
    _simple(gr, "G_r")
    _stable(gr, "G_r")
    pts = -gr.poles
    F = np.atleast_1d(f_map_eval(G, W, pts))
    Fr = np.atleast_1d(f_map_eval(gr, W, pts))
    dF = np.atleast_1d(f_map_deriv(G, W, pts))
    dFr = np.atleast_1d(f_map_deriv(gr, W, pts))
    out = []
    for k, lam in enumerate(gr.poles):
        fa, da = abs(F[k] - Fr[k]), abs(dF[k] - dFr[k])
        fs, ds = abs(F[k]), abs(dF[k])
        out.append(OptimalityResidual(complex(lam), fa, da,
                                      fa / fs if fs else fa, da / ds if ds else da, fs, ds))
    return out

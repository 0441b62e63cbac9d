"""SISO LTI systems in descriptor state-space and pole-residue form.

A *system handle* accepted by most functions is a :class:`StateSpace`, a
:class:`PoleResidueForm` or a plain number (a constant transfer function).
"""

from dataclasses import dataclass, field
from functools import cached_property
import io
import math
from numbers import Number

import numpy as np
import scipy.linalg as spla

from . import kernels
from .errors import (ConjugationViolation, EvalAtPole, IllPosedLoop,
                     InvalidRange, NonSimplePoles, NotStrictlyProper,
                     SingularMatrix, StepTooLarge, UnstablePencil,
                     UnsupportedMultiplicity)
from .numkit import check_nonsingular, gen_eig, solve_complex

__all__ = [
    "StateSpace", "PoleResidueForm", "SystemPair", "as_prf", "tf_eval", "tf_deriv",
    "freq_response", "pole_residue", "from_pole_residue", "is_stable", "poles",
    "feedback_connect", "weight_from_loop", "make_modal_benchmark", "random_system",
    "difference", "simulate", "impulse_response", "dumps", "loads", "save", "load",
]

SEPARATION_TOL = 1e-8
EVAL_POLE_TOL = 1e-12
MERGE_TOL = 1e-11


def _frozen(x, dtype=float, ndim=None):
    arr = np.array(x, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Real descriptor realization ``E x' = A x + b u``, ``y = c^T x + d u``.

    ``E`` must be nonsingular. ``n == 0`` is allowed and denotes the constant
    transfer function ``d``.
    """

    E: np.ndarray
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float = 0.0

    def __post_init__(self):
        E = _frozen(self.E, ndim=2)
        A = _frozen(self.A, ndim=2)
        b = _frozen(np.ravel(self.b))
        c = _frozen(np.ravel(self.c))
        n = A.shape[0]
        if A.shape != (n, n) or E.shape != (n, n) or b.shape != (n,) or c.shape != (n,):
            raise ValueError(f"inconsistent dimensions E{E.shape} A{A.shape} b{b.shape} c{c.shape}")
        d = float(self.d)
        if not all(np.all(np.isfinite(x)) for x in (E, A, b, c)) or not math.isfinite(d):
            raise ValueError("non-finite entries in realization")
        check_nonsingular(E)
        for name, val in (("E", E), ("A", A), ("b", b), ("c", c), ("d", d)):
            object.__setattr__(self, name, val)

    @classmethod
    def from_abcd(cls, A, b, c, d=0.0, E=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if E is None:
            E = np.eye(A.shape[0])
        return cls(np.atleast_2d(E), A, b, c, d)

    @classmethod
    def constant(cls, d):
        z = np.zeros((0, 0))
        return cls(z, z, np.zeros(0), np.zeros(0), d)

    @property
    def n(self):
        return self.A.shape[0]

    @cached_property
    def prf(self):
        return pole_residue(self)

    @cached_property
    def _hessenberg(self):
        lu = spla.lu_factor(self.E)
        At = spla.lu_solve(lu, self.A)
        bt = spla.lu_solve(lu, self.b)
        H, Q = spla.hessenberg(At, calc_q=True)
        return (np.ascontiguousarray(H, dtype=complex),
                np.ascontiguousarray(Q.T @ bt, dtype=complex),
                np.ascontiguousarray(Q.T @ self.c, dtype=complex))

    def __call__(self, s):
        return tf_eval(self, s)

    def __repr__(self):
        return f"StateSpace(n={self.n}, d={self.d:g})"


@dataclass(frozen=True, eq=False)
class PoleResidueForm:
    """Partial-fraction form ``d + sum r_i/(s-p_i) + sum h_i/(s-p_i)**2``.

    ``h2`` holds second-order coefficients; it is all zero for systems with
    simple poles and is only nonzero for explicitly constructed double-pole
    operands such as ``1/(s-mu)**2``. Listed poles must be pairwise separated
    by more than ``1e-8 * max|pole|``.
    """

    poles: np.ndarray
    residues: np.ndarray
    d: complex = 0.0
    h2: np.ndarray = field(default=None)

    def __post_init__(self):
        p = _frozen(np.ravel(self.poles), complex)
        r = _frozen(np.ravel(self.residues), complex)
        h = _frozen(np.zeros_like(p) if self.h2 is None else np.ravel(self.h2), complex)
        if p.shape != r.shape or p.shape != h.shape:
            raise ValueError("poles, residues and h2 must have equal length")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(r)) and np.all(np.isfinite(h))):
            raise ValueError("non-finite pole or residue")
        d = complex(self.d)
        if d.imag == 0:
            d = d.real
        object.__setattr__(self, "poles", p)
        object.__setattr__(self, "residues", r)
        object.__setattr__(self, "h2", h)
        object.__setattr__(self, "d", d)
        _check_separation(p)

    @classmethod
    def constant(cls, d):
        return cls(np.zeros(0), np.zeros(0), d)

    @classmethod
    def double_pole(cls, mu, h=1.0, residue=0.0):
        """``residue/(s-mu) + h/(s-mu)**2``."""
        return cls([mu], [residue], 0.0, [h])

    @classmethod
    def from_principal_parts(cls, parts, d=0.0):
        """Build from ``[(pole, [c1, c2, ...]), ...]`` with ``c_k`` the
        coefficient of ``1/(s-pole)**k``. Orders above two are rejected."""
        ps, rs, hs = [], [], []
        for pole, coeffs in parts:
            coeffs = list(coeffs)
            if len(coeffs) > 2 and any(c != 0 for c in coeffs[2:]):
                raise UnsupportedMultiplicity(f"pole {pole} has order {len(coeffs)} > 2")
            coeffs += [0.0] * (2 - len(coeffs))
            ps.append(pole)
            rs.append(coeffs[0])
            hs.append(coeffs[1])
        return cls(ps, rs, d, hs)

    @property
    def n(self):
        return self.poles.size

    @property
    def terms(self):
        return list(zip(self.poles, self.residues))

    @property
    def has_double_poles(self):
        return bool(np.any(self.h2 != 0))

    def is_stable(self):
        if not self.n:
            return True
        return bool(np.all(self.poles.real < -1e-12 * np.abs(self.poles).max()))

    def is_real(self, tol=1e-9):
        """Whether the term list is closed under conjugation (to ``tol``)."""
        if isinstance(self.d, complex) and self.d.imag != 0:
            return False
        if self.has_double_poles:
            return _conj_closed(self.poles, self.h2, tol) and _conj_closed(self.poles, self.residues, tol)
        return _conj_closed(self.poles, self.residues, tol)

    def __call__(self, s):
        return tf_eval(self, s)

    def __repr__(self):
        return f"PoleResidueForm(n={self.n}, d={self.d})"


def _conj_closed(p, r, tol):
    scale = max(np.abs(p).max(initial=0.0), 1.0)
    rscale = max(np.abs(r).max(initial=0.0), 1e-300)
    used = np.zeros(p.size, dtype=bool)
    for i in range(p.size):
        if used[i]:
            continue
        dist = np.abs(p - np.conj(p[i]))
        dist[used] = np.inf
        if abs(p[i].imag) > tol * scale:
            dist[i] = np.inf
        j = int(np.argmin(dist))
        if dist[j] > tol * scale or abs(r[j] - np.conj(r[i])) > tol * rscale:
            return False
        used[i] = used[j] = True
    return True


def _check_separation(p):
    if p.size < 2:
        return
    scale = np.abs(p).max()
    tol = SEPARATION_TOL * (scale if scale > 0 else 1.0)
    dist = np.abs(p[:, None] - p[None, :])
    np.fill_diagonal(dist, np.inf)
    if dist.min() <= tol:
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        cluster = p[dist[i] <= tol].tolist() + [p[i]]
        raise NonSimplePoles(
            f"poles {p[i]:.6g} and {p[j]:.6g} closer than {tol:.2e}", cluster)


@dataclass(frozen=True)
class SystemPair:
    """A system ``G`` and a weight ``W`` checked for the weighted-H2 setting."""

    G: object
    W: object

    def __post_init__(self):
        from .wh2 import check_disjoint
        g, w = as_prf(self.G), as_prf(self.W)
        if g.d != 0:
            raise NotStrictlyProper("G must be strictly proper")
        if not (g.is_stable() and w.is_stable()):
            raise UnstablePencil("G and W must be stable")
        check_disjoint(g, w, "G", "W")


def as_prf(sys):
    """Pole-residue view of any system handle (cached for state-space)."""
    if isinstance(sys, PoleResidueForm):
        return sys
    if isinstance(sys, StateSpace):
        return sys.prf
    if isinstance(sys, Number):
        return PoleResidueForm.constant(sys)
    raise TypeError(f"not a system handle: {type(sys).__name__}")


def _as_array(s):
    arr = np.asarray(s, dtype=complex)
    return np.ascontiguousarray(arr.ravel()), arr.shape


def freq_response(sys, s):
    """Evaluate the transfer function at an array of points (compiled path)."""
    pts, shape = _as_array(s)
    out = np.empty(pts.shape, dtype=complex)
    if isinstance(sys, Number):
        out[:] = sys
        return out.reshape(shape)
    if isinstance(sys, PoleResidueForm):
        hit = kernels.pr_eval(sys.poles, sys.residues, sys.h2, complex(sys.d), pts, out,
                              EVAL_POLE_TOL)
    elif isinstance(sys, StateSpace):
        if sys.n == 0:
            out[:] = sys.d
            return out.reshape(shape)
        H, bh, ch = sys._hessenberg
        hit = kernels.hess_eval(H, bh, ch, complex(sys.d), pts, out, 1e-14)
    else:
        raise TypeError(f"not a system handle: {type(sys).__name__}")
    if hit >= 0:
        raise EvalAtPole(f"s = {pts[hit]} is (numerically) a pole")
    return out.reshape(shape)


def tf_eval(sys, s):
    """Transfer function value ``G(s)``; scalars in, scalar out."""
    if np.ndim(s) or not isinstance(sys, StateSpace):
        val = freq_response(sys, s)
        return val if np.ndim(s) else complex(val)
    if sys.n == 0:
        return complex(sys.d)
    try:
        x = solve_complex(s * sys.E - sys.A, sys.b.astype(complex))
    except SingularMatrix as exc:
        raise EvalAtPole(f"s = {s} is (numerically) a pole") from exc
    return complex(sys.c @ x + sys.d)


def tf_deriv(sys, s):
    """Derivative ``G'(s)``."""
    if isinstance(sys, Number):
        return np.zeros(np.shape(s), dtype=complex) if np.ndim(s) else 0j
    if isinstance(sys, PoleResidueForm):
        pts, shape = _as_array(s)
        out = np.empty(pts.shape, dtype=complex)
        hit = kernels.pr_deriv(sys.poles, sys.residues, sys.h2, pts, out, EVAL_POLE_TOL)
        if hit >= 0:
            raise EvalAtPole(f"s = {pts[hit]} is (numerically) a pole")
        return out.reshape(shape) if np.ndim(s) else complex(out[0])
    if np.ndim(s):
        return np.array([tf_deriv(sys, z) for z in np.ravel(s)]).reshape(np.shape(s))
    if sys.n == 0:
        return 0j
    M = s * sys.E - sys.A
    try:
        x = solve_complex(M, sys.b.astype(complex))
        z = solve_complex(M.T, sys.c.astype(complex))
    except SingularMatrix as exc:
        raise EvalAtPole(f"s = {s} is (numerically) a pole") from exc
    return complex(-(z @ (sys.E @ x)))


def _pair_conjugates(lam, res):
    """Make conjugate eigenvalue pairs exact and order terms deterministically."""
    lam = lam.copy()
    res = res.copy()
    scale = max(np.abs(lam).max(initial=0.0), 1.0)
    real = np.abs(lam.imag) <= 1e-13 * scale
    lam[real] = lam[real].real
    res[real] = res[real].real
    pos = np.flatnonzero((lam.imag > 0) & ~real)
    neg = list(np.flatnonzero((lam.imag < 0) & ~real))
    if len(pos) != len(neg):
        raise ConjugationViolation("eigenvalues of a real pencil are not conjugation-closed")
    for i in pos:
        j = min(neg, key=lambda k: abs(lam[k] - np.conj(lam[i])))
        neg.remove(j)
        lam[j] = np.conj(lam[i])
        # symmetric rounding: both members get the averaged residue
        r = 0.5 * (res[i] + np.conj(res[j]))
        res[i], res[j] = r, np.conj(r)
    order = np.lexsort((-lam.imag, np.abs(lam.imag), lam.real))
    return lam[order], res[order]


def pole_residue(sys):
    """Poles and residues of a state-space system via the pencil eigenvectors.

    The residue at ``lam_i`` is ``(c^T x_i)(y_i^H b) / (y_i^H E x_i)``.
    """
    if isinstance(sys, PoleResidueForm):
        return sys
    if sys.n == 0:
        return PoleResidueForm.constant(sys.d)
    eig = gen_eig(sys.A, sys.E)
    lam = eig.eigenvalues
    X, Y = eig.right_vectors, eig.left_vectors
    _check_separation(lam)
    num = (sys.c @ X) * (Y.conj().T @ sys.b)
    den = np.einsum("ij,ij->j", Y.conj(), sys.E @ X)
    res = num / den
    lam, res = _pair_conjugates(lam, res)
    return PoleResidueForm(lam, res, sys.d)


def from_pole_residue(prf):
    """Real block-modal realization with ``E = I``."""
    if isinstance(prf, Number):
        return StateSpace.constant(prf)
    if prf.has_double_poles:
        raise ValueError("double-pole terms have no modal realization here")
    if not prf.is_real():
        raise ConjugationViolation("term list is not closed under conjugation")
    scale = max(np.abs(prf.poles).max(initial=0.0), 1.0)
    blocks, bs, cs = [], [], []
    for lam, phi in zip(prf.poles, prf.residues):
        if abs(lam.imag) <= 1e-9 * scale:
            blocks.append(np.array([[lam.real]]))
            bs.append([1.0])
            cs.append([phi.real])
        elif lam.imag > 0:
            a, w = lam.real, lam.imag
            blocks.append(np.array([[a, w], [-w, a]]))
            bs.append([1.0, 0.0])
            cs.append([2 * phi.real, 2 * phi.imag])
    n = sum(bl.shape[0] for bl in blocks)
    A = spla.block_diag(*blocks) if blocks else np.zeros((0, 0))
    return StateSpace(np.eye(n), A, np.concatenate(bs) if bs else np.zeros(0),
                      np.concatenate(cs) if cs else np.zeros(0), float(np.real(prf.d)))


def poles(sys):
    if isinstance(sys, StateSpace):
        return gen_eig(sys.A, sys.E).eigenvalues
    return as_prf(sys).poles


def is_stable(sys):
    """True iff every pole has real part below ``-1e-12 * max|pole|``."""
    lam = poles(sys)
    if lam.size == 0:
        return True
    return bool(np.all(lam.real < -1e-12 * np.abs(lam).max()))


def _probe_points():
    w = np.logspace(-2, 2, 19)
    return np.concatenate([[1.0 + 0j], 1j * w])


def feedback_connect(P, G):
    """Closed loop ``T = P / (1 + G P)`` (negative feedback, controller G).

    States are ``[x_P; x_G]`` on the block-diagonal pencil of the two
    realizations; the loop couples them through ``-b_P c_G^T`` and
    ``b_G c_P^T``.
    """
    if P.d != 0 or G.d != 0:
        raise NotStrictlyProper("feedback_connect requires strictly proper P and G")
    for s in _probe_points():
        if abs(1 + tf_eval(G, s) * tf_eval(P, s)) <= 1e-12:
            raise IllPosedLoop(f"1 + G P vanishes at s = {s}")
    n1 = P.n
    E = spla.block_diag(P.E, G.E)
    A = spla.block_diag(P.A, G.A)
    A[:n1, n1:] = -np.outer(P.b, G.c)
    A[n1:, :n1] = np.outer(G.b, P.c)
    b = np.concatenate([P.b, np.zeros(G.n)])
    c = np.concatenate([P.c, np.zeros(G.n)])
    return StateSpace(E, A, b, c, 0.0)


def weight_from_loop(P, G):
    """Controller-reduction weight ``W = P (1 + P G)^{-1}``.

    For SISO systems this is the same transfer function as the closed loop
    built by :func:`feedback_connect`.
    """
    return feedback_connect(P, G)


def _random_transform(rng, n):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q * rng.uniform(0.5, 2.0, n)


def _descriptorize(modal, rng):
    n = modal.n
    M = _random_transform(rng, n)
    S = _random_transform(rng, n)
    return StateSpace(M @ S, M @ modal.A @ S, M @ modal.b, S.T @ modal.c, modal.d)


def make_modal_benchmark(n, seed, damping_range=(0.01, 0.2), freq_range=(0.1, 10.0),
                         residue_decay=0.8, descriptor=False):
    """Synthetic lightly damped modal system with controllable dominance.

    Conjugate pole pairs ``-zeta w +- i w sqrt(1 - zeta^2)`` with ``zeta``
    uniform in ``damping_range`` and ``w`` log-uniform in ``freq_range``; the
    k-th mode has residue magnitude ``residue_decay**k`` with a random phase.
    An odd ``n`` adds one real pole as the last (weakest) mode. With
    ``descriptor=True`` a random well-conditioned equivalence transform makes
    ``E`` dense.
    """
    zlo, zhi = damping_range
    flo, fhi = freq_range
    if n < 1:
        raise InvalidRange("n must be >= 1")
    if not (0 < zlo <= zhi < 1):
        raise InvalidRange(f"damping_range {damping_range} must satisfy 0 < min <= max < 1")
    if not (0 < flo <= fhi):
        raise InvalidRange(f"freq_range {freq_range} must be positive and ordered")
    if not (0 < residue_decay <= 1):
        raise InvalidRange("residue_decay must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    ps, rs = [], []
    for k in range(n // 2):
        zeta = rng.uniform(zlo, zhi)
        w = math.exp(rng.uniform(math.log(flo), math.log(fhi)))
        lam = complex(-zeta * w, w * math.sqrt(1 - zeta * zeta))
        phi = residue_decay ** k * np.exp(1j * rng.uniform(0, 2 * np.pi))
        ps += [lam, lam.conjugate()]
        rs += [phi, np.conj(phi)]
    if n % 2:
        w = math.exp(rng.uniform(math.log(flo), math.log(fhi)))
        ps.append(-w)
        rs.append(residue_decay ** (n // 2) * rng.choice([-1.0, 1.0]))
    sys = from_pole_residue(PoleResidueForm(ps, rs))
    if descriptor:
        sys = _descriptorize(sys, rng)
    return sys


def random_system(n, seed, descriptor=True, real_fraction=0.3, d=0.0):
    """Random stable system with simple poles and moderate damping.

    Complex pairs ``-a +- ib`` with ``a`` in [0.05, 3], ``b`` in [0.1, 10];
    real poles in [-5, -0.1]; standard normal residues.
    """
    rng = np.random.default_rng(seed)
    ps, rs = [], []
    while len(ps) < n:
        if n - len(ps) == 1 or rng.uniform() < real_fraction:
            ps.append(-rng.uniform(0.1, 5.0))
            rs.append(rng.standard_normal())
        else:
            lam = complex(-rng.uniform(0.05, 3.0), rng.uniform(0.1, 10.0))
            phi = complex(rng.standard_normal(), rng.standard_normal())
            ps += [lam, lam.conjugate()]
            rs += [phi, phi.conjugate()]
    sys = from_pole_residue(PoleResidueForm(ps, rs, d))
    return _descriptorize(sys, rng) if descriptor else sys


def difference(G, H):
    """Pole-residue form of ``G - H``.

    Poles of H within ``1e-11 * max|pole|`` of a pole of G (roundoff-level
    copies, e.g. after a full-order projection) are merged into it.
    """
    g, h = as_prf(G), as_prf(H)
    p = list(g.poles)
    r = list(g.residues)
    q = list(g.h2)
    scale = max(np.abs(np.concatenate([g.poles, h.poles])).max(initial=0.0), 1.0)
    for lam, phi, hh in zip(h.poles, h.residues, h.h2):
        hits = [i for i, mu in enumerate(p) if abs(mu - lam) <= MERGE_TOL * scale]
        if hits:
            r[hits[0]] -= phi
            q[hits[0]] -= hh
        else:
            p.append(lam)
            r.append(-phi)
            q.append(-hh)
    keep = [i for i in range(len(p)) if r[i] != 0 or q[i] != 0]
    return PoleResidueForm([p[i] for i in keep], [r[i] for i in keep],
                           g.d - h.d, [q[i] for i in keep])


def _midpoints(u):
    """Half-step values of a uniformly sampled signal by cubic interpolation."""
    u = np.asarray(u, dtype=float)
    n = u.size
    if n < 4:
        return np.concatenate([0.5 * (u[:-1] + u[1:]), [u[-1]]]) if n > 1 else u.copy()
    mid = np.empty(n)
    mid[1:n - 2] = (-u[:-3] + 9 * u[1:-2] + 9 * u[2:-1] - u[3:]) / 16
    mid[0] = (5 * u[0] + 15 * u[1] - 5 * u[2] + u[3]) / 16
    mid[n - 2] = (u[n - 4] - 5 * u[n - 3] + 15 * u[n - 2] + 5 * u[n - 1]) / 16
    mid[n - 1] = u[n - 1]
    return mid


def simulate(sys, u, dt, n_steps=None, x0=None):
    """Classical RK4 response of a stable system from ``x(0) = x0`` (default 0).

    ``u`` is either an array of input samples on the grid ``t_k = k dt`` or a
    callable ``u(t)`` together with ``n_steps``. Returns output samples on the
    same grid.

    Raises
    ------
    StepTooLarge
        If ``dt > 0.1 / max|pole|``.
    """
    if sys.n == 0:
        uu = u(np.arange(n_steps) * dt) if callable(u) else np.asarray(u, dtype=float)
        return sys.d * uu
    lam = gen_eig(sys.A, sys.E).eigenvalues
    if np.any(lam.real >= 0):
        raise UnstablePencil("simulate requires a stable system")
    limit = 0.1 / np.abs(lam).max()
    if dt > limit:
        raise StepTooLarge(f"dt={dt:g} exceeds 0.1/max|pole| = {limit:.3e}")
    if callable(u):
        if n_steps is None:
            raise ValueError("n_steps is required with a callable input")
        t = np.arange(n_steps) * dt
        uu = np.asarray(u(t), dtype=float)
        umid = np.asarray(u(t + 0.5 * dt), dtype=float)
    else:
        uu = np.ascontiguousarray(u, dtype=float)
        umid = _midpoints(uu)
    lu = spla.lu_factor(sys.E)
    At = np.ascontiguousarray(spla.lu_solve(lu, sys.A))
    bt = np.ascontiguousarray(spla.lu_solve(lu, sys.b))
    x = np.zeros(sys.n) if x0 is None else np.ascontiguousarray(x0, dtype=float)
    y = np.empty(uu.size)
    kernels.rk4(At, bt, np.ascontiguousarray(sys.c), float(sys.d),
                np.ascontiguousarray(uu), np.ascontiguousarray(umid), float(dt), x, y)
    return y


def impulse_response(sys, dt, n_steps):
    """Impulse response of a strictly proper system (``x(0) = E^{-1} b``)."""
    x0 = np.linalg.solve(sys.E, sys.b) if sys.n else None
    return simulate(sys, np.zeros(n_steps), dt, x0=x0)


# Text format: header "wh2-ss 1", then "n", "d", blocks E, A (n rows), b, c.

def _fmt(x):
    return f"{x:.17g}"


def dumps(sys, comment=None):
    out = io.StringIO()
    out.write("wh2-ss 1\n")
    if comment:
        for line in str(comment).splitlines():
            out.write(f"# {line}\n")
    out.write(f"n {sys.n}\n")
    out.write(f"d {_fmt(sys.d)}\n")
    for name in ("E", "A"):
        out.write(f"{name}\n")
        for row in getattr(sys, name):
            out.write(" ".join(_fmt(v) for v in row) + "\n")
    for name in ("b", "c"):
        out.write(f"{name}\n")
        if sys.n:
            out.write(" ".join(_fmt(v) for v in getattr(sys, name)) + "\n")
    return out.getvalue()


def loads(text):
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    it = iter(lines)

    def expect(word):
        line = next(it, None)
        if line is None or line.split()[0] != word:
            raise ValueError(f"expected '{word}', got {line!r}")
        return line.split()[1:]

    try:
        header = next(it)
        if header.split() != ["wh2-ss", "1"]:
            raise ValueError(f"bad header {header!r}")
        n = int(expect("n")[0])
        d = float(expect("d")[0])
        mats = {}
        for name in ("E", "A"):
            expect(name)
            rows = [[float(v) for v in next(it).split()] for _ in range(n)]
            if any(len(r) != n for r in rows):
                raise ValueError(f"block {name} must have {n} columns")
            mats[name] = np.array(rows, dtype=float).reshape(n, n)
        for name in ("b", "c"):
            expect(name)
            vec = [float(v) for v in next(it).split()] if n else []
            if len(vec) != n:
                raise ValueError(f"vector {name} must have {n} entries")
            mats[name] = np.array(vec, dtype=float)
    except StopIteration:
        raise ValueError("truncated state-space file") from None
    if next(it, None) is not None:
        raise ValueError("trailing content after vector c")
    return StateSpace(mats["E"], mats["A"], mats["b"], mats["c"], d)


def save(sys, path, comment=None):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dumps(sys, comment))


def load(path):
    with open(path, encoding="ascii") as fh:
        return loads(fh.read())

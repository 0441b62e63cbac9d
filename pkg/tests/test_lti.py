import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wh2mor import lti
from wh2mor.errors import (ConjugationViolation, EvalAtPole, IllPosedLoop, InvalidRange,
                           NonSimplePoles, SingularE, StepTooLarge, UnsupportedMultiplicity)
from wh2mor.lti import PoleResidueForm, StateSpace

from oracles import ss, two_pole

G1 = ss(-1.0, 1.0, 1.0)  # 1/(s+1)
PR = PoleResidueForm([-1.0, -2.0], [2.0, -1.0])  # 2/(s+1) - 1/(s+2)


def test_statespace_validation():
    with pytest.raises(SingularE):
        StateSpace(np.zeros((1, 1)), [[-1.0]], [1.0], [1.0])
    with pytest.raises(ValueError):
        StateSpace(np.eye(2), np.eye(2), [1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        StateSpace.from_abcd([[np.nan]], [1.0], [1.0])
    with pytest.raises(ValueError):
        G1.A[0, 0] = 3.0  # stored read-only


def test_tf_eval_examples():
    assert lti.tf_eval(G1, 1.0) == pytest.approx(0.5, rel=1e-15)
    assert lti.tf_eval(G1, 0.0) == pytest.approx(1.0, rel=1e-15)
    assert lti.tf_eval(PR, 1.0) == pytest.approx(2 / 2 - 1 / 3, rel=1e-15)


def test_tf_eval_at_pole():
    with pytest.raises(EvalAtPole):
        lti.tf_eval(G1, -1.0)
    with pytest.raises(EvalAtPole):
        lti.tf_eval(PR, -2.0)
    with pytest.raises(EvalAtPole):
        lti.freq_response(G1, np.array([0.0, -1.0]))


def test_tf_deriv_examples():
    assert lti.tf_deriv(G1, 0.0) == pytest.approx(-1.0, rel=1e-15)
    assert lti.tf_deriv(G1, 1.0) == pytest.approx(-0.25, rel=1e-15)
    assert lti.tf_deriv(PR, 0.0) == pytest.approx(-2 + 0.25, rel=1e-15)


def test_pole_residue_examples():
    p = lti.pole_residue(ss(np.diag([-1.0, -2.0]), [1.0, 1.0], [2.0, -1.0]))
    np.testing.assert_allclose(p.poles, [-2, -1], atol=1e-14)
    np.testing.assert_allclose(p.residues, [-1, 2], atol=1e-14)
    p = lti.pole_residue(StateSpace([[2.0]], [[-2.0]], [1.0], [4.0]))
    np.testing.assert_allclose(p.poles, [-1])
    np.testing.assert_allclose(p.residues, [2])
    # 1/((s+1)(s+2)) = 1/(s+1) - 1/(s+2)
    p = lti.pole_residue(two_pole())
    np.testing.assert_allclose(p.poles, [-2, -1], rtol=1e-14)
    np.testing.assert_allclose(p.residues, [-1, 1], rtol=1e-13)


def test_pole_residue_rejects_repeated_poles():
    J = np.array([[-1.0, 1.0], [0.0, -1.0]])
    with pytest.raises(NonSimplePoles) as exc:
        lti.pole_residue(ss(J, [0.0, 1.0], [1.0, 0.0]))
    assert len(exc.value.cluster) == 2


def test_from_pole_residue_examples():
    s = lti.from_pole_residue(PoleResidueForm([-1.0], [2.0]))
    assert s.n == 1 and s.A[0, 0] == -1 and s.b[0] * s.c[0] == 2
    # at s = 0 the pair contributes 2 Re(phi / (1 - 2i)) with phi the residue at -1 + 2i
    pair = PoleResidueForm([-1 + 2j, -1 - 2j], [1 + 0.5j, 1 - 0.5j])
    s = lti.from_pole_residue(pair)
    assert s.n == 2 and np.isrealobj(s.A)
    # (1 + 0.5i)(1 + 2i) / 5 = 2.5i / 5, purely imaginary
    assert abs(lti.tf_eval(s, 0.0)) <= 1e-15
    # the opposite assignment: (1 - 0.5i)(1 + 2i) / 5 = (2 + 1.5i) / 5, so 0.8
    other = PoleResidueForm([-1 + 2j, -1 - 2j], [1 - 0.5j, 1 + 0.5j])
    assert lti.tf_eval(lti.from_pole_residue(other), 0.0) == pytest.approx(0.8, rel=1e-14)
    with pytest.raises(ConjugationViolation):
        lti.from_pole_residue(PoleResidueForm([-1 + 2j], [1.0]))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 10**6))
def test_pole_residue_roundtrip(n, seed):
    p = lti.pole_residue(lti.random_system(n, seed=seed, descriptor=False))
    q = lti.pole_residue(lti.from_pole_residue(p))
    np.testing.assert_allclose(q.poles, p.poles, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(q.residues, p.residues, rtol=1e-9, atol=1e-12 * np.abs(p.residues).max())


@pytest.mark.parametrize("seed", range(10))
def test_representation_agreement(seed):
    rng = np.random.default_rng(seed)
    G = lti.random_system(int(rng.integers(1, 21)), seed=seed)
    p = lti.pole_residue(G)
    pts = []
    while len(pts) < 50:
        s = 10 ** rng.uniform(-2, 3) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        if np.abs(s - p.poles).min() >= 0.1:
            pts.append(s)
    for s in pts:
        a = lti.tf_eval(G, s)
        assert abs(a - lti.tf_eval(p, s)) <= 1e-9 * (1 + abs(a))
        h = 1e-6 * (1 + abs(s))
        fd = (lti.tf_eval(G, s + h) - lti.tf_eval(G, s - h)) / (2 * h)
        d = lti.tf_deriv(G, s)
        assert abs(d - fd) <= 1e-5 * abs(d) + 1e-9 * (1 + abs(a)) / h
        assert lti.tf_eval(G, np.conj(s)) == pytest.approx(np.conj(a), rel=1e-13, abs=1e-300)
        assert lti.freq_response(G, np.array([s]))[0] == pytest.approx(a, rel=1e-10)


def test_reconstruction_on_probe_grid():
    G = lti.random_system(8, seed=4)
    p = G.prf
    s = 1j * np.logspace(-1, 2, 20) + 0.05
    np.testing.assert_allclose(lti.freq_response(p, s), [lti.tf_eval(G, z) for z in s], rtol=1e-9)


def test_is_stable_examples():
    assert lti.is_stable(G1)
    assert not lti.is_stable(ss(1.0, 1.0, 1.0))
    assert lti.is_stable(two_pole())


def test_feedback_examples():
    P, G = ss(-1.0, 1.0, 1.0), ss(-2.0, 1.0, 1.0)
    zero = ss(-2.0, 1.0, 0.0)
    T0 = lti.feedback_connect(P, zero)
    for s in [0.0, 1j, 2 + 1j]:
        assert lti.tf_eval(T0, s) == pytest.approx(lti.tf_eval(P, s), rel=1e-14)
    T = lti.feedback_connect(P, G)
    assert lti.tf_eval(T, 0.0) == pytest.approx(1 / 1.5, rel=1e-14)
    assert lti.is_stable(T)
    for s in 1j * np.logspace(-2, 2, 9) + 0.1:
        ref = lti.tf_eval(P, s) / (1 + lti.tf_eval(G, s) * lti.tf_eval(P, s))
        assert lti.tf_eval(T, s) == pytest.approx(ref, rel=1e-9)
    W = lti.weight_from_loop(P, G)
    assert lti.tf_eval(W, 0.0) == pytest.approx(2 / 3, rel=1e-14)
    assert lti.is_stable(W)
    assert lti.tf_eval(lti.weight_from_loop(P, zero), 0.5) == pytest.approx(1 / 1.5, rel=1e-14)


def test_feedback_ill_posed():
    # G P = -1/(s+1)^2 ... choose P = 1/s-like pair so that 1 + G P = 0 at s = 1
    P, G = ss(-1.0, 1.0, 1.0), ss(-1.0, 1.0, -4.0)
    with pytest.raises(IllPosedLoop):
        lti.feedback_connect(P, G)


def test_benchmark_examples():
    G = lti.make_modal_benchmark(2, seed=7)
    assert G.n == 2 and lti.is_stable(G)
    assert np.iscomplex(G.prf.poles).all()
    a, b = lti.make_modal_benchmark(12, seed=3), lti.make_modal_benchmark(12, seed=3)
    for m in "EAbc":
        assert np.array_equal(getattr(a, m), getattr(b, m))
    G = lti.make_modal_benchmark(10, seed=1, residue_decay=0.1)
    mags = np.unique(np.round(np.abs(G.prf.residues), 12))[::-1]
    np.testing.assert_allclose(mags[1:] / mags[:-1], 0.1, rtol=1e-8)
    with pytest.raises(InvalidRange):
        lti.make_modal_benchmark(4, seed=0, damping_range=(0.5, 0.1))
    D = lti.make_modal_benchmark(6, seed=2, descriptor=True)
    assert not np.allclose(D.E, np.eye(6))
    np.testing.assert_allclose(np.sort_complex(D.prf.poles),
                               np.sort_complex(lti.make_modal_benchmark(6, seed=2).prf.poles),
                               rtol=1e-10)


def test_double_pole_constructors():
    d = PoleResidueForm.double_pole(-1.0)
    assert d.has_double_poles
    assert lti.tf_eval(d, 1.0) == pytest.approx(0.25)
    assert lti.tf_deriv(d, 1.0) == pytest.approx(-2 / 8)
    with pytest.raises(UnsupportedMultiplicity):
        PoleResidueForm.from_principal_parts([(-1.0, [0, 0, 1])])


def test_simulate_step():
    dt = 1e-3
    y = lti.simulate(G1, np.ones(1001), dt)
    assert y[1000] == pytest.approx(1 - np.exp(-1), abs=1e-6)


def test_simulate_zero_input():
    G = lti.make_modal_benchmark(6, seed=1)
    assert not np.any(lti.simulate(G, np.zeros(500), 1e-3))


def test_simulate_sinusoid_amplitude():
    dt, T = 1e-2, 60.0
    n = int(T / dt)
    y = lti.simulate(G1, lambda t: np.cos(2 * t), dt, n)
    assert np.abs(y[-1000:]).max() == pytest.approx(1 / np.sqrt(5), abs=1e-3)


def test_simulate_fourth_order():
    G = lti.make_modal_benchmark(4, seed=5, freq_range=(0.5, 2.0), damping_range=(0.1, 0.3))
    u = lambda t: np.sin(1.3 * t)
    errs = []
    for dt in (0.04, 0.02, 0.01):
        n = int(round(8 / dt))
        ref = lti.simulate(G, u, dt / 8, 8 * n)[::8]
        errs.append(np.abs(lti.simulate(G, u, dt, n) - ref).max())
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert rates.min() > 3.5


def test_simulate_step_guard():
    with pytest.raises(StepTooLarge):
        lti.simulate(ss(-100.0, 1.0, 1.0), np.ones(10), 0.01)


def test_impulse_response():
    dt = 1e-3
    y = lti.impulse_response(G1, dt, 2001)
    assert y[2000] == pytest.approx(np.exp(-2), rel=1e-9)


def test_difference_merges_equal_poles():
    a = PoleResidueForm([-1.0, -2.0], [1.0, 1.0])
    b = PoleResidueForm([-1.0], [0.5])
    d = lti.difference(a, b)
    assert d.n == 2
    assert lti.tf_eval(d, 0.3) == pytest.approx(0.5 / 1.3 + 1 / 2.3)
    assert lti.difference(a, a).n == 0


@settings(max_examples=20, deadline=None)
@given(n=st.integers(0, 12), seed=st.integers(0, 10**6))
def test_text_roundtrip(n, seed):
    G = lti.random_system(n, seed=seed, d=0.25) if n else StateSpace.constant(0.25)
    H = lti.loads(lti.dumps(G, comment="round trip"))
    for m in "EAbc":
        assert np.array_equal(getattr(G, m), getattr(H, m))
    assert G.d == H.d


def test_text_format_layout(tmp_path):
    text = lti.dumps(G1, comment="first order")
    lines = text.splitlines()
    assert lines[0] == "wh2-ss 1"
    assert "# first order" in lines
    path = tmp_path / "g.ss"
    lti.save(G1, path)
    assert lti.tf_eval(lti.load(path), 1.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        lti.loads("not a system\n")

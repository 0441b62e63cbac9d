import numpy as np
import pytest

from wh2mor import lti, wh2
from wh2mor.baselines import h2_norm_gramian
from wh2mor.errors import CommonPoles, NonSimpleWeightPoles, NotStrictlyProper
from wh2mor.lti import PoleResidueForm

from oracles import h2_inner_time_domain

P = PoleResidueForm


def pr1(a, r=1.0):
    """r/(s+a)"""
    return P([-a], [r])


def test_inner_examples():
    v = wh2.weighted_inner(pr1(1), pr1(2)).value
    assert v == pytest.approx(1 / 3, abs=1e-15)
    assert v == pytest.approx(h2_inner_time_domain(lambda t: np.exp(-t), lambda t: np.exp(-2 * t)),
                              rel=1e-12)
    # <1/(s+2), 1/(s+1)^2>: impulse responses e^{-2t} and t e^{-t}
    b = wh2.weighted_inner(pr1(2), P.double_pole(-1.0))
    assert b.value == pytest.approx(1 / 9, abs=1e-15)
    assert b.value == pytest.approx(
        h2_inner_time_domain(lambda t: np.exp(-2 * t), lambda t: t * np.exp(-t)), rel=1e-12)
    assert b.branch_tags == ["double"]
    # G W has impulse response e^{-t} - e^{-2t}
    v = wh2.weighted_inner(pr1(1), pr1(1), pr1(2)).value
    assert v == pytest.approx(1 / 12, abs=1e-15)
    assert v == pytest.approx(
        h2_inner_time_domain(lambda t: np.exp(-t) - np.exp(-2 * t),
                             lambda t: np.exp(-t) - np.exp(-2 * t)), rel=1e-12)


def test_inner_breakdown_sums():
    G, H, W = (lti.random_system(6, seed=k) for k in range(3))
    b = wh2.weighted_inner(G, H, W)
    total = sum(t for _, t in b.h_pole_terms) + sum(t for _, t in b.w_pole_terms)
    assert abs(total - b.value) <= 1e-13 * abs(b.value)


def test_inner_errors():
    with pytest.raises(CommonPoles):
        wh2.weighted_inner(pr1(1), pr1(2), pr1(2))
    with pytest.raises(NonSimpleWeightPoles):
        wh2.weighted_inner(pr1(1), pr1(3), P.double_pole(-2.0))
    with pytest.raises(NotStrictlyProper):
        wh2.weighted_inner(P([-1.0], [1.0], d=1.0), pr1(2))


@pytest.mark.parametrize("seed", range(5))
def test_inner_symmetry(seed):
    G, H = lti.random_system(5, seed=seed), lti.random_system(7, seed=seed + 50)
    W = lti.random_system(3, seed=seed + 99, d=0.5)
    a = complex(wh2.weighted_inner(G, H, W).value)
    b = complex(wh2.weighted_inner(H, G, W).value)
    assert abs(a.imag) <= 1e-10 * abs(a) and abs(b.imag) <= 1e-10 * abs(b)
    assert a.real == pytest.approx(b.real, rel=1e-10)


@pytest.mark.parametrize("W, expected", [(1.0, np.sqrt(0.5)), (2.0, np.sqrt(2.0)),
                                         (pr1(2), np.sqrt(1 / 12))])
def test_norm_examples(W, expected):
    G = lti.from_pole_residue(pr1(1))
    assert wh2.weighted_norm(G, W) == pytest.approx(expected, abs=1e-14)
    assert wh2.weighted_norm_quad(G, W) == pytest.approx(expected, rel=1e-10)


def test_norm_breakdown_hand_terms():
    b = wh2.weighted_norm(pr1(1), pr1(2), full_output=True)
    # G(1)W(1)W(-1) = 1/2 * 1/3 * 1 and G(2)W(2)G(-2) = 1/3 * 1/4 * (-1)
    assert b.g_pole_terms[0][1] == pytest.approx(1 / 6)
    assert b.w_pole_terms[0][1] == pytest.approx(-1 / 12)


@pytest.mark.parametrize("seed", range(5))
def test_unweighted_special_case(seed):
    G = lti.random_system(8, seed=seed)
    p = G.prf
    direct = complex(np.sum(lti.freq_response(p, -p.poles) * p.residues))
    assert wh2.weighted_norm(G) ** 2 == pytest.approx(direct.real, rel=1e-13)
    assert wh2.weighted_norm(G) == pytest.approx(h2_norm_gramian(G), rel=1e-10)


def test_f_map_examples():
    G, W = pr1(1), pr1(2)
    g = lti.random_system(5, seed=1)
    for s in [0.5, 2 + 1j, 7.0]:
        assert wh2.f_map_eval(g, 1.0, s) == pytest.approx(lti.tf_eval(g, s), rel=1e-14)
        assert wh2.f_map_deriv(g, 1.0, s) == pytest.approx(lti.tf_deriv(g, s), rel=1e-14)
    assert wh2.f_map_eval(G, W, 3.0) == pytest.approx(-1 / 20 + 1 / 12, abs=1e-15)
    # removable point s = 2: F(2) = -f'(2) with f = 1/((s+1)(s+2)), i.e. 7/144
    assert wh2.f_map_eval(G, W, 2.0) == pytest.approx(7 / 144, rel=1e-12)
    near = wh2.f_map_eval(G, W, 2.0 + 1e-3, direct=True)
    assert near == pytest.approx(7 / 144, rel=1e-2)


def test_f_map_removable_vs_direct_path():
    G, W = lti.random_system(6, seed=3), lti.random_system(4, seed=4)
    for gam in W.prf.poles:
        s = -gam + 1e-3 * (1 + abs(gam))  # beyond the switch radius: direct path is accurate
        assert wh2.f_map_eval(G, W, s) == pytest.approx(wh2.f_map_eval(G, W, s, direct=True),
                                                        rel=1e-9)
        inside = -gam + 1e-6 * (1 + 1j)
        a = wh2.f_map_eval(G, W, inside)
        b = wh2.f_map_eval(G, W, -gam)
        assert a == pytest.approx(b, rel=1e-4)


def test_f_map_deriv_finite_difference():
    G, W = pr1(1), pr1(2)
    h = 1e-5
    for s in [3.0, 0.7 + 0.4j, 2.0]:
        fd = (wh2.f_map_eval(G, W, s + h) - wh2.f_map_eval(G, W, s - h)) / (2 * h)
        assert wh2.f_map_deriv(G, W, s) == pytest.approx(fd, rel=1e-6)


def test_f_map_identity_example():
    G, W, mu = pr1(1), pr1(2), -3.0
    lhs = complex(wh2.weighted_inner(G, P.double_pole(mu), W).value)
    assert lhs == pytest.approx(-wh2.f_map_deriv(G, W, -mu), rel=1e-12)
    assert lhs == pytest.approx(wh2.weighted_inner_quad(G, P.double_pole(mu), W), rel=1e-8)
    lhs1 = complex(wh2.weighted_inner(G, P([mu], [1.0]), W).value)
    assert lhs1 == pytest.approx(wh2.f_map_eval(G, W, -mu), rel=1e-12)


def test_f_map_residues_vanish():
    G, W = lti.random_system(6, seed=8), lti.random_system(4, seed=9)
    for pole, res, scale in wh2.f_map_residues(G, W):
        assert abs(res) <= 1e-8 * scale


def test_error_expr_examples():
    G = P([-1.0, -3.0], [1.0, 1.0])
    with pytest.raises(CommonPoles):
        wh2.weighted_error_expr(G, G)
    assert wh2.weighted_norm(lti.difference(G, G)) == 0.0
    eb = wh2.weighted_error_expr(G, pr1(1.0001))
    assert eb.total == pytest.approx(1 / 6, rel=1e-3)
    G, Gr, W = pr1(1), pr1(1.1, 0.9), pr1(2)
    eb = wh2.weighted_error_expr(G, Gr, W)
    assert eb.total == pytest.approx(wh2.weighted_norm(lti.difference(G, Gr), W) ** 2, rel=1e-10)
    assert eb.total == pytest.approx(sum(eb.sums), rel=1e-13)
    with pytest.raises(CommonPoles):
        wh2.weighted_error_expr(G, pr1(2), W)


def test_weighted_error_fallbacks():
    G = P([-1.0, -3.0], [1.0, 1.0])
    val, method = wh2.weighted_error(G, pr1(1.0, 0.5))
    assert method == "difference"
    assert val ** 2 == pytest.approx(wh2.weighted_norm(P([-1.0, -3.0], [0.5, 1.0])) ** 2, rel=1e-13)
    val, method = wh2.weighted_error(G, pr1(2.0))
    assert method == "expression"


def test_optimality_residuals_identity():
    G = lti.random_system(6, seed=11, descriptor=False)
    G2 = lti.random_system(6, seed=11, descriptor=True)  # same poles and residues, new realization
    assert not np.allclose(G.A, G2.A)
    W = lti.random_system(3, seed=12)
    for r in wh2.optimality_residuals(G, G2, W):
        assert r.f_abs <= 1e-10 * max(r.f_scale, 1.0)
        assert r.df_abs <= 1e-10 * max(r.df_scale, 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_optimality_residuals_generic(seed):
    G = lti.random_system(8, seed=seed)
    Gr = lti.random_system(2, seed=seed + 500)
    W = lti.random_system(3, seed=seed + 900)
    res = wh2.optimality_residuals(G, Gr, W)
    assert max(max(r.f_rel, r.df_rel) for r in res) > 1e-2


def test_quad_paths_independent_of_residues():
    G = lti.make_modal_benchmark(8, seed=5)
    W = lti.make_modal_benchmark(4, seed=6)
    assert wh2.weighted_norm_quad(G, W, tol=1e-11) == pytest.approx(wh2.weighted_norm(G, W), rel=1e-9)
    H = lti.random_system(5, seed=7)
    assert wh2.weighted_inner_quad(G, H, W) == pytest.approx(complex(wh2.weighted_inner(G, H, W).value),
                                                            rel=1e-8)

import os
import subprocess
import sys

import numpy as np
import pytest

from wh2mor import _kernels_py as py
from wh2mor import lti

compiled = pytest.importorskip("wh2mor._kernels", reason="compiled extension not built")


def _points(rng, n):
    return np.ascontiguousarray(rng.uniform(-3, 3, n) + 1j * rng.uniform(-20, 20, n))


@pytest.mark.parametrize("seed", range(4))
def test_pr_parity(seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(-2, -0.1, 7) + 1j * rng.uniform(-5, 5, 7)
    r = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    h = np.where(rng.random(7) < 0.3, rng.standard_normal(7), 0).astype(complex)
    s = _points(rng, 300)
    a, b = np.empty_like(s), np.empty_like(s)
    assert compiled.pr_eval(p, r, h, 0.5 + 0j, s, a, 1e-12) == py.pr_eval(p, r, h, 0.5 + 0j, s, b, 1e-12) == -1
    np.testing.assert_allclose(a, b, rtol=1e-13)
    assert compiled.pr_deriv(p, r, h, s, a, 1e-12) == py.pr_deriv(p, r, h, s, b, 1e-12) == -1
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_pr_pole_hit_index():
    p = np.array([-1.0 + 0j, -2.0 + 0j])
    r = np.ones(2, complex)
    h = np.zeros(2, complex)
    s = np.array([0.0, 1.0, -2.0, 3.0], complex)
    out = np.empty_like(s)
    assert compiled.pr_eval(p, r, h, 0j, s, out, 1e-12) == 2
    assert py.pr_eval(p, r, h, 0j, s, out, 1e-12) == 2


@pytest.mark.parametrize("seed", range(4))
def test_hess_parity(seed):
    G = lti.random_system(15, seed=seed)
    H, bh, ch = G._hessenberg
    s = _points(np.random.default_rng(seed), 200)
    a, b = np.empty_like(s), np.empty_like(s)
    assert compiled.hess_eval(H, bh, ch, 0j, s, a, 1e-14) == -1
    assert py.hess_eval(H, bh, ch, 0j, s, b, 1e-14) == -1
    np.testing.assert_allclose(a, b, rtol=1e-10)
    ref = [lti.tf_eval(G, z) for z in s]
    np.testing.assert_allclose(a, ref, rtol=1e-9)


def test_hess_pole_hit():
    G = lti.from_pole_residue(lti.PoleResidueForm([-1.0, -2.0], [1.0, 1.0]))
    H, bh, ch = G._hessenberg
    s = np.array([0.0, -1.0], complex)
    out = np.empty_like(s)
    assert compiled.hess_eval(H, bh, ch, 0j, s, out, 1e-14) == 1
    assert py.hess_eval(H, bh, ch, 0j, s, out, 1e-14) == 1


def test_rk4_parity():
    G = lti.make_modal_benchmark(8, seed=2)
    At = np.ascontiguousarray(np.linalg.solve(G.E, G.A))
    bt = np.ascontiguousarray(np.linalg.solve(G.E, G.b))
    t = np.arange(2000) * 1e-3
    u, um = np.sin(t), np.sin(t + 5e-4)
    ya, yb = np.empty(2000), np.empty(2000)
    compiled.rk4(At, bt, np.ascontiguousarray(G.c), 0.0, u, um, 1e-3, np.zeros(8), ya)
    py.rk4(At, bt, np.ascontiguousarray(G.c), 0.0, u, um, 1e-3, np.zeros(8), yb)
    np.testing.assert_allclose(ya, yb, rtol=1e-12, atol=1e-14)


def test_backend_switch():
    code = "import wh2mor.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, WH2_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
    env["WH2_PURE_PYTHON"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "compiled"

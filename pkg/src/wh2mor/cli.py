"""Command-line front end: ``wh2mor <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 a validation
threshold was exceeded.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
import json
import logging
import os
from pathlib import Path
import sys

import numpy as np

from . import baselines, lti, reduce, wh2
from .errors import UnstablePencil, Wh2Error

logger = logging.getLogger("wh2mor")

EXIT_NUMERIC = 3
EXIT_THRESHOLD = 4
GAP_THRESHOLD = 1e-5
HINF_DECADES = (-3.0, 3.0)
HINF_PER_DECADE = 2000


def default_seed():
    return int(os.environ.get("WH2_SEED", "0"))


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows):
    """Write rows with a header; ``path='-'`` writes to stdout."""
    fh = sys.stdout if str(path) == "-" else open(path, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _load_weight(path):
    return lti.load(path) if path else lti.StateSpace.constant(1.0)


def hinf_grid_estimate(G, Gr, W):
    """Peak of ``|(G - Gr) W|`` on a dense log grid (an estimate, not a norm).

    The grid has 2000 points per decade over ``[1e-3, 1e3] * m`` where ``m``
    is the largest imaginary part among the poles of G and W (or the largest
    pole magnitude if all poles are real).
    """
    lam = np.concatenate([lti.poles(G), lti.poles(W)])
    m = np.abs(lam.imag).max(initial=0.0)
    if m == 0:
        m = max(np.abs(lam).max(initial=0.0), 1.0)
    lo, hi = HINF_DECADES
    w = m * np.logspace(lo, hi, int((hi - lo) * HINF_PER_DECADE) + 1)
    s = 1j * w
    err = (lti.freq_response(G, s) - lti.freq_response(Gr, s)) * lti.freq_response(W, s)
    return float(np.abs(err).max())


# --- subcommands --------------------------------------------------------------

def cmd_gen(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    make = lti.make_modal_benchmark if args.kind == "modal" else lti.random_system
    kw = {"descriptor": args.descriptor}
    G = make(args.n, seed=args.seed, **kw)
    lti.save(G, out / "G.ss", comment=f"{args.kind} n={args.n} seed={args.seed}")
    if args.loop:
        P = make(args.p, seed=args.seed + 1, **kw)
        W = lti.weight_from_loop(P, G)
        if not lti.is_stable(W):
            raise UnstablePencil("closed loop P/(1+GP) is unstable; try another seed")
        lti.save(P, out / "P.ss", comment=f"plant {args.kind} p={args.p} seed={args.seed + 1}")
        lti.save(W, out / "W.ss", comment="closed-loop weight P/(1+GP)")
    else:
        W = make(args.p, seed=args.seed + 1, **kw)
        lti.save(W, out / "W.ss", comment=f"{args.kind} p={args.p} seed={args.seed + 1}")
    print(f"wrote {out / 'G.ss'} (n={G.n}) and {out / 'W.ss'} (n={W.n})")
    return 0


def _report_gap(label, fast, quad):
    gap = abs(fast - quad) / max(abs(quad), np.finfo(float).tiny)
    print(f"{label} residue    {fast:.10g}")
    print(f"{label} quadrature {quad:.10g}")
    print(f"relative gap    {gap:.3e}")
    return 0 if gap <= GAP_THRESHOLD else EXIT_THRESHOLD


def cmd_norm(args):
    G, W = lti.load(args.system), _load_weight(args.weight)
    return _report_gap("norm", wh2.weighted_norm(G, W), wh2.weighted_norm_quad(G, W, tol=args.tol))


def cmd_inner(args):
    G, H, W = lti.load(args.first), lti.load(args.second), _load_weight(args.weight)
    fast = complex(wh2.weighted_inner(G, H, W).value).real
    quad = complex(wh2.weighted_inner_quad(G, H, W, tol=args.tol)).real
    return _report_gap("inner", fast, quad)


def _resolve_split(G, r, nu, varpi, metric):
    if nu == "auto":
        nu = reduce.suggest_split(G.prf, r, metric)
        logger.info("suggested nu=%d", nu)
    nu = int(nu)
    varpi = r - nu if varpi is None else varpi
    return nu, varpi


def run_method(G, W, method, r, nu=None, varpi=None, tol=1e-6, max_iter=100,
               metric="residue_magnitude", policy="mirror"):
    """Reduce with one method; returns ``(reduced, info_dict)``."""
    if method == "wirka":
        nu, varpi = _resolve_split(G, r, r if nu is None else nu, varpi, metric)
        cfg = reduce.WirkaConfig(r=r, nu=nu, varpi=varpi, tol=tol, max_iter=max_iter,
                                 dominance_metric=metric, unstable_shift_policy=policy)
        Gr, rep = reduce.wirka(G, W, cfg, compute_quad=False)
        info = rep.to_dict()
        info.update(nu=nu, varpi=varpi)
    elif method == "irka":
        Gr, rep = reduce.irka(G, r, tol=tol, max_iter=max_iter, unstable_shift_policy=policy)
        info = rep.to_dict()
    elif method in ("bt", "fwbt"):
        res = (baselines.balanced_truncation(G, r, full_output=True) if method == "bt"
               else baselines.fwbt(G, W, r, full_output=True))
        Gr = res.reduced
        info = {"hankel_singular_values": res.hankel_singular_values.tolist(),
                "stable": res.stable, "deflated": res.deflated, "notes": res.notes,
                "converged": True, "iterations": 0}
    else:
        raise ValueError(f"unknown method {method!r}")
    info["method"] = method
    info["stable"] = bool(lti.is_stable(Gr))
    return Gr, info


def _quad_error(G, Gr, W, tol):
    try:
        scale = wh2.weighted_norm(G, W)
    except Wh2Error:
        scale = wh2.weighted_norm_quad(G, W, tol=1e-6)
    return wh2.weighted_norm_quad(reduce.ss_difference(G, Gr), W, tol=tol,
                                  abs_tol=(tol * scale) ** 2)


def cmd_reduce(args):
    G, W = lti.load(args.system), _load_weight(args.weight)
    Gr, info = run_method(G, W, args.method, args.r, args.nu, args.varpi, args.tol,
                          args.max_iter, args.metric, args.policy)
    info["weighted_error_quad"] = _quad_error(G, Gr, W, args.quad_tol)
    try:
        info["weighted_error_expr"], info["error_method"] = wh2.weighted_error(G, Gr, W)
    except Wh2Error as exc:
        info["weighted_error_expr"], info["error_method"] = None, type(exc).__name__
    lti.save(Gr, args.out, comment=f"{args.method} r={args.r} from {args.system}")
    text = json.dumps(info, indent=2, sort_keys=True, default=_json_default)
    if args.report:
        Path(args.report).write_text(text + "\n")
    print(f"method {args.method}  r {Gr.n}  converged {info.get('converged')}  "
          f"iterations {info.get('iterations')}")
    print(f"weighted error (expression) {info['weighted_error_expr']}")
    print(f"weighted error (quadrature) {info['weighted_error_quad']:.10g}")
    return 0


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def cmd_validate(args):
    G, Gr, W = lti.load(args.system), lti.load(args.reduced), _load_weight(args.weight)
    res = wh2.optimality_residuals(G, Gr, W)
    rows = [(p.real, p.imag, q.f_abs, q.df_abs, q.f_rel, q.df_rel)
            for q in res for p in [complex(q.pole)]]
    write_csv(args.out, ["pole_re", "pole_im", "f_abs", "df_abs", "f_rel", "df_rel"], rows)
    worst = max((max(q.f_rel, q.df_rel) for q in res), default=0.0)
    if worst > args.threshold:
        print(f"max relative residual {worst:.3e} exceeds {args.threshold:g}", file=sys.stderr)
        return EXIT_THRESHOLD
    return 0


def _sweep_cell(job):
    G, W, method, r, nu, tol, max_iter, quad_tol = job
    try:
        Gr, info = run_method(G, W, method, r, nu, None if nu is None else r - nu, tol, max_iter)
    except Wh2Error as exc:
        return {"method": method, "r": r, "nu": nu, "failed": f"{type(exc).__name__}: {exc}"}
    return {"method": method, "r": r, "nu": nu, "failed": "",
            "h2": _quad_error(G, Gr, W, quad_tol), "hinf": hinf_grid_estimate(G, Gr, W),
            "stable": info["stable"], "converged": bool(info.get("converged", True)),
            "iterations": int(info.get("iterations", 0))}


def cmd_sweep(args):
    if args.system:
        G, W = lti.load(args.system), _load_weight(args.weight)
    else:
        G = lti.make_modal_benchmark(args.bench_n, seed=args.seed)
        W = lti.make_modal_benchmark(args.bench_p, seed=args.seed + 1)
    for r in args.r:
        if not 1 <= r < G.n:
            raise ValueError(f"r={r} must satisfy 1 <= r < n={G.n}")
    jobs = []
    for r in args.r:
        for method in args.methods:
            if method == "wirka":
                splits = [s for s in range(r, -1, -1) if r - s <= W.n]
                jobs += [(G, W, "wirka", r, nu, args.tol, args.max_iter, args.quad_tol)
                         for nu in splits]
            else:
                jobs.append((G, W, method, r, None, args.tol, args.max_iter, args.quad_tol))
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            results = list(ex.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(j) for j in jobs]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    long_rows = [(c["r"], c["method"], "" if c["nu"] is None else c["nu"],
                  "" if c["nu"] is None else c["r"] - c["nu"], c.get("h2", ""),
                  c.get("hinf", ""), c.get("stable", ""), c.get("converged", ""),
                  c.get("iterations", ""), c["failed"]) for c in results]
    write_csv(out / "sweep_long.csv",
              ["r", "method", "nu", "varpi", "weighted_h2_error", "hinf_grid_estimate",
               "stable", "converged", "iterations", "failure"], long_rows)

    # Table-1 shape: one row per r, one column per split nu = r..0 (ragged)
    wir = [c for c in results if c["method"] == "wirka"]
    if wir:
        width = max(args.r) + 1
        rows = []
        for r in args.r:
            cells = {c["nu"]: c.get("h2", float("nan")) for c in wir if c["r"] == r}
            rows.append([r] + [cells.get(nu, "") for nu in range(r, -1, -1)]
                        + [""] * (width - r - 1))
        write_csv(out / "table1.csv", ["r"] + [f"split_{k}" for k in range(width)], rows)

    # Table-2/3 shape: best W-IRKA split against the other methods
    comp = []
    for r in args.r:
        for method in args.methods:
            cells = [c for c in results if c["r"] == r and c["method"] == method and not c["failed"]]
            if not cells:
                comp.append((r, method, "", "", "", "", ""))
                continue
            best = min(cells, key=lambda c: c["h2"])
            comp.append((r, method, "" if best["nu"] is None else best["nu"], best["h2"],
                         best["hinf"], best["stable"], best["converged"]))
    write_csv(out / "comparison.csv",
              ["r", "method", "nu", "weighted_h2_error", "hinf_grid_estimate", "stable",
               "converged"], comp)
    print(f"wrote {len(results)} cells to {out}")
    failed = [c for c in results if c["failed"]]
    for c in failed:
        logger.warning("cell r=%s method=%s nu=%s failed: %s", c["r"], c["method"], c["nu"],
                       c["failed"])
    return 0


def cmd_bode(args):
    G, Gr = lti.load(args.system), lti.load(args.reduced)
    w = np.logspace(np.log10(args.wmin), np.log10(args.wmax), args.points)
    g = np.abs(lti.freq_response(G, 1j * w))
    gr = np.abs(lti.freq_response(Gr, 1j * w))
    write_csv(args.out, ["omega", "mag_G", "mag_Gr"], zip(w, g, gr))
    return 0


def cmd_simulate(args):
    P, C, Cr = lti.load(args.plant), lti.load(args.controller), lti.load(args.reduced)
    T, Tr = lti.feedback_connect(P, C), lti.feedback_connect(P, Cr)
    n_steps = int(round(args.t_end / args.dt))
    t = args.dt * np.arange(n_steps)
    if args.input == "impulse":
        y, yr = lti.impulse_response(T, args.dt, n_steps), lti.impulse_response(Tr, args.dt, n_steps)
    else:
        u = lambda tt: np.cos(args.freq * tt)
        y = lti.simulate(T, u, args.dt, n_steps)
        yr = lti.simulate(Tr, u, args.dt, n_steps)
    write_csv(args.out, ["t", "y_T", "y_Tr"], zip(t, y, yr))
    return 0


# --- parser -------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="wh2mor", description="Weighted-H2 model reduction tools.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write synthetic G and W state-space files")
    g.add_argument("--kind", choices=["modal", "random"], default="modal")
    g.add_argument("--n", type=int, default=60)
    g.add_argument("--p", type=int, default=12, help="order of the weight (or plant with --loop)")
    g.add_argument("--seed", type=int, default=default_seed())
    g.add_argument("--descriptor", action="store_true", help="hide the modal form behind E != I")
    g.add_argument("--loop", action="store_true",
                   help="also write a plant P.ss and use W = P/(1+GP) as the weight")
    g.add_argument("--out", default=".")
    g.set_defaults(func=cmd_gen)

    n = sub.add_parser("norm", help="weighted H2 norm by residues and by quadrature")
    n.add_argument("system")
    n.add_argument("--weight")
    n.add_argument("--tol", type=float, default=1e-10)
    n.set_defaults(func=cmd_norm)

    i = sub.add_parser("inner", help="weighted inner product by residues and by quadrature")
    i.add_argument("first")
    i.add_argument("second")
    i.add_argument("--weight")
    i.add_argument("--tol", type=float, default=1e-10)
    i.set_defaults(func=cmd_inner)

    r = sub.add_parser("reduce", help="reduce a system")
    r.add_argument("system")
    r.add_argument("--weight")
    r.add_argument("--method", choices=["wirka", "irka", "bt", "fwbt"], default="wirka")
    r.add_argument("--r", type=int, required=True)
    r.add_argument("--nu", default=None, help="mirrored G poles (integer or 'auto'; default r)")
    r.add_argument("--varpi", type=int, default=None, help="mirrored W poles (default r - nu)")
    r.add_argument("--tol", type=float, default=1e-6)
    r.add_argument("--max-iter", type=int, default=100)
    r.add_argument("--metric", choices=list(reduce.METRICS), default="residue_magnitude")
    r.add_argument("--policy", choices=["mirror", "halt"], default="mirror")
    r.add_argument("--quad-tol", type=float, default=1e-8)
    r.add_argument("--out", required=True, help="reduced system file")
    r.add_argument("--report", help="JSON report file")
    r.set_defaults(func=cmd_reduce)

    v = sub.add_parser("validate", help="weighted-H2 optimality residuals of a reduced model")
    v.add_argument("system")
    v.add_argument("reduced")
    v.add_argument("--weight")
    v.add_argument("--threshold", type=float, default=1e-6)
    v.add_argument("--out", default="-")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("sweep", help="error tables over r, nu/varpi splits and methods")
    s.add_argument("--system", help="G file (default: generated modal benchmark)")
    s.add_argument("--weight", help="W file (with --system)")
    s.add_argument("--bench-n", type=int, default=60)
    s.add_argument("--bench-p", type=int, default=12)
    s.add_argument("--seed", type=int, default=default_seed())
    s.add_argument("--r", type=int, nargs="+", default=[8, 10, 12])
    s.add_argument("--methods", nargs="+", choices=["wirka", "irka", "bt", "fwbt"],
                   default=["wirka", "irka", "fwbt"])
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--max-iter", type=int, default=100)
    s.add_argument("--quad-tol", type=float, default=1e-8)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", default="sweep")
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bode", help="magnitude responses of G and G_r on a log grid")
    b.add_argument("system")
    b.add_argument("reduced")
    b.add_argument("--wmin", type=float, default=1e-2)
    b.add_argument("--wmax", type=float, default=1e2)
    b.add_argument("--points", type=int, default=400)
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bode)

    m = sub.add_parser("simulate", help="closed-loop responses with full and reduced controller")
    m.add_argument("--plant", required=True)
    m.add_argument("--controller", required=True)
    m.add_argument("--reduced", required=True)
    m.add_argument("--input", choices=["impulse", "cos"], default="impulse")
    m.add_argument("--freq", type=float, default=2.0)
    m.add_argument("--dt", type=float, default=1e-3)
    m.add_argument("--t-end", type=float, default=20.0)
    m.add_argument("--out", default="-")
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Wh2Error as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Acceptance criteria, one test each, at the stated tolerances and time limits.

Every test prints a single ``ACCEPTANCE <id> PASS|FAIL`` line; the lines are
repeated in the terminal summary (see conftest.py).
"""
import math
import re
import time

import numpy as np

from tubefold.analysis import (AttractorKind, admissible_domain, attractor_scan, make_grid,
                               xi_slope)
from tubefold.checks import jacobian_dets, limit_convergence, random_states, sphere_residual
from tubefold.cli import main
from tubefold.config import load_config, shipped_config
from tubefold.errors import DomainError, FiniteSolution
from tubefold.geometry import (INFINITE, FoldParams, ZigzagState, intersection_vertex,
                               wrap_angle, zigzag_vertices)
from tubefold.integrable import (Integrability, classify_integrability, genfun_from_params,
                                 mean_curvature_tetrahedron, schlafli_residual,
                                 symmetric_constants, tetrahedron_lengths, xi_f)
from tubefold.maps import experiment1, experiment2, experiment3, map_g

RESULTS: list[str] = []


def report(cid, ok, elapsed, limit, detail):
    line = (f"ACCEPTANCE {cid:<24s} {'PASS' if ok and elapsed < limit else 'FAIL'}  "
            f"{detail}  [{elapsed:.2f}s < {limit:g}s]")
    RESULTS.append(line)
    print(line)
    assert ok, line
    assert elapsed < limit, line


def _floats(pattern, text):
    return [float(x) for x in re.findall(pattern, text)]


def test_zero_frequency_twist(tmp_path, capsys):
    t = time.perf_counter()
    main(["freq-profile", "--config", str(shipped_config("experiment1")), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    roots = _floats(r"root: I = ([0-9.eE+-]+)", out)
    spec = experiment1(N=INFINITE)
    slopes = [xi_slope(spec, float(I))
              for a, b in admissible_domain(spec) for I in np.linspace(a, b, 402)[1:-1]]
    elapsed = time.perf_counter() - t
    ok = len(roots) == 1 and abs(roots[0] - 0.2572) < 1e-3 and max(slopes) < 0
    report("zero_frequency_twist", ok, elapsed, 5,
           f"roots={roots} max dxi/dI={max(slopes):.3g}")


def test_nontwist_profile(tmp_path, capsys):
    t = time.perf_counter()
    main(["freq-profile", "--config", str(shipped_config("experiment2")), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    elapsed = time.perf_counter() - t
    roots = _floats(r"root: I = ([0-9.eE+-]+)", out)
    ext = _floats(r"extremum: I = ([0-9.eE+-]+)", out)
    limit = _floats(r"domain_limit: I = ([0-9.eE+-]+)", out)
    close = lambda got, want: len(got) == len(want) and np.allclose(got, want, atol=2e-3, rtol=0)
    ok = (close(roots, [0.2958, 0.7430]) and close(ext, [0.5257, 0.8087])
          and close(limit, [0.8091]))
    report("nontwist_profile", ok, elapsed, 10, f"roots={roots} extrema={ext} limit={limit}")


def test_area_preservation():
    t = time.perf_counter()
    rng = np.random.default_rng(0)
    errs = {}
    for name, spec in (("ex1", experiment1()), ("ex2", experiment2()), ("cs", experiment3())):
        dets = jacobian_dets(spec, random_states(spec, 1000, rng))
        errs[name] = float(np.max(np.abs(dets - 1.0 / spec.s)))
    elapsed = time.perf_counter() - t
    ok = all(e < 1e-5 for e in errs.values())
    report("area_preservation", ok, elapsed, 30,
           " ".join(f"{k}:max|det-1/s|={v:.2e}" for k, v in errs.items()))


def test_integrable_limit_convergence():
    t = time.perf_counter()
    Ns = [1000 * 2 ** k for k in range(11)]
    conv = limit_convergence(experiment1(), ZigzagState(0.3, 0.35), Ns)
    elapsed = time.perf_counter() - t
    r = conv.ratios
    ok = bool(np.all(np.abs(r - 2.0) <= 0.3 * 2.0))
    report("limit_convergence", ok, elapsed, 10,
           f"ratios in [{r.min():.4f}, {r.max():.4f}] over N=1e3..{Ns[-1]:.3g}")


def test_generating_function_identities():
    t = time.perf_counter()
    p = experiment1(N=INFINITE).params[0]
    assert p.l_L == p.l_R and p.r1 == p.r3
    K = symmetric_constants(p.l_L, p.r1, p.r2)[2]
    hi = min(K, p.admissible_interval[1])
    h = 1e-5
    d_err, hs, sch = [], [], []
    for I in np.linspace(0, hi, 22)[1:-1]:
        S = lambda x: genfun_from_params(x, p).value
        d_err.append(abs((S(I + h) - S(I - h)) / (2 * h) - xi_f(I, p)))
        hs.append(mean_curvature_tetrahedron(I, p) - S(I))
        sch.append(abs(schlafli_residual(I, p)))
    elapsed = time.perf_counter() - t
    spread = max(hs) - min(hs)
    ok = len(d_err) == 20 and max(d_err) < 1e-6 and spread < 1e-6 and max(sch) < 1e-5
    report("generating_function", ok, elapsed, 5,
           f"(a) {max(d_err):.1e} (b) spread {spread:.1e} (c) {max(sch):.1e}")


def test_g_map_limit():
    t = time.perf_counter()
    spec = experiment2(N=1_000_000)
    rng = np.random.default_rng(1)
    errs = []
    for i, st in enumerate(spec.steps):
        if not st.k:
            continue
        r3, r1 = spec.g_radii(i)
        for I in rng.uniform(0.05, 0.75, 20):
            th = rng.uniform(-math.pi, math.pi)
            try:
                y = map_g(ZigzagState(th, I), r3, r1, spec.N)
            except (FiniteSolution, DomainError):
                continue
            errs.append(abs(wrap_angle(y.theta - th - math.pi)))
    elapsed = time.perf_counter() - t
    ok = len(errs) > 10 and max(errs) < 1e-4
    report("g_map_limit", ok, elapsed, 1, f"{len(errs)} states, max |dtheta - pi|={max(errs):.1e}")


def test_island_center(tmp_path, capsys):
    t = time.perf_counter()
    main(["portrait", "--config", str(shipped_config("experiment1")), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    elapsed = time.perf_counter() - t
    m = re.search(r"island center: theta = (\S+)\s+I = (\S+) \((\w+)", out)
    ok = bool(m) and abs(float(m.group(2)) - 0.2572) < 5e-3 and m.group(3) == "elliptic"
    report("island_center", ok, elapsed, 60, m.group(0) if m else out.strip())


def test_cs_attractor():
    t = time.perf_counter()
    cfg = load_config(shipped_config("experiment3"))
    ac = cfg.attractor
    assert ac.steps >= 10_000
    spec = cfg.module
    grid = make_grid(ac.grid.n_theta, ac.grid.n_action,
                     ac.grid.action_range or (lambda d: (d[0][0], d[-1][1]))(admissible_domain(spec)),
                     ac.grid.theta_range)
    drift = [lab for _, lab in attractor_scan(spec, grid, ac.steps, ac.burn_in)]
    nodrift = [lab for _, lab in attractor_scan(spec.with_(mu=0.0), grid, ac.steps, ac.burn_in)]
    elapsed = time.perf_counter() - t
    qp = [l for l in drift if l.kind is AttractorKind.QUASI_PERIODIC
          and l.band[1] - l.band[0] < 1e-4 and l.steps - ac.burn_in >= 10_000]
    frac = lambda labs: sum(l.kind is AttractorKind.FINITE for l in labs) / len(labs)
    ok = (len(qp) >= 1 and not any(l.kind is AttractorKind.QUASI_PERIODIC for l in nodrift)
          and frac(nodrift) > frac(drift))
    width = max(l.band[1] - l.band[0] for l in qp) if qp else float("nan")
    report("cs_attractor", ok, elapsed, 120,
           f"mu=0.05: {len(qp)}/{len(drift)} QP (band<={width:.1e}), finite {frac(drift):.2f}; "
           f"mu=0: finite {frac(nodrift):.2f}")


def test_integrability_classifier():
    t = time.perf_counter()
    sym = classify_integrability(experiment1(N=INFINITE).params[0])
    asym = classify_integrability(experiment2(N=INFINITE).params[0])
    elapsed = time.perf_counter() - t
    ok = (sym == (2, Integrability.ELEMENTARY)) and (asym == (4, Integrability.ELLIPTIC))
    report("integrability_classifier", ok, elapsed, 1,
           f"symmetric d={sym.degree} {sym.kind.value}; asymmetric d={asym.degree} {asym.kind.value}")


def test_geometry_kernel():
    t = time.perf_counter()
    rng = np.random.default_rng(2)
    pool = experiment1().params + experiment2().params
    res, edge_err, n = 0.0, 0.0, 0
    while n < 10_000:
        base = pool[rng.integers(len(pool))]
        N = int(rng.choice([3, 10, 100, 3000, 10 ** 6]))
        p = FoldParams(base.l_L, base.l_R, N, base.r1, base.r2, base.r3, base.sigma)
        lo, hi = p.admissible_interval
        x = ZigzagState(rng.uniform(-math.pi, math.pi), rng.uniform(lo, hi))
        try:
            r = sphere_residual(x, p)
            v = intersection_vertex(x, p)
        except (FiniteSolution, DomainError):
            continue
        n += 1
        res = max(res, r)
        u1, u2, u3, _ = zigzag_vertices(x, p)
        got = np.array([np.linalg.norm(a - b) for a, b in
                        ((u1, u3), (u1, u2), (u2, u3), (u1, v), (u2, v), (u3, v))])
        scale = max(1.0, float(np.abs(u1).max()))
        edge_err = max(edge_err, float(np.max(np.abs(got - tetrahedron_lengths(x.action, p))))
                       / scale)
    elapsed = time.perf_counter() - t
    ok = res < 1e-10 and edge_err < 1e-10
    report("geometry_kernel", ok, elapsed, 10,
           f"{n} draws, max sphere residual={res:.1e}, max edge error/scale={edge_err:.1e}")

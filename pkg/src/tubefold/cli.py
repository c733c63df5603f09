"""Command line entry point ``tubefold``.

Every CSV starts with a comment line carrying the config hash, followed by
a header row. Exit codes: 0 on success (finite solutions are data), 2 on an
invalid config, 3 when ``validate`` finds a tolerance violation.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (admissible_domain, attractor_scan, find_xi_extrema,
                       find_xi_zeros, island_center, iterate, make_grid, phase_portrait,
                       refine_fixed_point, rotation_number)
from .checks import jacobian_dets, limit_convergence, random_states, sphere_residuals
from .config import ConfigError, ExperimentConfig, load_config
from .errors import DomainError, FiniteSolution, NotSymmetric, TooShort
from .geometry import ZigzagState, is_finite_n
from .integrable import (frequency_profile, genfun_from_params, genfun_quadrature,
                         mean_curvature_tetrahedron, schlafli_residual, xi_f)
from .reconstruction import build_tube, export_obj, self_intersects, vertex_rows

log = logging.getLogger("tubefold")

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATE = 0, 2, 3

DET_TOL = 1e-5
SPHERE_TOL = 1e-10
ORDER_TOL = 0.3


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


class _Writer:
    def __init__(self, out: Path, cfg: ExperimentConfig, command: str):
        self.out, self.cfg, self.command = out, cfg, command
        out.mkdir(parents=True, exist_ok=True)

    def csv(self, name, header, rows):
        path = self.out / name
        with open(path, "w", newline="") as fh:
            fh.write(f"# config_sha256={self.cfg.sha256} command={self.command} "
                     f"name={self.cfg.name} tubefold={__version__}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        return path


def _domain(spec, I_range=None):
    dom = admissible_domain(spec, I_range)
    if not dom:
        raise ConfigError("the module has no admissible action interval")
    return dom


def cmd_freq_profile(cfg, args, out: _Writer):
    spec, fc = cfg.module, cfg.freq_profile
    dom = _domain(spec, fc.I_range)
    lo, hi = dom[0][0], dom[-1][1]
    I = [x for x in np.linspace(lo, hi, fc.samples + 2)[1:-1]
         if any(a < x < b for a, b in dom)]
    prof = frequency_profile(spec, I)
    out.csv("freq_profile.csv", ["I", "xi_unwrapped", "xi_wrapped"], prof.rows())
    roots = find_xi_zeros(spec, fc.I_range, fc.n_seed)
    ext = find_xi_extrema(spec, fc.I_range, fc.n_seed)
    twist = "twist" if not ext.points else "nontwist"
    rows = [("root", r, 0.0) for r in roots.roots]
    rows += [("extremum", a, x) for a, x in ext.points]
    rows += [("domain_lower", a, None) for a, _ in ext.domain]
    rows += [("domain_limit", b, None) for _, b in ext.domain]
    rows += [("gap_lower", a, None) for a, _ in roots.gaps]
    rows += [("gap_upper", b, None) for _, b in roots.gaps]
    out.csv("freq_report.csv", ["kind", "I", "xi"], rows)
    print(f"classification: {twist}")
    for r in roots.roots:
        print(f"root: I = {r:.10f}")
    for a, x in ext.points:
        print(f"extremum: I = {a:.10f}  xi = {x:.10f}")
    print(f"domain_limit: I = {ext.domain_limit:.10f}")
    return EXIT_OK


def _portrait_rows(ds):
    for k, o in enumerate(ds.orbits):
        flag = o.termination.value
        for n, (th, I) in enumerate(o.points):
            yield k, n, float(th), float(I), flag


def cmd_portrait(cfg, args, out):
    spec, pc = cfg.module, cfg.portrait
    g = pc.grid
    arange = g.action_range or (lambda d: (d[0][0], d[-1][1]))(_domain(spec))
    grid = make_grid(g.n_theta, g.n_action, arange, g.theta_range)
    ds = phase_portrait(spec, grid, pc.steps, workers=args.threads,
                        grid_info={"n_theta": g.n_theta, "n_action": g.n_action})
    out.csv("portrait.csv", ["orbit_id", "step", "theta", "I", "termination"],
            _portrait_rows(ds))
    print(f"orbits: {len(ds.orbits)}  surviving: {ds.surviving}")
    if is_finite_n(spec.N) and ds.surviving:
        try:
            fp = refine_fixed_point(spec, island_center(ds).initial)
            kind = "elliptic" if fp.elliptic else "hyperbolic"
            print(f"island center: theta = {fp.state.theta:.10f}  I = {fp.state.action:.10f} "
                  f"({kind}, residual {fp.residual:.1e})")
        except (FiniteSolution, np.linalg.LinAlgError) as exc:
            print(f"island center: refinement failed ({exc})")
    return EXIT_OK


def cmd_orbit(cfg, args, out):
    th, I = cfg.orbit.initial
    o = iterate(cfg.module, ZigzagState.wrapped(th, I), cfg.orbit.steps)
    out.csv("orbit.csv", ["orbit_id", "step", "theta", "I", "termination"],
            ((0, n, float(a), float(b), o.termination.value) for n, (a, b) in enumerate(o.points)))
    print(f"points: {len(o)}  termination: {o.termination.value}")
    if o.finite:
        print(f"finite solution at iteration {o.step}, zigzag {o.zigzag_index}")
    try:
        rho = rotation_number(o)
        print("rotation number: " + ("undecided" if rho is None else f"{rho:.10f}"))
    except TooShort as exc:
        print(f"rotation number: unavailable ({exc})")
    return EXIT_OK


def cmd_genfun_check(cfg, args, out):
    spec, gc = cfg.module, cfg.genfun
    p = spec.params[gc.step]
    lo, hi = gc.I_range or p.admissible_interval
    grid = np.linspace(lo, hi, gc.samples + 2)[1:-1]
    h = 1e-6
    rows = []
    symmetric = True
    ref = None
    for I in grid:
        I = float(I)
        try:
            xi = xi_f(I, p)
        except (FiniteSolution, DomainError):
            continue
        try:
            if symmetric:
                S = genfun_from_params(I, p).value
                dS = (genfun_from_params(I + h, p).value - genfun_from_params(I - h, p).value) / (2 * h)
        except NotSymmetric:
            symmetric = False
        except (FiniteSolution, DomainError):
            continue
        if not symmetric:
            ref = I if ref is None else ref
            try:
                S = genfun_quadrature(ref, I, p)
                dS = (genfun_quadrature(ref, I + h, p)
                      - genfun_quadrature(ref, I - h, p)) / (2 * h)
            except (FiniteSolution, DomainError):
                continue
        try:
            H = mean_curvature_tetrahedron(I, p)
            sch = schlafli_residual(I, p)
        except (DomainError, FiniteSolution):
            H = sch = None
        rows.append((I, xi, dS, S, H, None if H is None else H - S, abs(dS - xi), sch))
    out.csv("genfun_check.csv",
            ["I", "xi_f", "dS_dI", "S_f", "H", "H_minus_S", "derivative_residual",
             "schlafli_residual"], rows)
    method = "closed form" if symmetric else "quadrature"
    if rows:
        print(f"S_f by {method}; max |dS/dI - xi_f| = {max(r[6] for r in rows):.2e}")
        hs = [r[5] for r in rows if r[5] is not None]
        if hs:
            print(f"spread of H - S_f = {max(hs) - min(hs):.2e}")
    return EXIT_OK


def cmd_attractor(cfg, args, out):
    spec, ac = cfg.module, cfg.attractor
    if spec.s == 1.0:
        raise ConfigError("attractor needs module.s != 1")
    g = ac.grid
    arange = g.action_range or (lambda d: (d[0][0], d[-1][1]))(_domain(spec))
    grid = make_grid(g.n_theta, g.n_action, arange, g.theta_range)
    res = attractor_scan(spec, grid, ac.steps, ac.burn_in, workers=args.threads)
    rows = []
    counts = {}
    for k, (x, lab) in enumerate(res):
        counts[lab.kind.value] = counts.get(lab.kind.value, 0) + 1
        fp = lab.fixed_point
        band = lab.band or (None, None)
        rows.append((k, x.theta, x.action, lab.kind.value,
                     fp.theta if fp else None, fp.action if fp else None,
                     lab.rotation, band[0], band[1], lab.steps))
    out.csv("attractor.csv", ["cell_id", "theta0", "I0", "label", "fixed_theta", "fixed_I",
                              "rotation", "band_lo", "band_hi", "steps"], rows)
    print("labels: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return EXIT_OK


def cmd_reconstruct(cfg, args, out):
    rc = cfg.reconstruct
    spec = cfg.module if rc.N is None else cfg.module.with_(N=rc.N)
    if not is_finite_n(spec.N):
        raise ConfigError("reconstruct needs a finite N (set reconstruct.N)")
    if not spec.conservative:
        raise ConfigError("reconstruct supports s = 1 and mu = 0 only")
    th, I = rc.initial
    mesh = build_tube(spec, ZigzagState.wrapped(th, I), rc.rings)
    export_obj(mesh, out.out / "tube.obj")
    out.csv("vertices.csv", ["ring", "module", "vertex_id", "x", "y", "z"], vertex_rows(mesh))
    hit = self_intersects(mesh) if len(mesh.facets) else None
    rows = [("vertices", len(mesh.vertices)), ("facets", len(mesh.facets)),
            ("rings", mesh.n_rings), ("truncated", mesh.truncated),
            ("self_intersects", None if hit is None else hit.found),
            ("facet_pair", None if not hit or not hit.found else f"{hit.pair[0]} {hit.pair[1]}")]
    out.csv("reconstruct_report.csv", ["key", "value"], rows)
    for k, v in rows:
        print(f"{k}: {v}")
    if mesh.truncated:
        print(f"truncated: {mesh.reason}")
    return EXIT_OK


def cmd_validate(cfg, args, out):
    spec, vc = cfg.module, cfg.validate
    rng = np.random.default_rng(args.seed if args.seed is not None else cfg.seed)
    rows = []

    def record(check, value, tol, ok):
        rows.append((check, value, tol, "pass" if ok else "fail"))

    if is_finite_n(spec.N):
        states = random_states(spec, vc.samples, rng)
        dets = jacobian_dets(spec, states)
        target = 1.0 / spec.s
        err = float(np.max(np.abs(dets - target)))
        record(f"jacobian_det (target {target:.6g})", err, DET_TOL, err < DET_TOL)
        res = float(sphere_residuals(spec, vc.samples, rng).max())
        record("sphere_residual", res, SPHERE_TOL, res < SPHERE_TOL)
    if spec.conservative:
        th, I = vc.point
        conv = limit_convergence(spec, ZigzagState.wrapped(th, I), vc.convergence_N)
        r = conv.ratios
        dev = float(np.max(np.abs(r / 2.0 - 1.0)))
        record("convergence_ratio_deviation", dev, ORDER_TOL, dev <= ORDER_TOL)
    else:
        record("convergence_ratio_deviation", None, ORDER_TOL, True)
        rows[-1] = rows[-1][:3] + ("skipped",)
    out.csv("validate.csv", ["check", "value", "tolerance", "status"], rows)
    failed = [r for r in rows if r[3] == "fail"]
    for r in rows:
        print(f"{r[3].upper():7s} {r[0]}: {_fmt(r[1])} (tol {r[2]:g})")
    return EXIT_VALIDATE if failed else EXIT_OK


COMMANDS = {
    "freq-profile": (cmd_freq_profile, "frequency profile with roots, extrema and domain limit"),
    "portrait": (cmd_portrait, "phase portrait over a grid of initial states"),
    "orbit": (cmd_orbit, "single orbit with rotation number"),
    "genfun-check": (cmd_genfun_check, "generating function and mean curvature table"),
    "attractor": (cmd_attractor, "attractor labels over a grid (needs s != 1)"),
    "reconstruct": (cmd_reconstruct, "3D tube mesh and self-intersection report"),
    "validate": (cmd_validate, "invariant suite: Jacobians, sphere residuals, convergence"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tubefold", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="experiment YAML file")
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        sp.add_argument("--threads", type=int, default=1, help="worker processes")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must fit in an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    func = COMMANDS[args.command][0]
    log.info("running %s on %s", args.command, args.config)
    try:
        return func(cfg, args, _Writer(Path(args.out), cfg, args.command))
    except ConfigError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Orbits, phase portraits, frequency roots and extrema, and attractor scans."""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import FiniteSolution, TooShort
from .geometry import ZigzagState, is_finite_n, wrap_angle
from .integrable import integrable_map, module_interval, total_xi
from .maps import ModuleSpec, _module_floats, jacobian, module_map_array

TWO_PI = 2.0 * math.pi


class Termination(enum.Enum):
    MAX_STEPS = "max_steps"
    FINITE_SOLUTION = "finite_solution"


@dataclass
class Orbit:
    """Iterates of the module map; ``points[:, 0]`` is theta, ``points[:, 1]`` is I.

    ``points[0]`` is the initial state. On a finite solution ``step`` is
    the iteration that failed and ``zigzag_index`` the step inside the module.
    """

    initial: ZigzagState
    points: np.ndarray
    termination: Termination = Termination.MAX_STEPS
    step: int | None = None
    zigzag_index: int | None = None

    def __len__(self):
        return len(self.points)

    @property
    def finite(self) -> bool:
        return self.termination is Termination.FINITE_SOLUTION

    def states(self):
        for th, I in self.points:
            yield ZigzagState(float(th), float(I))


def iterate(spec: ModuleSpec, x0: ZigzagState, max_steps: int) -> Orbit:
    """Iterate the module map up to ``max_steps`` times or until termination."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    pts = np.empty((max_steps + 1, 2))
    pts[0] = x0.theta, x0.action
    th, I = x0.theta, x0.action
    finite_n = is_finite_n(spec.N)
    n = 0
    try:
        while n < max_steps:
            if finite_n:
                th, I = _module_floats(th, I, spec)
            else:
                out = integrable_map(ZigzagState(th, I), spec)
                th, I = out.theta, out.action
            n += 1
            pts[n] = th, I
    except FiniteSolution as exc:
        return Orbit(x0, pts[: n + 1].copy(), Termination.FINITE_SOLUTION,
                     step=n + 1, zigzag_index=exc.step)
    return Orbit(x0, pts)


def _run(args):
    spec, x0, n = args
    return iterate(spec, x0, n)


def _pmap(func, items, workers):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(func, items, chunksize=max(1, len(items) // (4 * workers))))
    return [func(it) for it in items]


def make_grid(n_theta: int, n_action: int, action_range: tuple[float, float],
              theta_range: tuple[float, float] = (-math.pi, math.pi)) -> list[ZigzagState]:
    """Cell-centred grid of initial states, theta varying fastest."""
    t0, t1 = theta_range
    a0, a1 = action_range
    thetas = t0 + (t1 - t0) * (np.arange(n_theta) + 0.5) / n_theta
    actions = a0 + (a1 - a0) * (np.arange(n_action) + 0.5) / n_action
    return [ZigzagState.wrapped(float(t), float(a)) for a in actions for t in thetas]


@dataclass
class PortraitDataset:
    module: ModuleSpec
    orbits: list[Orbit]
    grid: dict = field(default_factory=dict)

    @property
    def surviving(self) -> int:
        return sum(not o.finite for o in self.orbits)


def phase_portrait(spec: ModuleSpec, initial_grid: Sequence[ZigzagState],
                   steps_per_orbit: int, workers: int = 1,
                   grid_info: dict | None = None) -> PortraitDataset:
    """One orbit per initial condition, in grid order."""
    if not initial_grid:
        raise ValueError("empty initial grid")
    orbits = _pmap(_run, [(spec, x, steps_per_orbit) for x in initial_grid], workers)
    return PortraitDataset(spec, orbits, dict(grid_info or {}))


# -- rotation numbers ----------------------------------------------------------

def _increments(points: np.ndarray) -> np.ndarray:
    d = np.diff(points[:, 0])
    return np.mod(d + math.pi, TWO_PI) - math.pi


def rotation_number(orbit: Orbit, min_points: int = 100,
                    tail_tol: float = 1e-3) -> float | None:
    """Mean wrapped angular increment per iteration.

    Returns ``None`` (undecided) when the running Birkhoff average still
    fluctuates by more than ``tail_tol`` over the last half of the orbit.
    """
    if len(orbit) < min_points or orbit.finite:
        raise TooShort(f"need >= {min_points} points of a non-terminated orbit")
    inc = _increments(orbit.points)
    running = np.cumsum(inc) / np.arange(1, len(inc) + 1)
    tail = running[len(running) // 2:]
    if tail.max() - tail.min() > tail_tol:
        return None
    return float(running[-1])


# -- frequency roots and extrema -----------------------------------------------

def _valid(spec, I):
    try:
        total_xi(I, spec)
        return True
    except FiniteSolution:
        return False


def admissible_domain(spec: ModuleSpec, I_range: tuple[float, float] | None = None,
                      n_scan: int = 2000, tol: float = 1e-13) -> list[tuple[float, float]]:
    """Maximal sub-intervals of ``I_range`` where the total frequency exists."""
    lo, hi = I_range if I_range is not None else module_interval(spec)
    xs = lo + (hi - lo) * (np.arange(n_scan + 1) / n_scan)
    # open interval ends are singular; step inside only when needed
    if not _valid(spec, float(xs[0])):
        xs[0] += 2e-12
    if not _valid(spec, float(xs[-1])):
        xs[-1] -= 2e-12
    ok = [_valid(spec, float(x)) for x in xs]

    def edge(a, b):
        # a valid, b invalid
        while abs(b - a) > tol:
            mid = 0.5 * (a + b)
            if _valid(spec, mid):
                a = mid
            else:
                b = mid
        return a

    out, start = [], None
    for j, x in enumerate(xs):
        if ok[j] and start is None:
            start = float(x) if j == 0 else edge(float(x), float(xs[j - 1]))
        if start is not None and (not ok[j] or j == len(xs) - 1):
            end = float(x) if ok[j] else edge(float(xs[j - 1]), float(x))
            out.append((start, end))
            start = None
    return out


class Roots(NamedTuple):
    roots: list[float]
    gaps: list[tuple[float, float]]


def _gaps(domain, lo, hi):
    gaps, cur = [], lo
    for a, b in domain:
        if a > cur:
            gaps.append((cur, a))
        cur = b
    if cur < hi:
        gaps.append((cur, hi))
    return gaps


def find_xi_zeros(spec: ModuleSpec, I_range: tuple[float, float] | None = None,
                  n_seed: int = 400, xtol: float = 1e-12) -> Roots:
    """Actions where the wrapped total frequency vanishes."""
    lo, hi = I_range if I_range is not None else module_interval(spec)
    domain = admissible_domain(spec, (lo, hi))
    wrapped = lambda I: total_xi(I, spec).wrapped
    roots = []
    for a, b in domain:
        xs = np.linspace(a, b, max(3, int(n_seed * (b - a) / (hi - lo)) + 2))
        ys = [wrapped(float(x)) for x in xs]
        for j in range(len(xs) - 1):
            y0, y1 = ys[j], ys[j + 1]
            if y0 == 0.0:
                roots.append(float(xs[j]))
                continue
            if y0 * y1 < 0 and abs(y1 - y0) < math.pi:
                r = brentq(wrapped, xs[j], xs[j + 1], xtol=xtol)
                if abs(wrapped(r)) < 1e-8:
                    roots.append(float(r))
    return Roots(sorted(set(roots)), _gaps(domain, lo, hi))


def xi_slope(spec: ModuleSpec, I: float) -> float:
    """Central-difference dxi/dI with step sqrt(eps) * max(1, |I|)."""
    h = math.sqrt(np.finfo(float).eps) * max(1.0, abs(I))
    return (total_xi(I + h, spec).unwrapped - total_xi(I - h, spec).unwrapped) / (2 * h)


class Extrema(NamedTuple):
    points: list[tuple[float, float]]
    domain: list[tuple[float, float]]

    @property
    def domain_limit(self) -> float:
        return self.domain[-1][1]


def find_xi_extrema(spec: ModuleSpec, I_range: tuple[float, float] | None = None,
                    n_seed: int = 400, xtol: float = 1e-12) -> Extrema:
    """Interior local extrema (shearless actions) of the total frequency."""
    lo, hi = I_range if I_range is not None else module_interval(spec)
    domain = admissible_domain(spec, (lo, hi))
    pad = 1e-6
    pts = []
    for a, b in domain:
        if b - a <= 2 * pad:
            continue
        xs = np.linspace(a + pad, b - pad, max(3, int(n_seed * (b - a) / (hi - lo)) + 2))
        ds = [xi_slope(spec, float(x)) for x in xs]
        for j in range(len(xs) - 1):
            if ds[j] * ds[j + 1] < 0:
                r = brentq(lambda I: xi_slope(spec, I), xs[j], xs[j + 1], xtol=xtol)
                pts.append((float(r), total_xi(r, spec).unwrapped))
    return Extrema(pts, domain)


class TwistClass(NamedTuple):
    twist: bool
    extrema: list[tuple[float, float]]

    @property
    def label(self) -> str:
        return "twist" if self.twist else "nontwist"


def classify_twist(spec: ModuleSpec, I_range: tuple[float, float] | None = None,
                   n_seed: int = 400) -> TwistClass:
    ext = find_xi_extrema(spec, I_range, n_seed)
    return TwistClass(not ext.points, ext.points)


# -- fixed points and islands ------------------------------------------------

def _circular_extent(theta: np.ndarray) -> float:
    """Length of the smallest arc containing all angles."""
    t = np.sort(np.mod(theta, TWO_PI))
    if len(t) < 2:
        return 0.0
    gaps = np.diff(np.concatenate([t, [t[0] + TWO_PI]]))
    return float(TWO_PI - gaps.max())


def orbit_diameter(orbit: Orbit) -> float:
    """Bounding-box diagonal of an orbit, angles measured on the circle."""
    p = orbit.points
    return math.hypot(_circular_extent(p[:, 0]), float(np.ptp(p[:, 1])))


def island_center(dataset: PortraitDataset) -> Orbit:
    """Surviving orbit of smallest diameter: the grid cell nearest an elliptic point."""
    alive = [o for o in dataset.orbits if not o.finite and len(o) > 1]
    if not alive:
        raise TooShort("no surviving orbits")
    return min(alive, key=orbit_diameter)


class FixedPoint(NamedTuple):
    state: ZigzagState
    jacobian: np.ndarray
    residual: float
    iterations: int

    @property
    def elliptic(self) -> bool:
        return abs(float(np.trace(self.jacobian))) < 2.0


def _residual(spec, x):
    y = module_map_array(x, spec)
    return np.array([wrap_angle(y[0] - x[0]), y[1] - x[1]])


def refine_fixed_point(spec: ModuleSpec, guess: ZigzagState, tol: float = 1e-12,
                       max_iter: int = 50) -> FixedPoint:
    """Damped Newton iteration on M(x) - x = 0 starting from ``guess``."""
    x = guess.as_array()
    F = _residual(spec, x)
    it = 0
    for it in range(1, max_iter + 1):
        if np.linalg.norm(F) < tol:
            break
        J = jacobian(spec, ZigzagState.wrapped(x[0], x[1])) - np.eye(2)
        dx = np.linalg.solve(J, -F)
        lam = 1.0
        while True:
            try:
                xn = x + lam * dx
                Fn = _residual(spec, xn)
                if np.linalg.norm(Fn) < np.linalg.norm(F) or lam < 1e-4:
                    break
            except FiniteSolution:
                pass
            lam *= 0.5
            if lam < 1e-6:
                raise FiniteSolution("fixed-point search left the admissible domain")
        x, F = xn, Fn
    st = ZigzagState.wrapped(float(x[0]), float(x[1]))
    return FixedPoint(st, jacobian(spec, st), float(np.linalg.norm(F)), it)


# -- attractors -------------------------------------------------------------------

class AttractorKind(enum.Enum):
    POINT = "point"
    QUASI_PERIODIC = "quasi_periodic"
    FINITE = "finite"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class AttractorLabel:
    """Label plus the diagnostics behind it.

    ``fixed_point`` is set for point attractors, ``rotation`` and
    ``band`` (min and max of I) for quasi-periodic ones.
    """

    kind: AttractorKind
    fixed_point: ZigzagState | None = None
    rotation: float | None = None
    band: tuple[float, float] | None = None
    diameter: float | None = None
    steps: int = 0


POINT_DIAMETER = 1e-8
BAND_WIDTH = 1e-4


def label_orbit(spec: ModuleSpec, x0: ZigzagState, max_steps: int, burn_in: int = 1000,
                point_diameter: float = POINT_DIAMETER,
                band_width: float = BAND_WIDTH) -> AttractorLabel:
    warm = iterate(spec, x0, burn_in) if burn_in > 0 else None
    if warm is not None and warm.finite:
        return AttractorLabel(AttractorKind.FINITE, steps=len(warm) - 1)
    start = ZigzagState(*map(float, warm.points[-1])) if warm is not None else x0
    orb = iterate(spec, start, max_steps)
    if orb.finite:
        return AttractorLabel(AttractorKind.FINITE, steps=burn_in + len(orb) - 1)
    diam = orbit_diameter(orb)
    if diam < point_diameter:
        return AttractorLabel(AttractorKind.POINT, fixed_point=start, diameter=diam,
                              steps=burn_in + max_steps)
    I = orb.points[:, 1]
    band = (float(I.min()), float(I.max()))
    rot = rotation_number(orb) if len(orb) >= 100 else None
    if band[1] - band[0] < band_width and rot is not None:
        return AttractorLabel(AttractorKind.QUASI_PERIODIC, rotation=rot, band=band,
                              diameter=diam, steps=burn_in + max_steps)
    return AttractorLabel(AttractorKind.UNDECIDED, rotation=rot, band=band,
                          diameter=diam, steps=burn_in + max_steps)


def _label(args):
    spec, x0, max_steps, burn_in = args
    return label_orbit(spec, x0, max_steps, burn_in)


def attractor_scan(spec: ModuleSpec, grid: Sequence[ZigzagState], max_steps: int,
                   burn_in: int = 1000, workers: int = 1) -> list[tuple[ZigzagState, AttractorLabel]]:
    """Label where each initial condition of a dissipative module ends up."""
    if spec.s == 1.0:
        raise ValueError("attractor scans need a conformally symplectic module (s != 1)")
    labels = _pmap(_label, [(spec, x, max_steps, burn_in) for x in grid], workers)
    return list(zip(grid, labels))

"""Numerical invariant checks shared by the ``validate`` command and the tests."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError, FiniteSolution
from .geometry import (FoldParams, ZigzagState, alpha_beta, is_finite_n, local_frame,
                       sphere_intersection, wrap_angle)
from .integrable import module_interval, total_xi
from .maps import ModuleSpec, jacobian_det, module_map, module_map_array


def random_states(spec: ModuleSpec, n: int, rng: np.random.Generator,
                  max_tries: int = 100) -> list[ZigzagState]:
    """``n`` uniform (theta, I) draws on which the module map is defined.

    A draw is kept only if the map is also defined on its Jacobian stencil.
    """
    lo, hi = module_interval(spec)
    out = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > max_tries * n:
            raise RuntimeError("could not draw enough admissible states")
        th = rng.uniform(-math.pi, math.pi)
        I = rng.uniform(lo, hi)
        try:
            x = ZigzagState.wrapped(th, I)
            for dth, dI in ((0, 0), (1e-5, 0), (-1e-5, 0), (0, 1e-5), (0, -1e-5)):
                module_map_array((th + dth, I + dI), spec)
        except (FiniteSolution, DomainError):
            continue
        out.append(x)
    return out


def jacobian_dets(spec: ModuleSpec, states) -> np.ndarray:
    return np.array([jacobian_det(spec, x) for x in states])


def random_fold_draws(p: FoldParams, n: int, rng: np.random.Generator):
    """States admissible for a single fold."""
    lo, hi = p.admissible_interval
    out = []
    while len(out) < n:
        x = ZigzagState.wrapped(rng.uniform(-math.pi, math.pi), rng.uniform(lo, hi))
        try:
            sphere_intersection(x, p)
        except (FiniteSolution, DomainError):
            continue
        out.append(x)
    return out


def sphere_residual(state: ZigzagState, p: FoldParams) -> float:
    """Largest |distance - radius| of V to U1, U2, U3.

    Distances are taken relative to U1, whose global height I*cot(pi/N) would
    otherwise dominate the rounding error at large N.
    """
    I, th = state.action, state.theta
    alpha, beta = alpha_beta(I, p.l_L, p.l_R)
    d2 = p.l_L * np.array([beta * math.cos(th), -alpha, beta * math.sin(th)])
    d3 = np.array([0.0, -2.0 * I, 0.0])
    f = local_frame(state, p)
    c = sphere_intersection(state, p)
    w = c.e1 * f.e1 + c.e2 * f.e2 + c.e3 * f.e3
    return max(abs(float(np.linalg.norm(w - d)) - r)
               for d, r in ((np.zeros(3), p.r1), (d2, p.r2), (d3, p.r3)))


def sphere_residuals(spec: ModuleSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Residuals over ``n`` draws for every step of the module."""
    if not is_finite_n(spec.N):
        raise DomainError("sphere residuals need a finite N")
    res = []
    for p in spec.params:
        res += [sphere_residual(x, p) for x in random_fold_draws(p, n, rng)]
    return np.array(res)


def map_distance(a: ZigzagState, b: ZigzagState) -> float:
    return math.hypot(wrap_angle(a.theta - b.theta), a.action - b.action)


class Convergence(NamedTuple):
    N: tuple[int, ...]
    errors: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        return self.errors[:-1] / self.errors[1:]


def limit_convergence(spec: ModuleSpec, point: ZigzagState, Ns) -> Convergence:
    """``|M_N(x) - M_inf(x)|`` over a list of module counts."""
    ref = module_map(point, spec.with_(N=math.inf))
    errs = np.array([map_distance(module_map(point, spec.with_(N=n)), ref) for n in Ns])
    return Convergence(tuple(Ns), errs)


def frequency_limit_error(spec: ModuleSpec, I: float, theta: float = 0.0,
                          N: int = 1_000_000) -> float:
    """Angular advance of one module at large N against the total frequency."""
    if not spec.conservative:
        raise ValueError("needs a conservative module")
    x = ZigzagState.wrapped(theta, I)
    y = module_map(x, spec.with_(N=N))
    return abs(wrap_angle(y.theta - x.theta - total_xi(I, spec).unwrapped))

"""Folding maps of the tubular tessellation.

``map_f`` advances a zigzag through one three-sphere intersection,
``map_g`` re-parametrizes a zigzag whose next vertex is built without a
circumferential shift, and ``module_map`` composes the steps of a module,
including the similarity scaling ``s`` and drift ``mu`` of the conformally
symplectic extension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, FiniteSolution
from .geometry import (FoldParams, ZigzagState, _components,
                       is_finite_n, wrap_angle)

#: I' at or below this is the singular point I = 0.
SINGULAR_ACTION = 1e-12
#: Default central-difference step for Jacobians.
JACOBIAN_H = 1e-6

MOUNTAIN, VALLEY = 1, -1


def parse_sigma(value) -> int:
    """Accept +1/-1 or the strings 'M'/'V'."""
    if isinstance(value, str):
        v = value.strip().upper()
        if v == "M":
            return MOUNTAIN
        if v == "V":
            return VALLEY
        raise DomainError(f"mountain/valley label must be 'M' or 'V', got {value!r}")
    if value in (1, -1):
        return int(value)
    raise DomainError(f"sigma must be +1/-1 or 'M'/'V', got {value!r}")


# -- single maps ----------------------------------------------------------

def _f(theta: float, I: float, p: FoldParams) -> tuple[float, float]:
    alpha, beta, c1, c2, c3, _ = _components(I, p)
    c, s = math.cos(theta), math.sin(theta)
    # w = V - U1 in global coordinates
    wx = (c1 * beta - c2 * alpha) * c + c3 * s
    wy = -c1 * alpha - c2 * beta
    wz = (c1 * beta - c2 * alpha) * s - c3 * c
    # u = R V - V = (R - E)(U1 + w), with (R - E) U1 = (0, -2I, 0)
    S, Cm1 = p.sin_2pn, p.cosm1_2pn
    uy = -2.0 * I + Cm1 * wy - S * wz
    uz = S * wy + Cm1 * wz
    norm_u = math.hypot(uy, uz)
    I_new = 0.5 * norm_u
    if I_new <= SINGULAR_ACTION:
        raise FiniteSolution("singular crossing I' -> 0")
    # A discrete orbit jumps over I = 0 rather than landing on it: the new
    # chord then points against U3 - U1 (V lies across the tube axis) and
    # the endpoints have swapped.
    if uy >= 0.0:
        raise FiniteSolution("U1 and U3 interchange (orbit crossed I = 0)")
    r1, r3 = p.r1, p.r3
    # next triplet is (V, U3, R V): lengths (r3, r1), foot of U3 on u
    along = (r3 * r3 + 4.0 * I_new * I_new - r1 * r1) / (4.0 * I_new) / norm_u
    vx = -wx
    vy = -2.0 * I - wy - along * uy
    vz = -wz - along * uz
    y = (-vz * uy + vy * uz) / norm_u
    return wrap_angle(math.atan2(y, vx)), I_new


def map_f(state: ZigzagState, p: FoldParams) -> ZigzagState:
    """One three-sphere folding step (theta, I) -> (theta', I').

    Raises FiniteSolution when the spheres do not meet or the new zigzag
    collapses. Requires finite ``p.N``.
    """
    if not is_finite_n(p.N):
        raise DomainError("map_f needs a finite module count N")
    return ZigzagState(*_f(state.theta, state.action, p))


def _g(theta: float, I: float, r3: float, r1: float, sn: float, cs: float):
    # Every term is pre-multiplied by sin(pi/N) > 0, which leaves arctan2
    # unchanged and keeps the expression bounded as N grows.
    four_i2 = 4.0 * I * I
    t1sq = 16.0 * I * I * r3 * r3 - (four_i2 + r3 * r3 - r1 * r1) ** 2
    if t1sq < 0.0:
        if t1sq < -1e-12 * max(1.0, (four_i2 * r3) ** 2):
            raise FiniteSolution("map g: T1 is imaginary")
        t1sq = 0.0
    T1 = math.sqrt(t1sq)
    st, ct = math.sin(theta), math.cos(theta)
    d2 = (r1 * r1 - r3 * r3) ** 2
    s_t2 = four_i2 * cs + T1 * sn * st           # sin(pi/N) * T2
    root = math.sqrt(d2 * sn * sn + s_t2 * s_t2)  # sin(pi/N) * sqrt(D^2 + T2^2)
    y = -(s_t2 * (T1 * cs * st - four_i2 * sn) + d2 * cs * sn)
    x = -T1 * ct * root
    I_new = root / (4.0 * I)
    if I_new <= SINGULAR_ACTION:
        raise FiniteSolution("map g: I* = 0")
    # s_t2 is proportional to the height of U2 above the axis
    if s_t2 <= 0.0:
        raise FiniteSolution("map g: endpoints interchange (U2 across the axis)")
    return wrap_angle(math.atan2(y, x)), I_new


def map_g(state: ZigzagState, r3: float, r1: float, N) -> ZigzagState:
    """Re-parametrize the zigzag so its U2 vertices become the endpoints.

    ``r3`` and ``r1`` are the current zigzag's left and right crease
    lengths. Raises FiniteSolution if T1 is imaginary or I* vanishes.
    """
    if math.isinf(N) or int(N) != N or N <= 2:
        raise DomainError(f"map_g needs a finite module count N > 2, got {N!r}")
    if not state.action > 0.0:
        raise DomainError("action must be positive")
    sn, cs = math.sin(math.pi / N), math.cos(math.pi / N)
    return ZigzagState(*_g(state.theta, state.action, r3, r1, sn, cs))


# -- module description ---------------------------------------------------

@dataclass(frozen=True)
class StepSpec:
    """One zigzag of a module.

    ``k = 1`` applies map g after f. ``swap_lr`` feeds (l_R, l_L) to f,
    which is required right after a g step.
    """

    l_L: float
    l_M: float
    l_R: float
    sigma: int = MOUNTAIN
    k: int = 0
    swap_lr: bool = False

    def __post_init__(self):
        for name in ("l_L", "l_M", "l_R"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise DomainError(f"{name}={v!r} must be a positive length")
        object.__setattr__(self, "sigma", parse_sigma(self.sigma))
        if self.k not in (0, 1):
            raise DomainError(f"k={self.k!r} must be 0 or 1")

    @property
    def lengths(self) -> tuple[float, float, float]:
        return self.l_L, self.l_M, self.l_R

    @property
    def f_lengths(self) -> tuple[float, float]:
        """(left, right) as passed to f."""
        return (self.l_R, self.l_L) if self.swap_lr else (self.l_L, self.l_R)


def fold_params(step: StepSpec, next_step: StepSpec, N, scale: float = 1.0) -> FoldParams:
    """Parameters of f for ``step``; radii come from the next zigzag."""
    lL, lR = step.f_lengths
    return FoldParams(lL, lR, N, scale * next_step.l_R, next_step.l_M,
                      scale * next_step.l_L, step.sigma)


@dataclass(frozen=True)
class ModuleSpec:
    """A module of ``m`` zigzag steps, closed periodically.

    ``s`` is the similarity scaling applied at the last step and ``mu`` the
    drift added to the action afterwards; ``s = 1, mu = 0`` is the
    area-preserving case.
    """

    N: float
    steps: tuple[StepSpec, ...]
    s: float = 1.0
    mu: float = 0.0
    params: tuple[FoldParams, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        steps = tuple(self.steps)
        if not steps:
            raise DomainError("a module needs at least one step")
        object.__setattr__(self, "steps", steps)
        if not (self.s > 0.0 and math.isfinite(self.s)):
            raise DomainError(f"s={self.s!r} must be positive")
        if not math.isfinite(self.mu):
            raise DomainError(f"mu={self.mu!r} must be finite")
        m = len(steps)
        for i, st in enumerate(steps):
            nxt = steps[(i + 1) % m]
            if nxt.swap_lr != bool(st.k):
                raise DomainError(
                    f"step {(i + 1) % m}: swap_lr must be {bool(st.k)} because "
                    f"step {i} has k={st.k}")
        params = tuple(
            fold_params(st, steps[(i + 1) % m], self.N,
                        self.s if i == m - 1 else 1.0)
            for i, st in enumerate(steps))
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "N", params[0].N)

    @property
    def m(self) -> int:
        return len(self.steps)

    @property
    def conservative(self) -> bool:
        return self.s == 1.0 and self.mu == 0.0

    def with_(self, **changes) -> "ModuleSpec":
        kw = dict(N=self.N, steps=self.steps, s=self.s, mu=self.mu)
        kw.update(changes)
        return ModuleSpec(**kw)

    def g_radii(self, i: int) -> tuple[float, float]:
        """(r3, r1) handed to g after step ``i``."""
        p = self.params[i]
        return p.r3, p.r1


def case_a(lengths: Sequence[Sequence[float]], sigmas: Sequence, N,
           s: float = 1.0, mu: float = 0.0) -> ModuleSpec:
    """Module with shifted (six-valent) connectivity only: all k = 0."""
    steps = [StepSpec(*l, sigma=sg) for l, sg in zip(lengths, sigmas, strict=True)]
    return ModuleSpec(N, tuple(steps), s, mu)


def case_b(lengths: Sequence[Sequence[float]], sigmas: Sequence, N,
           k: Sequence[int] = (1, 0, 1, 0), s: float = 1.0,
           mu: float = 0.0) -> ModuleSpec:
    """Module with re-parametrized connectivity; swaps follow from ``k``."""
    m = len(lengths)
    if len(k) != m:
        raise DomainError("k must have one entry per step")
    steps = [StepSpec(*lengths[i], sigma=sigmas[i], k=k[i],
                      swap_lr=bool(k[(i - 1) % m])) for i in range(m)]
    return ModuleSpec(N, tuple(steps), s, mu)


EXPERIMENT1_LENGTHS = ((0.75, 0.69, 0.75), (1.11, 0.58, 1.11), (0.90, 1.49, 0.90))
EXPERIMENT2_LENGTHS = ((0.8552, 0.9913, 0.9748), (1.1342, 1.1798, 1.0774),
                       (1.1932, 0.9922, 0.8522), (0.9105, 0.9236, 1.0664))
EXPERIMENT3_LENGTHS = ((1.0, 0.91, 1.0), (math.sqrt(2), 0.91, math.sqrt(2)),
                       (math.sqrt(2), 1.91, math.sqrt(2)))


def experiment1(N=3000) -> ModuleSpec:
    """Twist module, three shifted zigzags, all mountain."""
    return case_a(EXPERIMENT1_LENGTHS, "MMM", N)


def experiment2(N=5000) -> ModuleSpec:
    """Nontwist module, four zigzags with g after steps 0 and 2."""
    return case_b(EXPERIMENT2_LENGTHS, "VVMM", N, k=(1, 0, 1, 0))


def experiment3(N=1_000_000, s=1.1, mu=0.05) -> ModuleSpec:
    """Conformally symplectic module with scaling ``s`` and drift ``mu``."""
    return case_a(EXPERIMENT3_LENGTHS, "MMM", N, s=s, mu=mu)


# -- compositions ---------------------------------------------------------

def step_map(state: ZigzagState, step: StepSpec, next_step: StepSpec, N,
             scale: float = 1.0) -> ZigzagState:
    """Apply f for ``step`` and then g when ``step.k == 1``."""
    p = fold_params(step, next_step, N, scale)
    out = map_f(state, p)
    if step.k:
        out = map_g(out, p.r3, p.r1, p.N)
    return out


def _module_floats(theta: float, I: float, spec: ModuleSpec):
    """Module map on raw floats; FiniteSolution carries the step index."""
    N = spec.N
    sn, cs = math.sin(math.pi / N), math.cos(math.pi / N)
    for i, (st, p) in enumerate(zip(spec.steps, spec.params)):
        try:
            th, In = _f(theta, I, p)
            if st.k:
                th, In = _g(th, In, p.r3, p.r1, sn, cs)
        except (FiniteSolution, DomainError) as exc:
            raise FiniteSolution(str(exc), step=i,
                                 state=ZigzagState.wrapped(theta, I)) from None
        theta, I = th, In
    if spec.s != 1.0 or spec.mu != 0.0:
        I_new = I / spec.s + spec.mu
        if I_new <= SINGULAR_ACTION:
            raise FiniteSolution("drift map pushed the action through zero",
                                 step=spec.m, state=ZigzagState(theta, I))
        I = I_new
    return theta, I


def module_map(state: ZigzagState, spec: ModuleSpec) -> ZigzagState:
    """Transfer map across one ring (all ``m`` steps, then scaling/drift).

    For ``N = INFINITE`` this is the integrable limit map.
    """
    if not is_finite_n(spec.N):
        from .integrable import integrable_map
        return integrable_map(state, spec)
    return ZigzagState(*_module_floats(state.theta, state.action, spec))


def module_map_array(x, spec: ModuleSpec) -> np.ndarray:
    """``module_map`` on a length-2 array (theta need not be wrapped)."""
    st = ZigzagState.wrapped(float(x[0]), float(x[1]))
    out = module_map(st, spec)
    return np.array([out.theta, out.action])


def jacobian(spec: ModuleSpec, state: ZigzagState, h: float = JACOBIAN_H) -> np.ndarray:
    """Central-difference Jacobian of the module map in (theta, I)."""
    th, I = state.theta, state.action
    cols = []
    for dth, dI in ((h, 0.0), (0.0, h)):
        a = module_map_array((th + dth, I + dI), spec)
        b = module_map_array((th - dth, I - dI), spec)
        cols.append([wrap_angle(a[0] - b[0]) / (2 * h), (a[1] - b[1]) / (2 * h)])
    return np.array(cols).T


def jacobian_det(spec: ModuleSpec, state: ZigzagState, h: float = JACOBIAN_H) -> float:
    """Finite-difference Jacobian determinant; 1 for area-preserving modules,
    1/s with similarity scaling."""
    return float(np.linalg.det(jacobian(spec, state, h)))

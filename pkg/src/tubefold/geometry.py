"""Geometric kernel: zigzag vertices, the local frame at U1 and the
three-sphere intersection that every folding map is built from.

Coordinates follow the tube convention: X is the cylinder axis, the module
endpoints U1 and U3 lie in the plane X = 0 and U3 is U1 rotated by 2*pi/N
about X.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, FiniteSolution

INFINITE = math.inf

#: Endpoint margin of the admissible action interval (beta -> 0 there).
ENDPOINT_EPS = 1e-12
#: Slightly negative discriminants are treated as tangent spheres.
GAMMA_CLAMP = 1e-12
#: Frame denominator 4*I*beta below this is a degenerate (collinear) triplet.
FRAME_EPS = 1e-10

TWO_PI = 2.0 * math.pi

#: Generator of infinitesimal rotations about the X axis.
J_X = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])


def wrap_angle(x: float) -> float:
    """Map an angle to (-pi, pi]."""
    y = math.remainder(x, TWO_PI)
    if y <= -math.pi:
        y += TWO_PI
    return y


def is_finite_n(N) -> bool:
    return not math.isinf(N)


@dataclass(frozen=True, slots=True)
class ZigzagState:
    """Phase-space point (theta, I) of one zigzag."""

    theta: float
    action: float

    def __post_init__(self):
        if not (-math.pi < self.theta <= math.pi):
            raise DomainError(f"theta={self.theta!r} not in (-pi, pi]")
        if not self.action > 0.0:
            raise DomainError(f"action={self.action!r} must be positive")

    @classmethod
    def wrapped(cls, theta: float, action: float) -> "ZigzagState":
        return cls(wrap_angle(theta), action)

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.action])


def _check_n(N):
    if math.isinf(N):
        if N < 0:
            raise DomainError("N must be +inf or an integer > 2")
        return INFINITE
    if int(N) != N or N <= 2:
        raise DomainError(f"N={N!r} must be an integer > 2 or INFINITE")
    return int(N)


@dataclass(frozen=True, slots=True)
class FoldParams:
    """Geometric parameters of one application of the folding map f.

    ``sigma`` is +1 for a mountain and -1 for a valley assignment. ``N`` is
    an integer > 2 or :data:`INFINITE`.
    """

    l_L: float
    l_R: float
    N: float
    r1: float
    r2: float
    r3: float
    sigma: int = 1
    # trig of pi/N, computed once
    sin_pn: float = field(init=False, repr=False, compare=False)
    cos_pn: float = field(init=False, repr=False, compare=False)
    sin_2pn: float = field(init=False, repr=False, compare=False)
    cosm1_2pn: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("l_L", "l_R", "r1", "r2", "r3"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise DomainError(f"{name}={v!r} must be a positive length")
        if self.sigma not in (1, -1):
            raise DomainError(f"sigma={self.sigma!r} must be +1 or -1")
        N = _check_n(self.N)
        object.__setattr__(self, "N", N)
        if math.isinf(N):
            sp, cp = 0.0, 1.0
        else:
            sp, cp = math.sin(math.pi / N), math.cos(math.pi / N)
        object.__setattr__(self, "sin_pn", sp)
        object.__setattr__(self, "cos_pn", cp)
        object.__setattr__(self, "sin_2pn", 2.0 * sp * cp)
        # cos(2a) - 1 without cancellation
        object.__setattr__(self, "cosm1_2pn", -2.0 * sp * sp)

    @property
    def admissible_interval(self) -> tuple[float, float]:
        return abs(self.l_L - self.l_R) / 2.0, (self.l_L + self.l_R) / 2.0

    @property
    def cot_pn(self) -> float:
        if math.isinf(self.N):
            raise DomainError("cot(pi/N) is infinite for N = INFINITE")
        return self.cos_pn / self.sin_pn


class LocalFrame(NamedTuple):
    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray


class IntersectionResult(NamedTuple):
    """Components of V in the frame at U1 and the discriminant gamma."""

    e1: float
    e2: float
    e3: float
    gamma: float


def alpha_beta(action: float, l_L: float, l_R: float) -> tuple[float, float]:
    """Cosine and sine of the angle U2-U1-U3 of the zigzag triangle.

    Raises DomainError unless ``action`` lies strictly inside
    ``(|l_L - l_R|/2, (l_L + l_R)/2)``.
    """
    lo = abs(l_L - l_R) / 2.0
    hi = (l_L + l_R) / 2.0
    if not (lo + ENDPOINT_EPS < action < hi - ENDPOINT_EPS):
        raise DomainError(
            f"action {action!r} outside admissible interval ({lo}, {hi})")
    alpha = (l_L * l_L + 4.0 * action * action - l_R * l_R) / (4.0 * action * l_L)
    beta = math.sqrt(max((1.0 - alpha) * (1.0 + alpha), 0.0))
    return alpha, beta


def _components(action: float, p: FoldParams):
    """alpha, beta and the frame components (c1, c2, c3, gamma) of V."""
    alpha, beta = alpha_beta(action, p.l_L, p.l_R)
    denom = 4.0 * action * beta
    if denom < FRAME_EPS:
        raise FiniteSolution("degenerate zigzag triangle (4*I*beta ~ 0)")
    r1s = p.r1 * p.r1
    c1 = (r1s + p.l_L * p.l_L - p.r2 * p.r2) / (2.0 * p.l_L)
    c2 = (r1s - p.r3 * p.r3 + 4.0 * action * action
          - 4.0 * action * c1 * alpha) / denom
    gamma = r1s - c1 * c1 - c2 * c2
    if gamma < 0.0:
        if gamma < -GAMMA_CLAMP:
            raise FiniteSolution(f"spheres do not intersect (gamma={gamma:.3e})")
        gamma = 0.0
    c3 = p.sigma * math.sqrt(gamma)
    return alpha, beta, c1, c2, c3, gamma


def _frame_vectors(theta, alpha, beta):
    c, s = math.cos(theta), math.sin(theta)
    e1 = np.array([beta * c, -alpha, beta * s])
    e2 = -np.array([alpha * c, beta, alpha * s])
    e3 = np.array([s, 0.0, -c])
    return e1, e2, e3


def zigzag_vertices(state: ZigzagState, p: FoldParams):
    """Position vectors (U1, U2, U3, UM) of the zigzag element."""
    if not is_finite_n(p.N):
        raise DomainError("zigzag vertices need a finite module count N")
    I, th = state.action, state.theta
    alpha, beta = alpha_beta(I, p.l_L, p.l_R)
    h = I * p.cot_pn
    u1 = np.array([0.0, I, h])
    u2 = (np.array([0.0, I - p.l_L * alpha, h])
          + p.l_L * beta * np.array([math.cos(th), 0.0, math.sin(th)]))
    u3 = np.array([0.0, -I, h])
    um = u1 + p.l_L * alpha * (u3 - u1) / (2.0 * I)
    return u1, u2, u3, um


def local_frame(state: ZigzagState, p: FoldParams) -> LocalFrame:
    """Orthonormal right-handed frame attached to U1."""
    if not is_finite_n(p.N):
        raise DomainError("the frame origin U1 is at infinity for N = INFINITE")
    alpha, beta = alpha_beta(state.action, p.l_L, p.l_R)
    e1, e2, e3 = _frame_vectors(state.theta, alpha, beta)
    origin = np.array([0.0, state.action, state.action * p.cot_pn])
    return LocalFrame(origin, e1, e2, e3)


def sphere_intersection(state: ZigzagState, p: FoldParams) -> IntersectionResult:
    """Frame components of the vertex V at distances r1, r2, r3 from U1, U2, U3.

    The branch of the two mirror solutions is chosen by ``p.sigma``. Raises
    FiniteSolution when the spheres do not meet.
    """
    if not state.action > 0.0:
        raise DomainError("action must be positive")
    _, _, c1, c2, c3, gamma = _components(state.action, p)
    return IntersectionResult(c1, c2, c3, gamma)


def intersection_vertex(state: ZigzagState, p: FoldParams) -> np.ndarray:
    """Global position of V for a finite-N zigzag."""
    frame = local_frame(state, p)
    res = sphere_intersection(state, p)
    return frame.origin + res.e1 * frame.e1 + res.e2 * frame.e2 + res.e3 * frame.e3


def rotation_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def sphere_point(p1, p2, p3, r1, r2, r3, sigma):
    """Trilaterate the point at distances (r1, r2, r3) from (p1, p2, p3).

    The side is chosen in the right-handed frame built from p1->p2 then
    p1->p3, matching :func:`sphere_intersection`. Returns ``None`` when
    the spheres do not meet.
    """
    d12 = p2 - p1
    l12 = float(np.linalg.norm(d12))
    e1 = d12 / l12
    d13 = p3 - p1
    proj = float(d13 @ e1)
    perp = d13 - proj * e1
    lp = float(np.linalg.norm(perp))
    if lp < FRAME_EPS:
        return None
    e2 = perp / lp
    e3 = np.cross(e1, e2)
    c1 = (r1 * r1 + l12 * l12 - r2 * r2) / (2.0 * l12)
    c2 = (r1 * r1 - r3 * r3 + proj * proj + lp * lp - 2.0 * c1 * proj) / (2.0 * lp)
    gamma = r1 * r1 - c1 * c1 - c2 * c2
    if gamma < 0.0:
        if gamma < -GAMMA_CLAMP:
            return None
        gamma = 0.0
    return p1 + c1 * e1 + c2 * e2 + sigma * math.sqrt(gamma) * e3


def state_from_vertices(u1, u2, u3) -> ZigzagState:
    """Recover (theta, I) from the global positions of a zigzag triplet."""
    u = u3 - u1
    I = 0.5 * float(np.linalg.norm(u))
    l_L = float(np.linalg.norm(u2 - u1))
    l_R = float(np.linalg.norm(u3 - u2))
    alpha = (l_L * l_L + 4.0 * I * I - l_R * l_R) / (4.0 * I * l_L)
    um = u1 + l_L * alpha * u / (2.0 * I)
    v = u2 - um
    uh = u / (2.0 * I)
    y = -v[2] * uh[1] + v[1] * uh[2]
    return ZigzagState.wrapped(math.atan2(y, v[0]), I)

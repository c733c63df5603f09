"""Large-N limit of the folding dynamics.

In the limit the action is conserved by every fold, each f advances the
angle by the frequency ``xi_f(I)`` and each g by pi. This module also holds
the generating-function side: the symmetric closed form, the total discrete
mean curvature of the fold tetrahedron, a quadrature fallback for
asymmetric folds, and the degree classifier of the radicand polynomial.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

from .errors import DomainError, FiniteSolution, NotSymmetric, ToleranceNotMet
from .geometry import FoldParams, ZigzagState, _components, wrap_angle
from .maps import SINGULAR_ACTION, ModuleSpec

_SYM_TOL = 1e-12


def xi_f(I: float, p: FoldParams) -> float:
    """Angular advance of one fold in the large-N limit, in (-pi, pi]."""
    alpha, beta, c1, c2, c3, _ = _components(I, p)
    return wrap_angle(math.atan2(c3, -c1 * beta + c2 * alpha))


class Frequency(NamedTuple):
    unwrapped: float
    wrapped: float


def total_xi(I: float, spec: ModuleSpec) -> Frequency:
    """Total frequency over one module: sum of fold advances plus pi per g."""
    total = 0.0
    for st, p in zip(spec.steps, spec.params):
        try:
            total += xi_f(I, p)
        except DomainError as exc:
            raise FiniteSolution(str(exc)) from None
        total += st.k * math.pi
    return Frequency(total, wrap_angle(total))


def module_interval(spec: ModuleSpec) -> tuple[float, float]:
    """Intersection of the steps' open action intervals (ignores gamma)."""
    lo = max(p.admissible_interval[0] for p in spec.params)
    hi = min(p.admissible_interval[1] for p in spec.params)
    if not lo < hi:
        raise DomainError("module steps have disjoint action intervals")
    return lo, hi


def integrable_map(state: ZigzagState, spec: ModuleSpec) -> ZigzagState:
    """Integrable limit: I -> I/s + mu, then theta -> theta + xi(I_new)."""
    I_new = state.action / spec.s + spec.mu
    if I_new <= SINGULAR_ACTION:
        raise FiniteSolution("action left the admissible domain", step=spec.m,
                             state=state)
    try:
        xi = total_xi(I_new, spec).unwrapped
    except FiniteSolution as exc:
        raise exc.at(spec.m, state) from None
    return ZigzagState.wrapped(state.theta + xi, I_new)


@dataclass(frozen=True)
class FrequencyProfile:
    """Sampled frequency curve; inadmissible samples are listed in ``gaps``."""

    module: ModuleSpec
    I: np.ndarray
    xi: np.ndarray
    gaps: tuple[float, ...] = ()

    @property
    def xi_wrapped(self) -> np.ndarray:
        return np.array([wrap_angle(x) for x in self.xi])

    def rows(self):
        for I, x in zip(self.I, self.xi):
            yield float(I), float(x), wrap_angle(float(x))


def frequency_profile(spec: ModuleSpec, I_values: Sequence[float]) -> FrequencyProfile:
    Is, xs, gaps = [], [], []
    for I in np.asarray(I_values, dtype=float):
        try:
            xs.append(total_xi(float(I), spec).unwrapped)
        except FiniteSolution:
            gaps.append(float(I))
            continue
        Is.append(float(I))
    Is = np.asarray(Is)
    if np.any(np.diff(Is) <= 0):
        raise DomainError("profile samples must be strictly increasing")
    return FrequencyProfile(spec, Is, np.asarray(xs), tuple(gaps))


# -- tetrahedron and mean curvature ----------------------------------------

# Edge order used throughout: U1U3, U1U2, U2U3, U1V, U2V, U3V.
_EDGES = ((0, 2), (0, 1), (1, 2), (0, 3), (1, 3), (2, 3))


def cayley_menger(d12, d13, d14, d23, d24, d34) -> float:
    """Cayley-Menger determinant; equals 288 * volume**2."""
    sq = lambda x: x * x
    m = np.array([
        [0, 1, 1, 1, 1],
        [1, 0, sq(d12), sq(d13), sq(d14)],
        [1, sq(d12), 0, sq(d23), sq(d24)],
        [1, sq(d13), sq(d23), 0, sq(d34)],
        [1, sq(d14), sq(d24), sq(d34), 0],
    ], dtype=float)
    return float(np.linalg.det(m))


def tetrahedron_lengths(I: float, p: FoldParams) -> tuple[float, ...]:
    return (2.0 * I, p.l_L, p.l_R, p.r1, p.r2, p.r3)


def embed_tetrahedron(I: float, p: FoldParams) -> np.ndarray:
    """Vertices U1, U2, U3, V of the fold tetrahedron from its edge lengths.

    U1 sits at the origin, U3 on +x, U2 in the upper half of the xy-plane
    and V on the side ``p.sigma``.
    """
    L = tetrahedron_lengths(I, p)
    d13, d12, d23, d1v, d2v, d3v = L
    for a, b, c in ((d13, d12, d23), (d13, d1v, d3v), (d12, d1v, d2v), (d23, d2v, d3v)):
        if not (a < b + c and b < a + c and c < a + b):
            raise DomainError("edge lengths violate a face triangle inequality")
    if cayley_menger(d12, d13, d1v, d23, d2v, d3v) <= 0.0:
        raise DomainError("edge lengths are not embeddable as a tetrahedron")
    x2 = (d12 * d12 + d13 * d13 - d23 * d23) / (2.0 * d13)
    y2 = math.sqrt(max(d12 * d12 - x2 * x2, 0.0))
    xv = (d1v * d1v - d3v * d3v + d13 * d13) / (2.0 * d13)
    yv = (d1v * d1v - d2v * d2v + x2 * x2 + y2 * y2 - 2.0 * xv * x2) / (2.0 * y2)
    zv = p.sigma * math.sqrt(max(d1v * d1v - xv * xv - yv * yv, 0.0))
    return np.array([[0.0, 0.0, 0.0], [x2, y2, 0.0], [d13, 0.0, 0.0], [xv, yv, zv]])


def exterior_dihedral_angles(P: np.ndarray) -> np.ndarray:
    """Exterior dihedral angle (pi minus interior) at each of the six edges."""
    out = np.empty(6)
    for k, (a, b) in enumerate(_EDGES):
        c, d = [j for j in range(4) if j not in (a, b)]
        e = P[b] - P[a]
        n1 = np.cross(e, P[c] - P[a])
        if n1 @ (P[d] - P[a]) > 0:
            n1 = -n1
        n2 = np.cross(e, P[d] - P[a])
        if n2 @ (P[c] - P[a]) > 0:
            n2 = -n2
        out[k] = math.atan2(np.linalg.norm(np.cross(n1, n2)), n1 @ n2)
    return out


def mean_curvature_tetrahedron(I: float, p: FoldParams) -> float:
    """Total discrete mean curvature of the fold tetrahedron U1U2U3-V.

    Half the sum of edge length times exterior dihedral angle, signed by
    the mountain/valley assignment so that dH/dI equals ``xi_f``.
    """
    P = embed_tetrahedron(I, p)
    phi = exterior_dihedral_angles(P)
    L = np.asarray(tetrahedron_lengths(I, p))
    return p.sigma * 0.5 * float(L @ phi)


def schlafli_residual(I: float, p: FoldParams, h: float = 1e-5) -> float:
    """Central-difference value of sum_k L_k dPhi_k/dI (zero for a tetrahedron)."""
    L = np.asarray(tetrahedron_lengths(I, p))
    dphi = (exterior_dihedral_angles(embed_tetrahedron(I + h, p))
            - exterior_dihedral_angles(embed_tetrahedron(I - h, p))) / (2.0 * h)
    return float(L @ dphi)


# -- symmetric closed form --------------------------------------------------

def symmetric_constants(l: float, r1: float, r2: float) -> tuple[float, float, float]:
    """(K1, K2, K) with K the altitude of triangle (l, r1, r2) onto r2."""
    K1 = -l ** 4 + 2.0 * l * l * (r1 * r1 + r2 * r2) - (r1 * r1 - r2 * r2) ** 2
    K2 = 4.0 * r2 * r2
    if K1 <= 0.0:
        raise DomainError("K1 <= 0: triangle (l, r1, r2) is degenerate")
    return K1, K2, math.sqrt(K1 / K2)


class GenFunTerms(NamedTuple):
    """Pieces of the symmetric generating function.

    ``S_f = I_xi + sum(count * length * angle) / 2 + constant_gauge`` where
    ``edge_terms`` holds (length, exterior_angle, count) for the edges of
    length l (two), r1 (two) and r2 (one).
    """

    I_xi: float
    edge_terms: tuple[tuple[float, float, int], ...]
    constant_gauge: float

    @property
    def value(self) -> float:
        return (self.I_xi + 0.5 * sum(c * L * a for L, a, c in self.edge_terms)
                + self.constant_gauge)


def _symmetric_params(l, r1, r2, sigma) -> FoldParams:
    return FoldParams(l, l, math.inf, r1, r2, r1, sigma)


def _genfun_raw(I, l, r1, r2, sigma):
    K1, K2, K = symmetric_constants(l, r1, r2)
    if not 0.0 < I < K:
        raise DomainError(f"|I/K| >= 1 (I={I}, K={K})")
    dl2, dr2 = l * l - K * K, r1 * r1 - K * K
    if dl2 <= 0.0 or dr2 <= 0.0:
        raise DomainError("right angle in triangle (l, r1, r2): closed form undefined")
    dl, dr = math.sqrt(dl2), math.sqrt(dr2)
    rho = math.asin(I / K)
    t = math.tan(0.5 * rho)
    theta_l = math.atan((l * t + K) / dl) + math.atan((l * t - K) / dl)
    theta_r1 = math.atan((r1 * t + K) / dr) + math.atan((r1 * t - K) / dr)
    # partial-fraction coefficients; they reduce to -r2 and -r1*r2/l when
    # the triangle is acute at U2 and V
    c_l = (-l * l + r1 * r1 - r2 * r2) / (2.0 * dl)
    c_r1 = -(r1 / l) * (-l * l + r1 * r1 + r2 * r2) / (2.0 * dr)
    phi_l = sigma * (-c_l / r2 * theta_l + 0.5 * math.pi)
    phi_r1 = sigma * (-c_r1 * l / (r1 * r2) * theta_r1 + 0.5 * math.pi)
    phi_r2 = sigma * (math.pi - 2.0 * rho)
    p = _symmetric_params(l, r1, r2, sigma)
    I_xi = I * xi_f(I, p)
    edges = ((l, phi_l, 2), (r1, phi_r1, 2), (r2, phi_r2, 1))
    return I_xi, edges, K


def genfun_symmetric(I: float, l: float, r1: float, r2: float, sigma: int = 1,
                     l_R: float | None = None, r3: float | None = None) -> GenFunTerms:
    """Closed-form generating function of a symmetric fold (l_L = l_R, r1 = r3).

    The additive constant is fixed so that S_f equals the total discrete
    mean curvature at the midpoint of the admissible interval (0, K).
    Passing ``l_R``/``r3`` that break the symmetry raises NotSymmetric.
    """
    if l_R is not None and abs(l_R - l) > _SYM_TOL:
        raise NotSymmetric(f"l_L={l} != l_R={l_R}")
    if r3 is not None and abs(r3 - r1) > _SYM_TOL:
        raise NotSymmetric(f"r1={r1} != r3={r3}")
    if sigma not in (1, -1):
        raise DomainError("sigma must be +1 or -1")
    I_xi, edges, K = _genfun_raw(I, l, r1, r2, sigma)
    I_ref = 0.5 * K
    ref_xi, ref_edges, _ = _genfun_raw(I_ref, l, r1, r2, sigma)
    raw_ref = GenFunTerms(ref_xi, ref_edges, 0.0).value
    gauge = mean_curvature_tetrahedron(I_ref, _symmetric_params(l, r1, r2, sigma)) - raw_ref
    return GenFunTerms(I_xi, edges, gauge)


def genfun_from_params(I: float, p: FoldParams) -> GenFunTerms:
    return genfun_symmetric(I, p.l_L, p.r1, p.r2, p.sigma, l_R=p.l_R, r3=p.r3)


def genfun_quadrature(I0: float, I1: float, p: FoldParams, tol: float = 1e-10) -> float:
    """S_f(I1) - S_f(I0) by adaptive quadrature of xi_f."""
    if I0 == I1:
        return 0.0
    for I in (I0, I1):
        xi_f(I, p)  # raises FiniteSolution / DomainError at the ends
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(lambda x: xi_f(x, p), I0, I1,
                                      epsabs=tol, epsrel=0.0, limit=200)
        except integrate.IntegrationWarning as exc:
            raise ToleranceNotMet(str(exc)) from None
    if err > tol:
        raise ToleranceNotMet(f"quadrature error estimate {err:.2e} > {tol:.2e}")
    return val


# -- integrability class ------------------------------------------------------

class Integrability(enum.Enum):
    ELEMENTARY = "elementary"
    ELLIPTIC = "elliptic"
    HYPERELLIPTIC = "hyperelliptic"


class IntegrabilityClass(NamedTuple):
    degree: int
    kind: Integrability


def radicand_polynomial(p: FoldParams) -> Polynomial:
    """P as a polynomial in x = I**2, with beta*sqrt(gamma) = sqrt(P)/(8 I l_L^2)."""
    lL, lR, r1, r2, r3 = p.l_L, p.l_R, p.r1, p.r2, p.r3
    x = Polynomial([0.0, 1.0])
    q = 4.0 * x + (lL * lL - lR * lR)      # 4 I^2 + l_L^2 - l_R^2
    w = lL * lL + r1 * r1 - r2 * r2
    p0 = 4.0 * lL * lL * r1 * r1 * (16.0 * lL * lL * x - q * q)
    p1 = (-16.0 * lL * lL * x + q * q) * (w * w)
    inner = 2.0 * lL * lL * (4.0 * x + r1 * r1 - r3 * r3) - q * w
    p2 = -(inner * inner)
    return p0 + p1 + p2


def classify_integrability(p: FoldParams, rel_tol: float = 1e-10) -> IntegrabilityClass:
    """Degree of the irreducible radicand and the resulting integral class.

    Coefficients below ``rel_tol`` times the largest are dropped, and a
    factor I**2 (a perfect square, so rational) is divided out.
    """
    coef = np.array(radicand_polynomial(p).coef, dtype=float)
    scale = np.max(np.abs(coef)) if coef.size else 0.0
    if scale == 0.0:
        return IntegrabilityClass(0, Integrability.ELEMENTARY)
    coef = np.where(np.abs(coef) < rel_tol * scale, 0.0, coef)
    nz = np.nonzero(coef)[0]
    deg_x = int(nz[-1]) - int(nz[0])
    d = 2 * deg_x
    if d <= 2:
        kind = Integrability.ELEMENTARY
    elif d <= 4:
        kind = Integrability.ELLIPTIC
    else:
        kind = Integrability.HYPERELLIPTIC
    return IntegrabilityClass(d, kind)

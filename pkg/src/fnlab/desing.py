"""Singular limit of the two-neuron system and its desingularized flow.

With ``zA``, ``zB`` slaved to the critical manifold, the fast variables obey

    rho1 = (1 - yB^2 - gamma) (yA - b zA)
    rho2 = -gamma (yA - b zA) + (1 - yA^2) (yB - b zB)

Ordinary singularities are the original equilibria projected to the
``(yA, yB)`` plane; folded singularities sit on the fold lines
``yB = +-sqrt(1 - gamma)``.  The FSN II input ``I*(gamma)`` is where the
ordinary singularity collides with the lower folded singularity.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import ModelParams, cubic_discriminant, cubic_roots
from .errors import BranchAbsent, Codim2, NoRoot, OnFoldCurve, OutOfDomain
from .pair import DrivePoint, _equilibrium_y

__all__ = [
    "DEGEN_TOL",
    "DesingPoint",
    "SingularityKind",
    "SingularityClass",
    "Singularity",
    "FoldedCubicCoeffs",
    "slaved_z",
    "desing_rhs",
    "desing_jacobian",
    "classify_trace_det",
    "ordinary_singularity",
    "folded_cubic_coeffs",
    "folded_singularities",
    "all_singularities",
    "yA_fold_family_inputs",
    "fsn2_Istar",
    "fsn2_Istar_printed",
    "codim2_gamma",
    "TranscriticalReport",
    "transcritical_verify",
    "FieldSample",
    "phase_field_sample",
    "zero_contours",
]

DEGEN_TOL = 1e-7
FIELD_RESOLUTION = 400


@dataclass(frozen=True)
class DesingPoint:
    yA: float
    yB: float


class SingularityKind(enum.Enum):
    ORDINARY = "Ordinary"
    FOLDED_UPPER = "FoldedUpper"
    FOLDED_LOWER = "FoldedLower"


class SingularityClass(enum.Enum):
    STABLE_NODE = "StableNode"
    UNSTABLE_NODE = "UnstableNode"
    SADDLE = "Saddle"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class Singularity:
    location: DesingPoint
    kind: SingularityKind
    trace: float
    det: float
    cls: SingularityClass

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "yA": self.location.yA,
            "yB": self.location.yB,
            "trace": self.trace,
            "det": self.det,
            "class": self.cls.value,
        }


@dataclass(frozen=True)
class FoldedCubicCoeffs:
    """Cubic in ``yA`` whose roots are the folded singularities on one fold line."""

    yB: float
    beta0: float
    beta1: float
    beta2: float
    beta3: float
    Delta: float
    sigma_cubic: float
    Ck: tuple

    def cardano_roots(self) -> list[complex]:
        """All three roots from the closed-form complex Cardano expression."""
        d0 = self.beta2 ** 2 - 3.0 * self.beta1 * self.beta3
        return [-(self.beta2 + C + d0 / C) / (3.0 * self.beta3) for C in self.Ck]


# ---------------------------------------------------------------- flow

def slaved_z(params: ModelParams, pt: DrivePoint, p: DesingPoint) -> tuple[float, float]:
    yA, yB = p.yA, p.yB
    zA = yA - yA ** 3 / 3.0 - params.a + pt.I
    zB = yB - yB ** 3 / 3.0 - params.a + pt.gamma * (yA - yB)
    return zA, zB


def _xi(params, pt, yA, yB):
    zA = yA - yA ** 3 / 3.0 - params.a + pt.I
    zB = yB - yB ** 3 / 3.0 - params.a + pt.gamma * (yA - yB)
    return yA - params.b * zA, yB - params.b * zB


def desing_rhs(params: ModelParams, pt: DrivePoint, p: DesingPoint) -> tuple[float, float]:
    g = pt.gamma
    xiA, xiB = _xi(params, pt, p.yA, p.yB)
    return ((1.0 - p.yB ** 2 - g) * xiA, -g * xiA + (1.0 - p.yA ** 2) * xiB)


def desing_jacobian(params: ModelParams, pt: DrivePoint, p: DesingPoint) -> np.ndarray:
    b, g = params.b, pt.gamma
    yA, yB = p.yA, p.yB
    xiA, xiB = _xi(params, pt, yA, yB)
    fA = 1.0 - yA * yA
    fB = 1.0 - yB * yB - g
    dxiA = 1.0 - b * fA
    return np.array([
        [fB * dxiA, -2.0 * yB * xiA],
        [-g * dxiA - 2.0 * yA * xiB - b * g * fA, fA * (1.0 - b * fB)],
    ])


def classify_trace_det(trace: float, det: float, tol: float = DEGEN_TOL) -> SingularityClass:
    if abs(det) < tol or abs(trace) < tol:
        return SingularityClass.DEGENERATE
    if det < 0.0:
        return SingularityClass.SADDLE
    return SingularityClass.STABLE_NODE if trace < 0.0 else SingularityClass.UNSTABLE_NODE


# ---------------------------------------------------------------- singularities

def ordinary_singularity(params: ModelParams, pt: DrivePoint, tol: float = DEGEN_TOL) -> Singularity:
    yA, yB = _equilibrium_y(params, pt.I, pt.gamma)
    if abs(1.0 - yA * yA) < tol or abs(1.0 - yB * yB - pt.gamma) < tol:
        raise OnFoldCurve(f"ordinary singularity ({yA}, {yB}) lies on the fold curve")
    p = DesingPoint(yA, yB)
    J = desing_jacobian(params, pt, p)
    tr, det = float(np.trace(J)), float(np.linalg.det(J))
    return Singularity(p, SingularityKind.ORDINARY, tr, det, classify_trace_det(tr, det, tol))


def folded_cubic_coeffs(params: ModelParams, pt: DrivePoint, yB: float) -> FoldedCubicCoeffs:
    a, b = params.a, params.b
    g, I = pt.gamma, pt.I
    K = yB * (1.0 - b + b * g) + b * yB ** 3 / 3.0 + b * a
    b3 = 2.0 * b * g / 3.0
    b2 = -K
    b1 = -g
    b0 = K + b * g * (I - a)
    Delta = cubic_discriminant(b3, b2, b1, b0)
    sigma = 2.0 * b2 ** 3 - 9.0 * b3 * b2 * b1 + 27.0 * b3 ** 2 * b0
    rad = cmath.sqrt(-27.0 * b3 ** 2 * Delta)
    base = (sigma - rad) / 2.0
    if abs(base) < 1e-300:
        base = (sigma + rad) / 2.0
    C1 = base ** (1.0 / 3.0) if base != 0 else 0j
    omega = (-1.0 + cmath.sqrt(-3.0)) / 2.0
    Ck = tuple(C1 * omega ** k for k in range(3))
    return FoldedCubicCoeffs(yB, b0, b1, b2, b3, Delta, sigma, Ck)


def _folded_on_branch(params, pt, yB, kind, tol):
    co = folded_cubic_coeffs(params, pt, yB)
    out = []
    for yA in cubic_roots(co.beta3, co.beta2, co.beta1, co.beta0):
        xiA, xiB = _xi(params, pt, yA, yB)
        tr = 1.0 - yA * yA
        det = -2.0 * yB * xiA * (pt.gamma + 2.0 * yA * xiB)
        out.append(Singularity(DesingPoint(yA, yB), kind, tr, det, classify_trace_det(tr, det, tol)))
    return out


def folded_singularities(params: ModelParams, pt: DrivePoint, tol: float = DEGEN_TOL,
                         strict: bool = False) -> list[Singularity]:
    """Folded singularities on ``yB = +-sqrt(1 - gamma)``, lower branch first.

    For ``gamma >= 1`` the fold lines do not exist: an empty list is returned,
    or :class:`BranchAbsent` raised when ``strict``.
    """
    if pt.gamma >= 1.0:
        if strict:
            raise BranchAbsent(f"no fold lines yB = +-sqrt(1 - gamma) for gamma={pt.gamma}")
        return []
    r = math.sqrt(1.0 - pt.gamma)
    return (_folded_on_branch(params, pt, -r, SingularityKind.FOLDED_LOWER, tol)
            + _folded_on_branch(params, pt, r, SingularityKind.FOLDED_UPPER, tol))


def all_singularities(params: ModelParams, pt: DrivePoint) -> list[Singularity]:
    """Ordinary singularity (when off the fold) followed by the folded ones."""
    out = []
    try:
        out.append(ordinary_singularity(params, pt))
    except OnFoldCurve:
        pass
    return out + folded_singularities(params, pt)


def yA_fold_family_inputs(params: ModelParams) -> tuple[float, float]:
    """Inputs at which the ``yA = +-1`` folded family exists (independent of gamma)."""
    b, a = params.b, params.a
    return (1.0 / b - 2.0 / 3.0 + a, -1.0 / b + 2.0 / 3.0 + a)


# ---------------------------------------------------------------- FSN II

def _collision_yA(params, gamma):
    a, b = params.a, params.b
    yB = -math.sqrt(1.0 - gamma)
    return (yB * (1.0 - b + b * gamma) + b * yB ** 3 / 3.0 + b * a) / (b * gamma), yB


def fsn2_Istar(params: ModelParams, gamma: float) -> float:
    """Input where the ordinary singularity meets the lower folded singularity."""
    if not 0.0 < gamma < 1.0:
        raise OutOfDomain(f"I*(gamma) needs 0 < gamma < 1, got {gamma}")
    yA, _ = _collision_yA(params, gamma)
    return params.b_tilde * yA + yA ** 3 / 3.0 + params.a


def fsn2_Istar_printed(params: ModelParams, gamma: float) -> float:
    """The closed form as typeset in the source, kept for side-by-side reporting.

    It disagrees with :func:`fsn2_Istar` (e.g. 2.342 vs 1.063 at gamma=0.4).
    """
    if not 0.0 < gamma < 1.0:
        raise OutOfDomain(f"gamma must lie in (0, 1), got {gamma}")
    a, b = params.a, params.b
    inner = math.sqrt(1.0 - gamma) + 2.0 * b * (1.0 - gamma) ** (1.0 / 3.0) / 3.0 - b * a
    return inner ** 3 / (3.0 * b ** 3 * gamma ** 3) + a


def codim2_gamma(params: ModelParams, n_scan: int = 1000) -> float:
    """Coupling at which the FSN II collision happens at ``yA = 1``."""
    a, b = params.a, params.b

    def f(g):
        yB = -math.sqrt(1.0 - g)
        return yB * (1.0 - b + b * g) + b * yB ** 3 / 3.0 + b * a - b * g

    gs = np.linspace(0.0, 1.0, n_scan + 1)[1:-1]
    vals = np.array([f(g) for g in gs])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if len(idx) == 0:
        raise NoRoot("no sign change of the codimension-two condition on (0, 1)")
    k = idx[0]
    return brentq(f, gs[k], gs[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)


@dataclass
class TranscriticalReport:
    gamma: float
    I_star: float
    point: DesingPoint
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    left: np.ndarray
    right: np.ndarray
    left_residual: float
    right_residual: float
    cond2: float
    cond3: float
    cond3_printed: float
    I_star_printed: float
    tol: float = 1e-8
    notes: list = field(default_factory=list)

    @property
    def zero_eigenvalue(self) -> float:
        return float(np.min(np.abs(self.eigenvalues)))

    @property
    def cond1_ok(self) -> bool:
        simple = float(np.max(np.abs(self.eigenvalues))) > self.tol
        return (self.zero_eigenvalue < self.tol and simple
                and self.left_residual < self.tol and self.right_residual < self.tol)

    @property
    def cond2_ok(self) -> bool:
        return abs(self.cond2) > self.tol

    @property
    def cond3_ok(self) -> bool:
        return abs(self.cond3) > self.tol

    @property
    def passed(self) -> bool:
        return self.cond1_ok and self.cond2_ok and self.cond3_ok


def transcritical_verify(params: ModelParams, gamma: float, tol: float = DEGEN_TOL) -> TranscriticalReport:
    """Check the three transcritical conditions at ``(p, I*(gamma))``.

    ``cond3`` is the quadratic form ``v^T Hess(rho1) v`` (``w = (1, 0)``
    selects ``rho1``).  ``cond3_printed`` is the expression as typeset in
    the source, which differs from the quadratic form; it is reported only.
    """
    I_star = fsn2_Istar(params, gamma)
    yA, yB = _collision_yA(params, gamma)
    fA = 1.0 - yA * yA
    if abs(fA) < tol:
        raise Codim2(f"1 - yA^2 = {fA}: codimension-two point, right eigenvector undefined")
    b = params.b
    pt = DrivePoint(I_star, gamma)
    p = DesingPoint(yA, yB)
    J = desing_jacobian(params, pt, p)
    w = np.array([1.0, 0.0])
    v = np.array([1.0, gamma / fA])
    cond2 = 2.0 * b * gamma * yB / fA
    cond3 = -4.0 * gamma * yB * (1.0 - b * fA) / fA
    cond3_printed = (-2.0 * gamma / fA) * (yB * (1.0 - b * fA) + yA)
    return TranscriticalReport(
        gamma=gamma,
        I_star=I_star,
        point=p,
        jacobian=J,
        eigenvalues=np.linalg.eigvals(J),
        left=w,
        right=v,
        left_residual=float(np.max(np.abs(w @ J))),
        right_residual=float(np.max(np.abs(J @ v))),
        cond2=cond2,
        cond3=cond3,
        cond3_printed=cond3_printed,
        I_star_printed=fsn2_Istar_printed(params, gamma),
    )


# ---------------------------------------------------------------- phase-plane sampling

_EDGE_PAIRS = {
    # bit order: c00 c10 c11 c01 (1 = positive); edges 0:bottom 1:right 2:top 3:left
    0b0001: ((2, 3),), 0b0010: ((1, 2),), 0b0011: ((1, 3),), 0b0100: ((0, 1),),
    0b0110: ((0, 2),), 0b0111: ((0, 3),), 0b1000: ((0, 3),), 0b1001: ((0, 2),),
    0b1011: ((0, 1),), 0b1100: ((1, 3),), 0b1101: ((1, 2),), 0b1110: ((2, 3),),
}


def _cell_segments(x, y, F):
    """Marching-squares segments per cell: ``{(i, j): [((eid, P), (eid, P)), ...]}``.

    ``F`` has shape ``(len(x), len(y))``; edge ids are global so segments can
    be chained into polylines.
    """
    pos = F > 0.0
    code = ((pos[:-1, :-1].astype(np.int8) << 3) | (pos[1:, :-1].astype(np.int8) << 2)
            | (pos[1:, 1:].astype(np.int8) << 1) | pos[:-1, 1:].astype(np.int8))
    cells = {}
    for i, j in zip(*np.nonzero((code != 0) & (code != 15))):
        c = int(code[i, j])
        f00, f10, f11, f01 = F[i, j], F[i + 1, j], F[i + 1, j + 1], F[i, j + 1]

        def pt_on(edge):
            if edge == 0:
                t = f00 / (f00 - f10)
                return ("h", i, j), (x[i] + t * (x[i + 1] - x[i]), y[j])
            if edge == 1:
                t = f10 / (f10 - f11)
                return ("v", i + 1, j), (x[i + 1], y[j] + t * (y[j + 1] - y[j]))
            if edge == 2:
                t = f01 / (f01 - f11)
                return ("h", i, j + 1), (x[i] + t * (x[i + 1] - x[i]), y[j + 1])
            t = f00 / (f00 - f01)
            return ("v", i, j), (x[i], y[j] + t * (y[j + 1] - y[j]))

        if c in (0b1010, 0b0101):
            centre_pos = (f00 + f10 + f11 + f01) > 0.0
            # saddle cell: connect around the corners whose sign differs from the centre
            if (c == 0b1010) == centre_pos:
                pairs = ((0, 1), (2, 3))
            else:
                pairs = ((0, 3), (1, 2))
        else:
            pairs = _EDGE_PAIRS[c]
        cells[(i, j)] = [(pt_on(e0), pt_on(e1)) for e0, e1 in pairs]
    return cells


def _chain(cells):
    segs = [s for lst in cells.values() for s in lst]
    by_edge = {}
    for k, (p, q) in enumerate(segs):
        by_edge.setdefault(p[0], []).append(k)
        by_edge.setdefault(q[0], []).append(k)
    used = [False] * len(segs)
    lines = []
    for start in range(len(segs)):
        if used[start]:
            continue
        used[start] = True
        p, q = segs[start]
        line = [p, q]
        for forward in (True, False):
            while True:
                end = line[-1] if forward else line[0]
                nxt = [k for k in by_edge.get(end[0], []) if not used[k]]
                if not nxt:
                    break
                k = nxt[0]
                used[k] = True
                a_, b_ = segs[k]
                new = b_ if a_[0] == end[0] else a_
                if forward:
                    line.append(new)
                else:
                    line.insert(0, new)
        lines.append(np.array([pt for _, pt in line]))
    return lines


def zero_contours(x, y, F) -> list[np.ndarray]:
    """Zero-level polylines of ``F`` sampled on the grid ``x`` by ``y``."""
    return _chain(_cell_segments(np.asarray(x), np.asarray(y), np.asarray(F)))


def _seg_intersection(p1, p2, q1, q2):
    d1 = np.subtract(p2, p1)
    d2 = np.subtract(q2, q1)
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if den == 0.0:
        return None
    r = np.subtract(q1, p1)
    t = (r[0] * d2[1] - r[1] * d2[0]) / den
    u = (r[0] * d1[1] - r[1] * d1[0]) / den
    if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= u <= 1 + 1e-12:
        return (p1[0] + t * d1[0], p1[1] + t * d1[1])
    return None


@dataclass
class FieldSample:
    yA: np.ndarray
    yB: np.ndarray
    rho1: np.ndarray  # shape (len(yA), len(yB))
    rho2: np.ndarray
    contours_rho1: list
    contours_rho2: list
    _cells1: dict = field(repr=False, default_factory=dict)
    _cells2: dict = field(repr=False, default_factory=dict)

    def crossings(self) -> np.ndarray:
        """Intersections of the two zero sets, merged within one grid cell."""
        pts = []
        for key in self._cells1.keys() & self._cells2.keys():
            for (_, p1), (_, p2) in self._cells1[key]:
                for (_, q1), (_, q2) in self._cells2[key]:
                    hit = _seg_intersection(p1, p2, q1, q2)
                    if hit is not None:
                        pts.append(hit)
        h = max(self.yA[1] - self.yA[0], self.yB[1] - self.yB[0])
        merged = []
        for p in pts:
            if not any(math.hypot(p[0] - m[0], p[1] - m[1]) < h for m in merged):
                merged.append(p)
        return np.array(merged).reshape(-1, 2)

    def rows(self):
        for i, ya in enumerate(self.yA):
            for j, yb in enumerate(self.yB):
                yield ya, yb, self.rho1[i, j], self.rho2[i, j]


def phase_field_sample(params: ModelParams, pt: DrivePoint, window=(-2.0, 2.0, -2.0, 2.0),
                       n: int = FIELD_RESOLUTION) -> FieldSample:
    """Sample ``(rho1, rho2)`` on an ``n`` by ``n`` grid and trace both nullclines.

    ``window`` is ``(yA_min, yA_max, yB_min, yB_max)``.
    """
    if n < 2:
        raise OutOfDomain("grid size must be >= 2")
    x0, x1, y0, y1 = window
    if not (x1 > x0 and y1 > y0):
        raise OutOfDomain("window must have positive extent")
    ya = np.linspace(x0, x1, n)
    yb = np.linspace(y0, y1, n)
    YA, YB = np.meshgrid(ya, yb, indexing="ij")
    xiA, xiB = _xi(params, pt, YA, YB)
    g = pt.gamma
    r1 = (1.0 - YB ** 2 - g) * xiA
    r2 = -g * xiA + (1.0 - YA ** 2) * xiB
    c1 = _cell_segments(ya, yb, r1)
    c2 = _cell_segments(ya, yb, r2)
    return FieldSample(ya, yb, r1, r2, _chain(c1), _chain(c2), c1, c2)

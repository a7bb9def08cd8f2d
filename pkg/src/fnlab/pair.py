"""Directed two-neuron system A -> B.

    dyA/dt = yA - yA^3/3 - a - zA + I
    dzA/dt = eps (yA - b zA)
    dyB/dt = yB - yB^3/3 - a - zB + gamma (yA - yB)
    dzB/dt = eps (yB - b zB)

The Jacobian is block lower-triangular, so the equilibrium's stability is
read off the two block traces ``sigma1`` and ``sigma2``.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import (
    ModelParams,
    StabilityClass,
    ZERO_TOL,
    _unique_root,
    block_eigenvalues,
    single_hopf_points,
    stability_from_traces,
)
from .errors import BoundaryPoint, InvalidParams, NoHopfInB, NoRoot, OutOfDomain, Unbounded

__all__ = [
    "DrivePoint",
    "PairEquilibrium",
    "Region",
    "REGION_TOL",
    "pair_rhs",
    "pair_jacobian",
    "pair_equilibrium",
    "pair_eigenvalues",
    "hopf_curves_B",
    "alpha_B",
    "gamma_star",
    "phase_lock_threshold",
    "region_classify",
    "region_map",
    "boundary_curves",
    "CurveSet",
]

REGION_TOL = 1e-6
CURVE_SAMPLES = 400


@dataclass(frozen=True)
class DrivePoint:
    I: float
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.I) and math.isfinite(self.gamma)):
            raise InvalidParams(f"non-finite drive point ({self.I}, {self.gamma})")
        if self.I < 0.0:
            raise InvalidParams(f"I must be >= 0, got {self.I}")
        if self.gamma < 0.0:
            raise InvalidParams(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class PairEquilibrium:
    yA_star: float
    zA_star: float
    yB_star: float
    zB_star: float
    sigma1: float
    sigma2: float
    stability: StabilityClass

    def as_array(self) -> np.ndarray:
        return np.array([self.yA_star, self.zA_star, self.yB_star, self.zB_star])


class Region(enum.IntEnum):
    BOUNDARY = 0
    BOTH_QUIESCENT = 1
    A_SAT_B_QUIESCENT = 2
    A_SAT_B_FIRING = 3
    BOTH_SATURATED = 4
    PHASE_LOCKED_STRONG = 5
    CANARD_MMO_CANDIDATE = 6
    PHASE_LOCKED_FIRING = 7


def pair_rhs(params: ModelParams, pt: DrivePoint, x) -> np.ndarray:
    yA, zA, yB, zB = x
    a, b, eps = params.a, params.b, params.epsilon
    return np.array([
        yA - yA ** 3 / 3.0 - a - zA + pt.I,
        eps * (yA - b * zA),
        yB - yB ** 3 / 3.0 - a - zB + pt.gamma * (yA - yB),
        eps * (yB - b * zB),
    ])


def pair_jacobian(params: ModelParams, pt: DrivePoint, x) -> np.ndarray:
    yA, _, yB, _ = x
    b, eps, g = params.b, params.epsilon, pt.gamma
    return np.array([
        [1.0 - yA * yA, -1.0, 0.0, 0.0],
        [eps, -b * eps, 0.0, 0.0],
        [g, 0.0, 1.0 - yB * yB - g, -1.0],
        [0.0, 0.0, eps, -b * eps],
    ])


def _equilibrium_y(params: ModelParams, I: float, gamma: float) -> tuple[float, float]:
    bt, a = params.b_tilde, params.a
    yA = _unique_root(bt, a - I)
    yB = _unique_root(bt + gamma, a - gamma * yA)
    return yA, yB


def pair_equilibrium(params: ModelParams, pt: DrivePoint) -> PairEquilibrium:
    yA, yB = _equilibrium_y(params, pt.I, pt.gamma)
    be = params.b * params.epsilon
    s1 = 1.0 - be - yA * yA
    s2 = 1.0 - be - pt.gamma - yB * yB
    return PairEquilibrium(yA, yA / params.b, yB, yB / params.b, s1, s2,
                           stability_from_traces(s1, s2, tol=ZERO_TOL))


def pair_eigenvalues(params: ModelParams, eq: PairEquilibrium, pt: DrivePoint) -> tuple[complex, ...]:
    """``(l1, l2, l3, l4)``: the A-block pair then the B-block pair."""
    return block_eigenvalues(params, eq.yA_star) + block_eigenvalues(params, eq.yB_star, pt.gamma)


def hopf_curves_B(params: ModelParams, gamma: float) -> tuple[float, float]:
    """Inputs ``(I0B, I1B)`` to A at which B's equilibrium is a Hopf point.

    B's trace vanishes at ``yB = -s`` (I0B) and ``yB = +s`` (I1B) with
    ``s = sqrt(1 - gamma - b eps)``; the B equilibrium relation then fixes
    ``yA`` and A's equilibrium relation fixes ``I``.
    """
    if gamma >= 1.0 - params.b * params.epsilon:
        raise NoHopfInB(f"gamma={gamma} >= 1 - b eps")
    s2 = 1.0 - gamma - params.b * params.epsilon
    if gamma == 0.0:
        raise Unbounded("Hopf curves in B escape to infinity at gamma = 0")
    s = math.sqrt(s2)
    out = []
    for yB in (-s, s):
        yA = _yA_for_B_hopf(params, gamma, yB)
        out.append(_input_for_yA(params, yA))
    return out[0], out[1]


def _yA_for_B_hopf(params, gamma, yB):
    return (yB * (params.b_tilde + gamma) + yB ** 3 / 3.0 + params.a) / gamma


def _input_for_yA(params, yA):
    return params.b_tilde * yA + yA ** 3 / 3.0 + params.a


def alpha_B(params: ModelParams, gamma: float) -> float:
    """Cubic coefficient of B's Hopf bifurcation at coupling ``gamma``."""
    b, eps = params.b, params.epsilon
    return (2.0 * b - 2.0 * b * gamma - b * b * eps - 1.0) / (8.0 * (1.0 - b * b * eps))


def gamma_star(params: ModelParams) -> float:
    """Generalized-Hopf coupling where :func:`alpha_B` changes sign."""
    b, eps = params.b, params.epsilon
    return (2.0 * b - b * b * eps - 1.0) / (2.0 * b)


def phase_lock_threshold(params: ModelParams) -> float:
    return 1.0 - params.b * params.epsilon


def region_classify(params: ModelParams, pt: DrivePoint, tol: float = REGION_TOL, *, _hopf=None) -> Region:
    """Tag ``pt`` with one of the seven behaviour regions.

    Raises :class:`BoundaryPoint` within ``tol`` of a separating curve.
    """
    from .desing import fsn2_Istar  # desing imports this module

    I, g = pt.I, pt.gamma
    I0A, I1A = _hopf if _hopf is not None else single_hopf_points(params)
    lock = phase_lock_threshold(params)
    if abs(I - I0A) < tol:
        raise BoundaryPoint(f"I within {tol} of I0A", curve="I0A")
    if abs(I - I1A) < tol:
        raise BoundaryPoint(f"I within {tol} of I1A", curve="I1A")
    if I < I0A:
        return Region.BOTH_QUIESCENT

    if I > I1A:
        if g >= lock:
            return Region.BOTH_SATURATED
        yA, yB = _equilibrium_y(params, I, g)
        s2 = lock - g - yB * yB
        if abs(s2) < tol:
            raise BoundaryPoint("sigma2 within tolerance of zero", curve="B-Hopf")
        if s2 > 0.0:
            return Region.A_SAT_B_FIRING
        return Region.A_SAT_B_QUIESCENT if yB < 0.0 else Region.BOTH_SATURATED

    if abs(g - lock) < tol:
        raise BoundaryPoint("gamma within tolerance of 1 - b eps", curve="phase-lock")
    if g > lock:
        return Region.PHASE_LOCKED_STRONG
    Istar = fsn2_Istar(params, g) if g > 0.0 else math.inf
    if abs(I - Istar) < tol:
        raise BoundaryPoint("I within tolerance of I*(gamma)", curve="Istar")
    return Region.CANARD_MMO_CANDIDATE if I < Istar else Region.PHASE_LOCKED_FIRING


def _region_rows(args):
    params, Is, gammas = args
    hopf = single_hopf_points(params)
    out = np.zeros((len(gammas), len(Is)), dtype=np.int8)
    for j, g in enumerate(gammas):
        for i, I in enumerate(Is):
            try:
                out[j, i] = region_classify(params, DrivePoint(float(I), float(g)), _hopf=hopf)
            except BoundaryPoint:
                out[j, i] = Region.BOUNDARY
    return out


def region_map(params: ModelParams, Is, gammas, workers: int = 1) -> np.ndarray:
    """Region tags on a grid, shape ``(len(gammas), len(Is))``; 0 marks boundaries."""
    Is = np.asarray(Is, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    if workers <= 1 or len(gammas) < 2:
        return _region_rows((params, Is, gammas))
    chunks = [c for c in np.array_split(gammas, workers) if len(c)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_region_rows, [(params, Is, c) for c in chunks]))
    return np.vstack(parts)


# ---------------------------------------------------------------- boundary curves

@dataclass
class CurveSet:
    """Sampled region boundaries.

    ``curves`` maps a curve name to an ``(n, 3)`` array of rows
    ``(param, I, gamma)``; ``markers`` maps a label to an ``(I, gamma)`` point.
    """

    curves: dict
    markers: dict

    def rows(self):
        for name, arr in self.curves.items():
            for p, I, g in arr:
                yield name, p, I, g
        for name, (I, g) in self.markers.items():
            yield name, math.nan, I, g


def boundary_curves(params: ModelParams, gamma_range=(0.0, 1.2), I_range=(0.0, 2.5),
                    n: int = CURVE_SAMPLES) -> CurveSet:
    from .desing import fsn2_Istar

    g_lo, g_hi = gamma_range
    I_lo, I_hi = I_range
    if not (g_hi > g_lo >= 0.0 and I_hi > I_lo and n >= 2):
        raise OutOfDomain("curve ranges must be increasing with n >= 2")
    I0A, I1A = single_hopf_points(params)
    lock = phase_lock_threshold(params)
    gs = np.linspace(g_lo, g_hi, n)
    curves = {
        "I0A": np.column_stack([gs, np.full(n, I0A), gs]),
        "I1A": np.column_stack([gs, np.full(n, I1A), gs]),
    }
    Is = np.linspace(I_lo, I_hi, n)
    curves["phase_lock"] = np.column_stack([Is, Is, np.full(n, lock)])

    # B-Hopf curves live on (0, 1 - b eps); sample the open interval
    lo = max(g_lo, 0.0)
    hi = min(g_hi, lock)
    if hi > lo:
        gb = np.linspace(lo, hi, n + 2)[1:-1]
        gb = gb[gb > 0.0]
        pairs = np.array([hopf_curves_B(params, g) for g in gb])
        curves["I0B"] = np.column_stack([gb, pairs[:, 0], gb])
        curves["I1B"] = np.column_stack([gb, pairs[:, 1], gb])
    hi = min(g_hi, lock)
    if hi > lo:
        gi = np.linspace(lo, hi, n + 2)[1:-1]
        gi = gi[gi > 0.0]
        curves["Istar"] = np.column_stack([gi, [fsn2_Istar(params, g) for g in gi], gi])

    markers = {}
    for k, (I, g) in enumerate(hopf_hopf_points(params)):
        markers[f"HH{k + 1}" if k else "HH"] = (I, g)
    gs_ = gamma_star(params)
    if 0.0 < gs_ < lock:
        I0B, I1B = hopf_curves_B(params, gs_)
        markers["GH"] = (I0B, gs_)
        markers["GH_upper"] = (I1B, gs_)
    return CurveSet(curves, markers)


def hopf_hopf_points(params: ModelParams, n_scan: int = 2000) -> list[tuple[float, float]]:
    """Intersections of the A-Hopf lines with the B-Hopf curves, ordered by gamma."""
    I0A, I1A = single_hopf_points(params)
    lock = phase_lock_threshold(params)
    gs = np.linspace(0.0, lock, n_scan + 2)[1:-1]
    found = []
    for branch in (0, 1):
        for IA in (I0A, I1A):
            f = lambda g: hopf_curves_B(params, g)[branch] - IA  # noqa: E731
            vals = np.array([f(g) for g in gs])
            for k in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
                try:
                    g = brentq(f, gs[k], gs[k + 1], xtol=1e-13)
                except ValueError as exc:  # pragma: no cover
                    raise NoRoot(str(exc)) from exc
                found.append((IA, g))
    return sorted(found, key=lambda p: p[1])

"""Single FitzHugh-Nagumo neuron.

    dy/dt = y - y**3/3 - a - z + I
    dz/dt = eps * (y - b*z)

Closed-form equilibrium (via a polished Cardano kernel shared with the
coupled and tree modules), block eigenvalues, Hopf inputs, the cubic
(first Lyapunov) coefficient and regime classification.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

from .errors import BoundaryPoint, Degenerate, DegenerateCubic, InvalidParams, NoHopf

__all__ = [
    "ModelParams",
    "PAPER",
    "NeuronState",
    "StabilityClass",
    "Regime",
    "ZERO_TOL",
    "REGIME_TOL",
    "depressed_cubic_root",
    "cubic_roots",
    "cubic_discriminant",
    "single_rhs",
    "single_equilibrium",
    "block_eigenvalues",
    "single_eigenvalues",
    "single_hopf_points",
    "cubic_coefficient_single",
    "classify_single_regime",
    "stability_from_traces",
]

# real parts below this are treated as zero
ZERO_TOL = 1e-9
# distance in I from a Hopf point reported as a boundary
REGIME_TOL = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """Intrinsic constants shared by every neuron.

    Validation enforces ``0 < a < 1``, ``0 < b < 1`` and ``0 < epsilon < 1``.
    Use :meth:`unchecked` to build analytic limits such as ``epsilon = 0``.
    """

    a: float = 0.875
    b: float = 0.8
    epsilon: float = 0.08

    def __post_init__(self):
        for name in ("a", "b", "epsilon"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidParams(f"{name} must be finite, got {v!r}")
        if getattr(self, "_skip_validation", False):
            return
        if not 0.0 < self.a < 1.0:
            raise InvalidParams(f"a must lie in (0, 1), got {self.a}")
        if not 0.0 < self.b < 1.0:
            raise InvalidParams(f"b must lie in (0, 1), got {self.b}")
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidParams(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @classmethod
    def unchecked(cls, a: float, b: float, epsilon: float) -> "ModelParams":
        obj = cls.__new__(cls)
        object.__setattr__(obj, "_skip_validation", True)
        object.__setattr__(obj, "a", float(a))
        object.__setattr__(obj, "b", float(b))
        object.__setattr__(obj, "epsilon", float(epsilon))
        obj.__post_init__()
        return obj

    @property
    def b_tilde(self) -> float:
        return 1.0 / self.b - 1.0

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "epsilon": self.epsilon}


PAPER = ModelParams(0.875, 0.8, 0.08)

PRESETS = {"paper": PAPER}


@dataclass(frozen=True)
class NeuronState:
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.y) and math.isfinite(self.z)):
            raise InvalidParams(f"non-finite neuron state ({self.y}, {self.z})")


class StabilityClass(enum.Enum):
    ATTRACTING = "Attracting"
    REPELLING = "Repelling"
    SADDLE = "Saddle"
    NONHYPERBOLIC = "Nonhyperbolic"


class Regime(enum.Enum):
    QUIESCENT = "Quiescent"
    FIRING = "Firing"
    SATURATED = "Saturated"


def stability_from_traces(*sigmas: float, tol: float = ZERO_TOL) -> StabilityClass:
    """Classify a block-triangular equilibrium from its block traces.

    Every block has positive determinant, so the sign of each trace is the
    sign of that block's eigenvalue real parts.
    """
    if any(abs(s) < tol for s in sigmas):
        return StabilityClass.NONHYPERBOLIC
    if all(s < 0 for s in sigmas):
        return StabilityClass.ATTRACTING
    if all(s > 0 for s in sigmas):
        return StabilityClass.REPELLING
    return StabilityClass.SADDLE


# ---------------------------------------------------------------- cubic kernel

def _polish(coeffs, y, steps=2):
    c3, c2, c1, c0 = coeffs
    for _ in range(steps):
        g = ((c3 * y + c2) * y + c1) * y + c0
        dg = (3.0 * c3 * y + 2.0 * c2) * y + c1
        if dg == 0.0:
            break
        step = g / dg
        if not math.isfinite(step):
            break
        y -= step
    return y


def depressed_cubic_root(p: float, q: float) -> tuple[float, ...]:
    """Real roots of ``y**3/3 + p*y + q = 0``, ascending.

    One root when the discriminant is positive, otherwise three (repeated
    roots appear with multiplicity).  Every root gets two Newton steps.
    """
    coeffs = (1.0 / 3.0, 0.0, p, q)
    if p == 0.0 and q == 0.0:
        return (0.0, 0.0, 0.0)
    # y = scale * x keeps the working coefficients O(1) (no under/overflow)
    scale = max(math.sqrt(abs(p)), abs(q) ** (1.0 / 3.0))
    P = 3.0 * (p / scale) / scale
    Q = 3.0 * ((q / scale) / scale) / scale
    disc = (Q / 2.0) ** 2 + (P / 3.0) ** 3
    if disc > 0.0:
        s = math.sqrt(disc)
        # pick the sign that avoids cancellation; A is never zero here
        A = -math.copysign((abs(Q) / 2.0 + s) ** (1.0 / 3.0), Q)
        x = A - P / (3.0 * A)
        return (_polish(coeffs, scale * x),)
    m = 2.0 * math.sqrt(-P / 3.0)
    arg = (3.0 * Q / (2.0 * P)) * math.sqrt(-3.0 / P)
    theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
    roots = [scale * m * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]
    return tuple(sorted(_polish(coeffs, r) for r in roots))


def cubic_discriminant(c3: float, c2: float, c1: float, c0: float) -> float:
    return (18.0 * c3 * c2 * c1 * c0 - 4.0 * c2 ** 3 * c0 + c2 ** 2 * c1 ** 2
            - 4.0 * c3 * c1 ** 3 - 27.0 * c3 ** 2 * c0 ** 2)


def cubic_roots(c3: float, c2: float, c1: float, c0: float, *, degenerate_tol: float = 1e-14) -> tuple[float, ...]:
    """Real roots of a general cubic ``c3 y^3 + c2 y^2 + c1 y + c0``.

    Falls back to the quadratic (or linear) formula when ``c3`` is
    negligible relative to the other coefficients.
    """
    scale = max(abs(c3), abs(c2), abs(c1), abs(c0))
    if scale == 0.0:
        raise DegenerateCubic("all cubic coefficients vanish")
    if abs(c3) <= degenerate_tol * scale:
        return _quadratic_roots(c2, c1, c0)
    B, C, D = c2 / c3, c1 / c3, c0 / c3
    p = (C - B * B / 3.0) / 3.0
    q = (2.0 * B ** 3 / 27.0 - B * C / 3.0 + D) / 3.0
    shift = B / 3.0
    coeffs = (c3, c2, c1, c0)
    return tuple(sorted(_polish(coeffs, x - shift) for x in depressed_cubic_root(p, q)))


def _quadratic_roots(c2, c1, c0):
    if c2 == 0.0:
        if c1 == 0.0:
            raise DegenerateCubic("polynomial is constant")
        return (-c0 / c1,)
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        return ()
    s = math.sqrt(disc)
    t = -0.5 * (c1 + math.copysign(s, c1))
    if t == 0.0:
        return (0.0, 0.0)
    return tuple(sorted((t / c2, c0 / t)))


def _unique_root(p: float, q: float) -> float:
    roots = depressed_cubic_root(p, q)
    if len(roots) != 1:
        raise DegenerateCubic(f"expected one real root for p={p}, q={q}, got {len(roots)}")
    return roots[0]


# ---------------------------------------------------------------- single neuron

def single_rhs(params: ModelParams, I: float, y: float, z: float) -> tuple[float, float]:
    return (y - y ** 3 / 3.0 - params.a - z + I, params.epsilon * (y - params.b * z))


def single_equilibrium(params: ModelParams, I: float) -> NeuronState:
    y = _unique_root(params.b_tilde, params.a - I)
    return NeuronState(y, y / params.b)


def block_eigenvalues(params: ModelParams, y: float, gamma: float = 0.0) -> tuple[complex, complex]:
    """Eigenvalues of ``[[1 - y^2 - gamma, -1], [eps, -b eps]]``, larger first.

    The determinant is ``eps (1 - b + b y^2 + b gamma)``.
    """
    b, eps = params.b, params.epsilon
    tr = 1.0 - y * y - gamma - b * eps
    det = eps * (1.0 - b + b * y * y + b * gamma)
    root = cmath.sqrt(tr * tr - 4.0 * det)
    return (0.5 * (tr + root), 0.5 * (tr - root))


def single_eigenvalues(params: ModelParams, eq: NeuronState) -> tuple[complex, complex]:
    return block_eigenvalues(params, eq.y)


def single_hopf_points(params: ModelParams) -> tuple[float, float]:
    """Inputs ``(I0, I1)`` of the lower and upper Hopf bifurcations."""
    s2 = 1.0 - params.b * params.epsilon
    if s2 <= 0.0:
        raise NoHopf(f"1 - b*eps = {s2} <= 0")
    y = math.sqrt(s2)
    bt = params.b_tilde
    shift = y ** 3 / 3.0 + bt * y
    return (params.a - shift, params.a + shift)


def cubic_coefficient_single(params: ModelParams) -> float:
    b, eps = params.b, params.epsilon
    den = 1.0 - b * b * eps
    if den == 0.0:
        raise Degenerate("1 - b^2 eps = 0")
    return (2.0 * b - b * b * eps - 1.0) / (8.0 * den)


def classify_single_regime(params: ModelParams, I: float, tol: float = REGIME_TOL) -> Regime:
    I0, I1 = single_hopf_points(params)
    if abs(I - I0) < tol:
        raise BoundaryPoint(f"I={I} is within {tol} of the lower Hopf point {I0}", curve="I0")
    if abs(I - I1) < tol:
        raise BoundaryPoint(f"I={I} is within {tol} of the upper Hopf point {I1}", curve="I1")
    if I < I0:
        return Regime.QUIESCENT
    if I < I1:
        return Regime.FIRING
    return Regime.SATURATED

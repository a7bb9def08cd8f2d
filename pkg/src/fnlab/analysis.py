"""Classifiers over simulated trajectories.

Spike detection, behaviour labels (including mixed-mode signatures), phase
locking between two spike trains and proximity of a trajectory to the
repelling middle branch of a driven neuron's critical manifold.

The thresholds are tuned for the default parameter preset and are reported
alongside every result.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numba
import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.signal import find_peaks

from .core import ModelParams
from .errors import InsufficientData, InvalidParams
from .pair import DrivePoint
from .simulator import Trajectory

__all__ = [
    "SPIKE_THRESHOLD",
    "SPIKE_REARM",
    "PEAK_PROMINENCE",
    "MIN_PEAKS",
    "CONVERGED_SPEED",
    "MMO_SEPARATION",
    "MMO_SUSTAIN",
    "LOCK_TOL",
    "CANARD_K",
    "CANARD_MIN_SLOW",
    "SpikeTrain",
    "Behavior",
    "BehaviorLabel",
    "PhaseLockReport",
    "CanardReport",
    "detect_spikes",
    "classify_behavior",
    "phase_lock_report",
    "canard_proximity",
    "analysis_report",
]

SPIKE_THRESHOLD = 0.0
SPIKE_REARM = -0.5
# local maxima with less prominence are integration ripples, not oscillations
PEAK_PROMINENCE = 0.15
MIN_PEAKS = 20
CONVERGED_SPEED = 1e-6
MMO_SEPARATION = 0.5
MMO_SUSTAIN = 0.10
LOCK_TOL = 0.02
MAX_RATIO_DEN = 4
CANARD_K = 5.0
CANARD_MIN_SLOW = 0.1
BRANCH_SAMPLES = 201


@dataclass(frozen=True)
class SpikeTrain:
    channel: str
    times: np.ndarray
    t_start: float = 0.0
    t_end: float = 0.0

    def __len__(self):
        return len(self.times)

    @property
    def isi(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def mean_period(self) -> float:
        if len(self.times) < 2:
            return math.nan
        return float(np.mean(self.isi))

    @property
    def cv(self) -> float:
        if len(self.times) < 3:
            return math.nan
        d = self.isi
        return float(np.std(d) / np.mean(d))


class Behavior(enum.Enum):
    QUIESCENT = "Quiescent"
    FIRING = "Firing"
    SATURATED = "Saturated"
    MMO = "MMO"
    SMALL_OSCILLATIONS = "SmallOscillations"


@dataclass(frozen=True)
class BehaviorLabel:
    tag: Behavior
    mmo_signature: tuple | None = None
    n_peaks: int = 0
    centers: tuple = ()
    large_fraction: float = math.nan
    terminal_speed: float = math.nan

    @property
    def dominant_signature(self):
        """Most frequent (large, small) pair, or None outside MMO."""
        if not self.mmo_signature:
            return None
        vals, counts = np.unique(np.array(self.mmo_signature), axis=0, return_counts=True)
        return tuple(int(v) for v in vals[np.argmax(counts)])


@dataclass(frozen=True)
class PhaseLockReport:
    locked: bool
    offset: float
    offset_std: float
    ratio: tuple  # (p, q): p spikes of A per q spikes of B
    frequency_ratio: float  # f_B / f_A
    drift: float  # offset change per unit time
    period_A: float

    def as_dict(self) -> dict:
        return {
            "locked": self.locked,
            "offset": self.offset,
            "offset_std": self.offset_std,
            "ratio": f"{self.ratio[0]}:{self.ratio[1]}",
            "frequency_ratio": self.frequency_ratio,
            "drift": self.drift,
        }


@dataclass(frozen=True)
class CanardReport:
    flagged: bool
    max_slow_duration: float
    K: float
    min_slow_duration: float
    samples_inside: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {"flagged": self.flagged, "max_slow_duration": self.max_slow_duration,
                "K": self.K, "min_slow_duration": self.min_slow_duration}


# ---------------------------------------------------------------- spikes

def detect_spikes(traj: Trajectory, channel: str, threshold: float = SPIKE_THRESHOLD,
                  rearm: float = SPIKE_REARM) -> SpikeTrain:
    """Upward crossings of ``threshold``; the detector re-arms only after ``y < rearm``."""
    if rearm >= threshold:
        raise InvalidParams("rearm level must lie below the spike threshold")
    y = traj.y(channel)
    t = traj.t
    times = []
    armed = bool(len(y)) and y[0] < threshold
    for k in range(1, len(y)):
        if armed and y[k - 1] < threshold <= y[k]:
            frac = (threshold - y[k - 1]) / (y[k] - y[k - 1])
            times.append(t[k - 1] + frac * (t[k] - t[k - 1]))
            armed = False
        elif not armed and y[k] < rearm:
            armed = True
    span = (float(t[0]), float(t[-1])) if len(t) else (0.0, 0.0)
    return SpikeTrain(channel, np.array(times), *span)


# ---------------------------------------------------------------- behaviour

def _terminal_speed(traj: Trajectory, channel: str, window: float = 10.0) -> float:
    col = traj.column(channel)
    t = traj.t
    k0 = max(0, int(np.searchsorted(t, t[-1] - window)) - 1)
    seg = traj.states[k0:, col:col + 2]
    if len(seg) < 3:
        return math.inf
    v = np.gradient(seg, t[k0:], axis=0)
    return float(np.max(np.hypot(v[:, 0], v[:, 1])))


def _two_means(h: np.ndarray):
    """Two-cluster split of peak heights seeded at the extremes."""
    if h.min() == h.max():
        return np.array([h[0], h[0]]), np.zeros(len(h), dtype=int)
    init = np.array([[h.min()], [h.max()]])
    centers, labels = kmeans2(h[:, None], init, minit="matrix", iter=50)
    return centers[:, 0], labels


def _signature(is_large: np.ndarray) -> tuple:
    """(large, small) counts for each complete period; a period opens with a large peak."""
    sig = []
    k = 0
    n = len(is_large)
    while k < n and is_large[k]:  # skip a partial leading burst
        k += 1
    while k < n and not is_large[k]:
        k += 1
    while k < n:
        L = 0
        while k < n and is_large[k]:
            L += 1
            k += 1
        s = 0
        while k < n and not is_large[k]:
            s += 1
            k += 1
        if k < n:  # the period closed on the next large peak
            sig.append((L, s))
    return tuple(sig)


def classify_behavior(traj: Trajectory, channel: str, *, prominence: float = PEAK_PROMINENCE,
                      min_peaks: int = MIN_PEAKS) -> BehaviorLabel:
    """Label the post-transient behaviour of ``channel``.

    Converged trajectories are Quiescent or Saturated by the sign of ``y``.
    Otherwise peak heights are split into two amplitude clusters; two
    well-separated, sustained clusters make an MMO.
    """
    y = traj.y(channel)
    if len(y) < 3:
        raise InsufficientData("trajectory has fewer than three samples")
    speed = _terminal_speed(traj, channel)
    if speed < CONVERGED_SPEED:
        tag = Behavior.SATURATED if y[-1] > 0 else Behavior.QUIESCENT
        return BehaviorLabel(tag, None, 0, (), math.nan, speed)

    idx, _ = find_peaks(y, prominence=prominence)
    if len(idx) < min_peaks:
        raise InsufficientData(f"{len(idx)} peaks on {channel!r}, need {min_peaks}; lengthen the run")
    h = y[idx]
    centers, labels = _two_means(h)
    lo, hi = (0, 1) if centers[0] <= centers[1] else (1, 0)
    is_large = labels == hi
    frac = float(is_large.mean())
    sep = float(centers[hi] - centers[lo])
    if sep > MMO_SEPARATION and MMO_SUSTAIN <= frac <= 1.0 - MMO_SUSTAIN:
        return BehaviorLabel(Behavior.MMO, _signature(is_large), len(h),
                             (float(centers[lo]), float(centers[hi])), frac, speed)
    dominant = centers[hi] if frac >= 0.5 else centers[lo]
    if sep <= MMO_SEPARATION:
        dominant = float(h.mean())
    tag = Behavior.FIRING if dominant > SPIKE_THRESHOLD else Behavior.SMALL_OSCILLATIONS
    return BehaviorLabel(tag, None, len(h), (float(centers[lo]), float(centers[hi])), frac, speed)


# ---------------------------------------------------------------- locking

def _freq_ratio(trainA: SpikeTrain, trainB: SpikeTrain) -> float:
    return trainA.mean_period / trainB.mean_period


def phase_lock_report(trainA: SpikeTrain, trainB: SpikeTrain, tol: float = LOCK_TOL,
                      max_den: int = MAX_RATIO_DEN) -> PhaseLockReport:
    """Frequency ratio and spike-time offset between a driver ``A`` and a follower ``B``.

    The ratio ``p:q`` (``p`` spikes of A per ``q`` of B) is the ratio of mean
    inter-spike intervals rounded to denominator ``max_den``.  Every ``q``-th B
    spike is paired with the latest A spike at or before it; offsets are
    averaged on the circle of A's period.
    """
    if len(trainA) < 3 or len(trainB) < 3:
        raise InsufficientData("phase locking needs at least three spikes per train")
    TA = trainA.mean_period
    fr = _freq_ratio(trainA, trainB)  # f_B / f_A
    frac = Fraction(1.0 / fr).limit_denominator(max_den)
    p, q = frac.numerator, frac.denominator
    if p == 0:
        raise InsufficientData("follower spikes far slower than the driver")

    tb = trainB.times[::q]
    j = np.searchsorted(trainA.times, tb, side="right") - 1
    ok = j >= 0
    tb, j = tb[ok], j[ok]
    if len(tb) < 2:
        raise InsufficientData("too few paired spikes")
    off = tb - trainA.times[j]
    theta = 2.0 * np.pi * off / TA
    R = np.hypot(np.mean(np.cos(theta)), np.mean(np.sin(theta)))
    mean_theta = math.atan2(np.mean(np.sin(theta)), np.mean(np.cos(theta))) % (2.0 * np.pi)
    offset = mean_theta * TA / (2.0 * np.pi)
    circ_std = math.sqrt(max(0.0, -2.0 * math.log(max(R, 1e-300)))) * TA / (2.0 * np.pi)
    unwrapped = np.unwrap(theta) * TA / (2.0 * np.pi)
    drift = float(np.polyfit(tb, unwrapped, 1)[0]) if len(tb) > 2 else 0.0

    # the ratio must also hold separately on each half of the window
    stable = True
    mid = 0.5 * (max(trainA.t_start, trainB.t_start) + min(trainA.t_end, trainB.t_end))
    halves = []
    for sel in (lambda t: t < mid, lambda t: t >= mid):
        a, b = trainA.times[sel(trainA.times)], trainB.times[sel(trainB.times)]
        if len(a) >= 3 and len(b) >= 3:
            halves.append(Fraction(float(np.mean(np.diff(b)) / np.mean(np.diff(a)))).limit_denominator(max_den))
    if len(halves) == 2:
        stable = halves[0] == halves[1] == frac
    locked = bool(circ_std < tol * TA and stable)
    return PhaseLockReport(locked, float(offset), float(circ_std), (p, q), float(fr), drift, float(TA))


# ---------------------------------------------------------------- canards

@numba.njit(cache=True)
def _branch_distance(yA, yB, zB, a, gamma, n_branch):
    n = yA.shape[0]
    r = math.sqrt(1.0 - gamma)
    out = np.full(n, np.inf)
    ys = np.linspace(-r, r, n_branch)
    for k in range(n):
        yb = yB[k]
        if yb * yb >= 1.0 - gamma:
            continue
        best = np.inf
        for j in range(n_branch):
            s = ys[j]
            zc = s - s * s * s / 3.0 - a + gamma * (yA[k] - s)
            d = (yb - s) ** 2 + (zB[k] - zc) ** 2
            if d < best:
                best = d
        out[k] = math.sqrt(best)
    return out


def canard_proximity(traj: Trajectory, params: ModelParams, pt: DrivePoint, channel: str = "B",
                     driver: str = "A", K: float = CANARD_K,
                     min_slow_duration: float = CANARD_MIN_SLOW) -> CanardReport:
    """Longest slow-time stretch spent within ``K*eps`` of B's repelling branch.

    The branch is the middle piece of ``z = y - y^3/3 - a + gamma (yA - y)``
    on ``y^2 < 1 - gamma``, taken at the instantaneous ``yA``.  Only samples
    with ``yB`` inside that interval count.
    """
    eps = params.epsilon
    if pt.gamma >= 1.0 or len(traj.t) < 2:
        return CanardReport(False, 0.0, K, min_slow_duration, 0)
    yA = np.ascontiguousarray(traj.y(driver))
    yB = np.ascontiguousarray(traj.y(channel))
    zB = np.ascontiguousarray(traj.z(channel))
    d = _branch_distance(yA, yB, zB, params.a, pt.gamma, BRANCH_SAMPLES)
    near = d < K * eps
    best = 0.0
    if near.any():
        # lengths of contiguous runs of near samples, converted to time
        edges = np.diff(np.concatenate(([0], near.astype(np.int8), [0])))
        starts = np.flatnonzero(edges == 1)
        stops = np.flatnonzero(edges == -1) - 1
        best = float(np.max(traj.t[stops] - traj.t[starts])) * eps
    inside = int(np.count_nonzero(np.isfinite(d)))
    return CanardReport(best >= min_slow_duration, best, K, min_slow_duration, inside)


# ---------------------------------------------------------------- report

def analysis_report(traj: Trajectory, channel: str, *, lock_with: str | None = None,
                    canard: tuple | None = None) -> dict:
    """JSON-ready summary.

    ``canard`` is ``(params, DrivePoint, driver_id)`` or None.
    """
    label = classify_behavior(traj, channel)
    spikes = detect_spikes(traj, channel)
    out = {
        "channel": channel,
        "label": label.tag.value,
        "mmo_signature": [list(s) for s in label.mmo_signature] if label.mmo_signature else None,
        "spikes": [float(t) for t in spikes.times],
        "lock": None,
        "canard": None,
        "thresholds": {"spike": SPIKE_THRESHOLD, "rearm": SPIKE_REARM, "prominence": PEAK_PROMINENCE,
                       "mmo_separation": MMO_SEPARATION, "mmo_sustain": MMO_SUSTAIN, "lock_tol": LOCK_TOL},
    }
    if lock_with is not None:
        rep = phase_lock_report(detect_spikes(traj, lock_with), spikes)
        out["lock"] = rep.as_dict()
    if canard is not None:
        params, pt, driver = canard
        out["canard"] = canard_proximity(traj, params, pt, channel, driver).as_dict()
    return out

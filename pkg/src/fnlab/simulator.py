"""Time integration of tree networks in the fast time ``t``.

State layout is ``[y_1, z_1, y_2, z_2, ...]`` in the network's topological
order.  ``rk4`` is a compiled fixed-step loop; ``rk45`` delegates to
SciPy's Dormand-Prince pair and samples the dense output on a uniform grid.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.integrate import solve_ivp

from .core import single_equilibrium
from .errors import BlowUp, InvalidParams
from .tree import TreeNetwork

__all__ = [
    "DEFAULT_DT",
    "DEFAULT_T_END",
    "CANARD_DT",
    "TRANSIENT",
    "BLOWUP_LIMIT",
    "Trajectory",
    "vector_field",
    "default_initial_state",
    "integrate",
    "read_trajectory_csv",
]

DEFAULT_DT = 0.01
CANARD_DT = 0.001
DEFAULT_T_END = 2000.0
TRANSIENT = 500.0
BLOWUP_LIMIT = 1e6
RK45_RTOL = 1e-8
RK45_ATOL = 1e-10


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # (n_samples, 2k)
    node_ids: tuple
    dt: float
    method: str
    net_digest: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.states.shape != (len(self.t), 2 * len(self.node_ids)):
            raise InvalidParams("states shape does not match t and node_ids")
        self.t.setflags(write=False)
        self.states.setflags(write=False)

    def column(self, node: str) -> int:
        try:
            return 2 * self.node_ids.index(node)
        except ValueError:
            raise InvalidParams(f"unknown channel {node!r}; have {list(self.node_ids)}") from None

    def y(self, node: str) -> np.ndarray:
        return self.states[:, self.column(node)]

    def z(self, node: str) -> np.ndarray:
        return self.states[:, self.column(node) + 1]

    def after(self, t0: float) -> "Trajectory":
        """Copy restricted to samples with ``t >= t0``."""
        k = int(np.searchsorted(self.t, t0 - 1e-9 * max(1.0, abs(t0))))
        return Trajectory(self.t[k:].copy(), self.states[k:].copy(), self.node_ids,
                          self.dt, self.method, self.net_digest, dict(self.meta))

    def thin(self, every: int) -> "Trajectory":
        if every <= 1:
            return self
        return Trajectory(self.t[::every].copy(), self.states[::every].copy(), self.node_ids,
                          self.dt * every, self.method, self.net_digest, dict(self.meta))

    def header(self) -> list:
        return ["t"] + [f"{v}_{n}" for n in self.node_ids for v in ("y", "z")]

    def write_csv(self, fh, digits: int = 12) -> None:
        fmt = f"%.{digits}g"
        fh.write(",".join(self.header()) + "\n")
        block = np.column_stack([self.t, self.states])
        np.savetxt(fh, block, fmt=fmt, delimiter=",")


def read_trajectory_csv(fh, method: str = "csv") -> Trajectory:
    if isinstance(fh, str):
        fh = io.StringIO(fh)
    reader = csv.reader([fh.readline()])
    header = next(reader)
    if not header or header[0] != "t" or (len(header) - 1) % 2:
        raise InvalidParams("trajectory CSV must start with t,y_<id>,z_<id>,...")
    ids = []
    for k in range(1, len(header), 2):
        ycol, zcol = header[k], header[k + 1]
        if not (ycol.startswith("y_") and zcol == "z_" + ycol[2:]):
            raise InvalidParams(f"bad column pair {ycol},{zcol}")
        ids.append(ycol[2:])
    data = np.loadtxt(fh, delimiter=",", ndmin=2)
    t = data[:, 0].copy()
    dt = float(np.median(np.diff(t))) if len(t) > 1 else 0.0
    return Trajectory(t, data[:, 1:].copy(), tuple(ids), dt, method)


# ---------------------------------------------------------------- kernels

@numba.njit(cache=True)
def _rhs(x, I, parent, gamma, a, b, eps, out):
    for i in range(I.shape[0]):
        y = x[2 * i]
        z = x[2 * i + 1]
        dy = y - y * y * y / 3.0 - a - z + I[i]
        p = parent[i]
        if p >= 0:
            dy += gamma[i] * (x[2 * p] - y)
        out[2 * i] = dy
        out[2 * i + 1] = eps * (y - b * z)


@numba.njit(cache=True)
def _rk4(x0, I, parent, gamma, a, b, eps, dt, n_steps, every, limit):
    m = x0.shape[0]
    n_out = n_steps // every + 1
    X = np.empty((n_out, m))
    x = x0.copy()
    X[0] = x
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)
    h2 = 0.5 * dt
    h6 = dt / 6.0
    row = 1
    for s in range(1, n_steps + 1):
        _rhs(x, I, parent, gamma, a, b, eps, k1)
        for j in range(m):
            tmp[j] = x[j] + h2 * k1[j]
        _rhs(tmp, I, parent, gamma, a, b, eps, k2)
        for j in range(m):
            tmp[j] = x[j] + h2 * k2[j]
        _rhs(tmp, I, parent, gamma, a, b, eps, k3)
        for j in range(m):
            tmp[j] = x[j] + dt * k3[j]
        _rhs(tmp, I, parent, gamma, a, b, eps, k4)
        bad = False
        for j in range(m):
            x[j] += h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not (abs(x[j]) <= limit):
                bad = True
        if bad:
            return X[:row], s
        if s % every == 0:
            X[row] = x
            row += 1
    return X, -1


def vector_field(net: TreeNetwork, state) -> np.ndarray:
    I, parent, gamma = net.arrays()
    p = net.params
    x = np.asarray(state, dtype=float)
    out = np.empty_like(x)
    _rhs(x, I, parent, gamma, p.a, p.b, p.epsilon, out)
    return out


def default_initial_state(net: TreeNetwork) -> np.ndarray:
    """Every node at the ``I = 0`` single-neuron equilibrium, root nudged by +0.01 in y.

    Entries of ``net.initial`` override the default per node.
    """
    eq = single_equilibrium(net.params, 0.0)
    x = np.empty(2 * len(net.order))
    for k, n in enumerate(net.order):
        if n in net.initial:
            x[2 * k], x[2 * k + 1] = net.initial[n]
        else:
            x[2 * k], x[2 * k + 1] = eq.y, eq.z
    if net.order[0] not in net.initial:
        x[0] += 0.01
    return x


def integrate(net: TreeNetwork, ic=None, t_span=(0.0, DEFAULT_T_END), dt: float = DEFAULT_DT,
              method: str = "rk4", every: int = 1) -> Trajectory:
    """Integrate ``net`` from ``ic`` (default: :func:`default_initial_state`).

    ``every`` keeps one sample in ``every`` steps.  Raises :class:`BlowUp` if
    any component exceeds ``1e6`` in magnitude.
    """
    t0, t1 = map(float, t_span)
    if not dt > 0.0:
        raise InvalidParams(f"dt must be positive, got {dt}")
    if not t1 > t0:
        raise InvalidParams(f"empty time span {t_span}")
    if every < 1:
        raise InvalidParams("every must be >= 1")
    x0 = default_initial_state(net) if ic is None else np.asarray(ic, dtype=float).copy()
    if x0.shape != (2 * len(net.order),):
        raise InvalidParams(f"initial state must have length {2 * len(net.order)}")
    if not np.all(np.isfinite(x0)):
        raise InvalidParams("initial state must be finite")
    if np.max(np.abs(x0)) > BLOWUP_LIMIT:
        raise BlowUp(f"initial state exceeds {BLOWUP_LIMIT:g}", t_fail=t0)
    n_steps = int(round((t1 - t0) / dt))
    p = net.params
    I, parent, gamma = net.arrays()

    if method == "rk4":
        X, fail = _rk4(x0, I, parent, gamma, p.a, p.b, p.epsilon, dt, n_steps, every, BLOWUP_LIMIT)
        if fail >= 0:
            raise BlowUp(f"state exceeded {BLOWUP_LIMIT:g} at t={t0 + fail * dt:.6g}", t_fail=t0 + fail * dt)
        t = t0 + dt * every * np.arange(X.shape[0])
    elif method == "rk45":
        t = t0 + dt * every * np.arange(n_steps // every + 1)

        def f(_t, x):
            out = np.empty_like(x)
            _rhs(x, I, parent, gamma, p.a, p.b, p.epsilon, out)
            return out

        def blowup(_t, x):
            return BLOWUP_LIMIT - np.max(np.abs(x))
        blowup.terminal = True

        sol = solve_ivp(f, (t0, t[-1]), x0, method="RK45", t_eval=t, rtol=RK45_RTOL,
                        atol=RK45_ATOL, events=blowup)
        if sol.status == 1 or not np.all(np.isfinite(sol.y)):
            tf = float(sol.t_events[0][0]) if sol.t_events and len(sol.t_events[0]) else float(sol.t[-1])
            raise BlowUp(f"state exceeded {BLOWUP_LIMIT:g} at t={tf:.6g}", t_fail=tf)
        if sol.status != 0:
            raise BlowUp(f"rk45 failed: {sol.message}", t_fail=float(sol.t[-1]))
        X = sol.y.T.copy()
    else:
        raise InvalidParams(f"unknown method {method!r}; use rk4 or rk45")
    return Trajectory(np.ascontiguousarray(t), np.ascontiguousarray(X), tuple(net.order),
                      dt, method, net.digest())

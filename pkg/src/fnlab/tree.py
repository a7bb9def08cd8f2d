"""Directed trees of FitzHugh-Nagumo neurons.

Each node has at most one parent, so the linearisation is block
lower-triangular in any root-first order and the equilibrium is obtained by
one cubic solve per node, parents first.
"""
from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import PRESETS, ModelParams, _unique_root, block_eigenvalues
from .errors import CycleDetected, Disconnected, InvalidParams, MultipleParents, NoHopf

__all__ = [
    "Node",
    "Edge",
    "TreeNetwork",
    "ChainEquilibrium",
    "validate_tree",
    "tree_equilibrium",
    "tree_eigenvalues",
    "tree_jacobian",
    "node_hopf_inputs",
    "two_node_network",
    "chain_network",
]


@dataclass(frozen=True)
class Node:
    id: str
    I: float = 0.0


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    gamma: float


@dataclass
class TreeNetwork:
    """Nodes, directed couplings and shared intrinsic parameters.

    ``initial`` optionally maps node ids to ``(y, z)``.  The root-first order
    is computed on construction; invalid topologies raise immediately.
    """

    nodes: Sequence[Node]
    edges: Sequence[Edge]
    params: ModelParams = field(default_factory=ModelParams)
    initial: Mapping[str, tuple] = field(default_factory=dict)
    order: tuple = field(init=False, default=())

    def __post_init__(self):
        self.nodes = tuple(self.nodes)
        self.edges = tuple(self.edges)
        for n in self.nodes:
            if not math.isfinite(n.I) or n.I < 0.0:
                raise InvalidParams(f"node {n.id!r}: input must be finite and >= 0")
        for e in self.edges:
            if not math.isfinite(e.gamma) or e.gamma < 0.0:
                raise InvalidParams(f"edge {e.source}->{e.target}: gamma must be finite and >= 0")
        self.order = validate_tree(self)

    # lookups
    @property
    def inputs(self) -> dict:
        return {n.id: n.I for n in self.nodes}

    @property
    def parent(self) -> dict:
        return {e.target: (e.source, e.gamma) for e in self.edges}

    def index(self) -> dict:
        return {nid: k for k, nid in enumerate(self.order)}

    def arrays(self):
        """``(I, parent_index, gamma)`` in topological order; roots have parent -1."""
        idx = self.index()
        par = self.parent
        inputs = self.inputs
        I = np.array([inputs[n] for n in self.order], dtype=float)
        pidx = np.array([idx[par[n][0]] if n in par else -1 for n in self.order], dtype=np.int64)
        g = np.array([par[n][1] if n in par else 0.0 for n in self.order], dtype=float)
        return I, pidx, g

    def with_overrides(self, I_root=None, gamma=None) -> "TreeNetwork":
        root = self.order[0]
        nodes = [Node(n.id, I_root if (I_root is not None and n.id == root) else n.I) for n in self.nodes]
        edges = [Edge(e.source, e.target, gamma if gamma is not None else e.gamma) for e in self.edges]
        return TreeNetwork(nodes, edges, self.params, dict(self.initial))

    # serialisation
    def to_dict(self) -> dict:
        d = {
            "params": self.params.as_dict(),
            "nodes": [{"id": n.id, "I": n.I} for n in self.nodes],
            "edges": [{"from": e.source, "to": e.target, "gamma": e.gamma} for e in self.edges],
        }
        if self.initial:
            d["initial"] = {k: {"y": v[0], "z": v[1]} for k, v in self.initial.items()}
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "TreeNetwork":
        try:
            p = d.get("params", "paper")
            if isinstance(p, str):
                if p not in PRESETS:
                    raise InvalidParams(f"unknown preset {p!r}")
                params = PRESETS[p]
            else:
                params = ModelParams(float(p["a"]), float(p["b"]), float(p["epsilon"]))
            nodes = [Node(str(n["id"]), float(n.get("I", 0.0))) for n in d["nodes"]]
            edges = [Edge(str(e["from"]), str(e["to"]), float(e["gamma"])) for e in d.get("edges", [])]
            initial = {str(k): (float(v["y"]), float(v["z"])) for k, v in d.get("initial", {}).items()}
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidParams):
                raise
            raise InvalidParams(f"malformed network description: {exc}") from exc
        unknown = set(initial) - {n.id for n in nodes}
        if unknown:
            raise InvalidParams(f"initial state for unknown nodes {sorted(unknown)}")
        return cls(nodes, edges, params, initial)

    @classmethod
    def load(cls, path) -> "TreeNetwork":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def validate_tree(net: TreeNetwork) -> tuple:
    """Root-first order of a connected tree; children follow node-list order."""
    ids = [n.id for n in net.nodes]
    if not ids:
        raise Disconnected("network has no nodes")
    if len(set(ids)) != len(ids):
        raise InvalidParams("duplicate node ids")
    known = set(ids)
    parent = {}
    for e in net.edges:
        if e.source not in known or e.target not in known:
            raise InvalidParams(f"edge {e.source}->{e.target} references an unknown node")
        if e.source == e.target:
            raise CycleDetected(f"self-loop on {e.source!r}")
        if e.target in parent:
            raise MultipleParents(f"node {e.target!r} has more than one incoming edge")
        parent[e.target] = e.source

    # walking up from any node must terminate at a root
    for start in ids:
        seen = set()
        n = start
        while n in parent:
            if n in seen:
                raise CycleDetected(f"cycle through {n!r}")
            seen.add(n)
            n = parent[n]

    roots = [n for n in ids if n not in parent]
    if len(roots) != 1:
        raise Disconnected(f"expected a single root, found {len(roots)}: {roots}")
    rank = {nid: k for k, nid in enumerate(ids)}
    children = {nid: [] for nid in ids}
    for child, par in parent.items():
        children[par].append(child)
    order = []
    queue = deque(roots)
    while queue:
        n = queue.popleft()
        order.append(n)
        queue.extend(sorted(children[n], key=rank.__getitem__))
    return tuple(order)


@dataclass(frozen=True)
class ChainEquilibrium:
    order: tuple
    y: dict
    z: dict
    eigenvalues: dict

    def state_vector(self) -> np.ndarray:
        return np.array([v for n in self.order for v in (self.y[n], self.z[n])])


def tree_equilibrium(net: TreeNetwork) -> ChainEquilibrium:
    p = net.params
    par = net.parent
    inputs = net.inputs
    y, z, eig = {}, {}, {}
    for n in net.order:
        if n in par:
            src, g = par[n]
            I_tilde = g * y[src] + inputs[n] - p.a
            y[n] = _unique_root(p.b_tilde + g, -I_tilde)
        else:
            g = 0.0
            y[n] = _unique_root(p.b_tilde, p.a - inputs[n])
        z[n] = y[n] / p.b
        eig[n] = block_eigenvalues(p, y[n], g)
    return ChainEquilibrium(net.order, y, z, eig)


def tree_eigenvalues(net: TreeNetwork, eq: ChainEquilibrium) -> dict:
    """Per-node block eigenvalue pairs keyed by node id."""
    par = net.parent
    return {n: block_eigenvalues(net.params, eq.y[n], par[n][1] if n in par else 0.0) for n in net.order}


def tree_jacobian(net: TreeNetwork, state) -> np.ndarray:
    """Full ``2k x 2k`` Jacobian in topological order."""
    p = net.params
    _, pidx, g = net.arrays()
    k = len(net.order)
    J = np.zeros((2 * k, 2 * k))
    for i in range(k):
        y = state[2 * i]
        J[2 * i, 2 * i] = 1.0 - y * y - g[i]
        J[2 * i, 2 * i + 1] = -1.0
        J[2 * i + 1, 2 * i] = p.epsilon
        J[2 * i + 1, 2 * i + 1] = -p.b * p.epsilon
        if pidx[i] >= 0:
            J[2 * i, 2 * pidx[i]] = g[i]
    return J


def node_hopf_inputs(net: TreeNetwork, node: str, eq: ChainEquilibrium | None = None) -> tuple[float, float]:
    """Own inputs ``(IH_minus, IH_plus)`` at which ``node``'s block has zero trace.

    The upstream equilibrium does not depend on the node's own input, so the
    shift term uses the parent's current equilibrium with the node's own
    input excluded.
    """
    par = net.parent
    if node not in par:
        raise NoHopf(f"node {node!r} has no parent; use single_hopf_points")
    src, g = par[node]
    p = net.params
    if g >= 1.0 - p.b * p.epsilon:
        raise NoHopf(f"coupling {g} into {node!r} is >= 1 - b eps")
    s2 = 1.0 - g - p.b * p.epsilon
    if eq is None:
        eq = tree_equilibrium(net)
    s = math.sqrt(s2)
    shift = g * eq.y[src] - p.a
    cubic = s ** 3 / 3.0 + s * (p.b_tilde + g)
    return (-cubic - shift, cubic - shift)


def two_node_network(I: float, gamma: float, params: ModelParams | None = None) -> TreeNetwork:
    return TreeNetwork([Node("A", I), Node("B", 0.0)], [Edge("A", "B", gamma)], params or ModelParams())


def chain_network(inputs: Sequence[float], gammas, params: ModelParams | None = None, prefix: str = "N") -> TreeNetwork:
    """Linear chain ``N1 -> N2 -> ...``; ``gammas`` is a scalar or one value per edge."""
    k = len(inputs)
    if np.isscalar(gammas):
        gammas = [float(gammas)] * (k - 1)
    nodes = [Node(f"{prefix}{i + 1}", float(I)) for i, I in enumerate(inputs)]
    edges = [Edge(nodes[i].id, nodes[i + 1].id, float(gammas[i])) for i in range(k - 1)]
    return TreeNetwork(nodes, edges, params or ModelParams())

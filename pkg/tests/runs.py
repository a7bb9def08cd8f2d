"""Cached simulations shared by the analysis, CLI and acceptance tests."""
from functools import lru_cache

from fnlab.simulator import TRANSIENT, integrate
from fnlab.tree import TreeNetwork, chain_network, two_node_network


@lru_cache(maxsize=None)
def pair_run(I, gamma, dt=0.001, t_end=2000.0, transient=TRANSIENT):
    """Two-node run from the default initial state, transient discarded."""
    return integrate(two_node_network(I, gamma), t_span=(0.0, t_end), dt=dt).after(transient)


@lru_cache(maxsize=None)
def net_run(net_json, dt=0.001, t_end=2000.0, transient=TRANSIENT):
    import json
    net = TreeNetwork.from_dict(json.loads(net_json))
    return integrate(net, t_span=(0.0, t_end), dt=dt).after(transient)


@lru_cache(maxsize=None)
def chain4_run(t_end=4000.0, dt=0.001):
    net = chain_network([1.2, 0.4, 0.0, 0.0], 0.07)
    return integrate(net, t_span=(0.0, t_end), dt=dt).after(TRANSIENT)

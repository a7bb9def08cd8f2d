"""``fnlab`` command line.

Every command writes to ``--out`` (default stdout).  Exit status is 0 on
success, 2 for invalid input and 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys

import numpy as np

from . import analysis, desing, pair, simulator, tree
from .core import PRESETS, ModelParams, block_eigenvalues, single_hopf_points
from .errors import FNLabError, InputError, InvalidParams, NumericalError

DIGITS = 12


def _fmt(x) -> str:
    return f"{x:.{DIGITS}g}"


def _round(obj):
    """Recursively round floats to ``DIGITS`` significant digits for JSON output."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(_fmt(obj))
    if isinstance(obj, complex):
        return [_round(obj.real), _round(obj.imag)]
    if isinstance(obj, np.generic):
        return _round(obj.item())
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def parse_range(text: str) -> np.ndarray:
    """``min:max:count`` with both endpoints included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParams(f"range {text!r} must look like min:max:count")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InvalidParams(f"range {text!r} has non-numeric parts") from None
    if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo or (n > 1 and hi == lo):
        raise InvalidParams(f"range {text!r} must have count >= 1 and max > min")
    return np.linspace(lo, hi, n)


def _workers(requested: int | None) -> int:
    cap = os.environ.get("FNLAB_THREADS")
    n = requested if requested is not None else 1
    if cap:
        try:
            n = min(n, max(1, int(cap))) if requested is not None else max(1, int(cap))
        except ValueError:
            raise InvalidParams(f"FNLAB_THREADS must be an integer, got {cap!r}") from None
    return max(1, n)


def _params(args) -> ModelParams:
    base = PRESETS[args.preset]
    a = base.a if args.a is None else args.a
    b = base.b if args.b is None else args.b
    eps = base.epsilon if args.epsilon is None else args.epsilon
    return ModelParams(a, b, eps)


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _dump_json(obj, fh):
    json.dump(_round(obj), fh, indent=2)
    fh.write("\n")


# ---------------------------------------------------------------- commands

def cmd_regions(args):
    params = _params(args)
    Is, gs = parse_range(args.I), parse_range(args.gamma)
    if Is[0] < 0 or gs[0] < 0:
        raise InvalidParams("I and gamma ranges must be non-negative")
    grid = pair.region_map(params, Is, gs, workers=_workers(args.workers))
    with _output(args.out) as fh:
        fh.write("I,gamma,region\n")
        for j, g in enumerate(gs):
            for i, I in enumerate(Is):
                fh.write(f"{_fmt(I)},{_fmt(g)},{int(grid[j, i])}\n")


def cmd_curves(args):
    params = _params(args)
    g = parse_range(args.gamma)
    I = parse_range(args.I)
    cs = pair.boundary_curves(params, (g[0], g[-1]), (I[0], I[-1]), n=args.n)
    with _output(args.out) as fh:
        fh.write("curve,param,I,gamma\n")
        for name, p, Iv, gv in cs.rows():
            ps = "" if math.isnan(p) else _fmt(p)
            fh.write(f"{name},{ps},{_fmt(Iv)},{_fmt(gv)}\n")


def cmd_desing(args):
    params = _params(args)
    pt = pair.DrivePoint(args.I, args.gamma)
    try:
        win = tuple(float(v) for v in args.window.split(","))
    except ValueError:
        win = ()
    if len(win) != 4 or not (win[1] > win[0] and win[3] > win[2]):
        raise InvalidParams("--window takes ymin_A,ymax_A,ymin_B,ymax_B with max > min")
    sings = desing.all_singularities(params, pt)
    with _output(args.out) as fh:
        _dump_json([s.as_dict() for s in sings], fh)
    if args.field:
        fs = desing.phase_field_sample(params, pt, win, n=args.n)
        with open(args.field, "w", encoding="utf-8") as fh:
            fh.write("yA,yB,rho1,rho2\n")
            for row in fs.rows():
                fh.write(",".join(_fmt(v) for v in row) + "\n")


def _network(args) -> tree.TreeNetwork:
    net = tree.TreeNetwork.load(args.net)
    if getattr(args, "I", None) is not None or getattr(args, "gamma", None) is not None:
        net = net.with_overrides(args.I, args.gamma)
    return net


def cmd_simulate(args):
    net = _network(args)
    traj = simulator.integrate(net, t_span=(0.0, args.t_end), dt=args.dt, method=args.method,
                               every=args.every)
    with _output(args.out) as fh:
        traj.write_csv(fh, DIGITS)


def cmd_analyze(args):
    with open(args.trajectory, encoding="utf-8") as fh:
        traj = simulator.read_trajectory_csv(fh)
    traj = traj.after(traj.t[0] + args.transient)
    canard = None
    if args.canard:
        if args.I is None or args.gamma is None:
            raise InvalidParams("--canard needs --I and --gamma")
        canard = (_params(args), pair.DrivePoint(args.I, args.gamma), args.driver)
    rep = analysis.analysis_report(traj, args.channel, lock_with=args.lock_with, canard=canard)
    with _output(args.out) as fh:
        _dump_json(rep, fh)


def cmd_tree_hopf(args):
    net = _network(args)
    p = net.params
    eq = tree.tree_equilibrium(net)
    par = net.parent
    rows = []
    for n in net.order:
        row = {"id": n, "parent": None, "gamma": None, "y": eq.y[n], "z": eq.z[n],
               "eigenvalues": list(eq.eigenvalues[n])}
        if n in par:
            src, g = par[n]
            row.update(parent=src, gamma=g)
            try:
                lo, hi = tree.node_hopf_inputs(net, n, eq)
            except NumericalError as exc:
                row.update(IH_minus=None, IH_plus=None, error=str(exc))
            else:
                row.update(IH_minus=lo, IH_plus=hi,
                           trace_at=[_trace_with_input(net, n, v) for v in (lo, hi)])
        else:
            lo, hi = single_hopf_points(p)
            row.update(IH_minus=lo, IH_plus=hi,
                       trace_at=[_trace_with_input(net, n, v) for v in (lo, hi)])
        rows.append(row)
    with _output(args.out) as fh:
        _dump_json({"params": p.as_dict(), "order": list(net.order), "nodes": rows}, fh)


def _trace_with_input(net, node, I):
    nodes = [tree.Node(m.id, I if m.id == node else m.I) for m in net.nodes]
    probe = tree.TreeNetwork(nodes, net.edges, net.params)
    y = tree.tree_equilibrium(probe).y[node]
    g = net.parent[node][1] if node in net.parent else 0.0
    return sum(block_eigenvalues(net.params, y, g)).real


# ---------------------------------------------------------------- parser

def _add_params(sp):
    g = sp.add_argument_group("model parameters")
    g.add_argument("--preset", default="paper", choices=sorted(PRESETS))
    g.add_argument("--a", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--epsilon", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fnlab", description="Directed FitzHugh-Nagumo network analysis")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("regions", help="region map over an (I, gamma) grid (CSV)")
    sp.add_argument("--I", default="0:2.5:200")
    sp.add_argument("--gamma", default="0:1.2:200")
    sp.add_argument("--workers", type=int)
    sp.add_argument("-o", "--out")
    _add_params(sp)
    sp.set_defaults(func=cmd_regions)

    sp = sub.add_parser("curves", help="analytic region boundaries and markers (CSV)")
    sp.add_argument("--I", default="0:2.5:2", help="I extent for horizontal curves")
    sp.add_argument("--gamma", default="0:1.2:2", help="gamma extent for vertical curves")
    sp.add_argument("--n", type=int, default=pair.CURVE_SAMPLES)
    sp.add_argument("-o", "--out")
    _add_params(sp)
    sp.set_defaults(func=cmd_curves)

    sp = sub.add_parser("desing", help="singularities of the desingularized system (JSON)")
    sp.add_argument("--I", type=float, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--field", help="also write the (yA, yB, rho1, rho2) grid to this CSV")
    sp.add_argument("--window", default="-2,2,-2,2")
    sp.add_argument("--n", type=int, default=desing.FIELD_RESOLUTION)
    sp.add_argument("-o", "--out")
    _add_params(sp)
    sp.set_defaults(func=cmd_desing)

    sp = sub.add_parser("simulate", help="integrate a network (CSV trajectory)")
    sp.add_argument("--net", required=True, help="network JSON")
    sp.add_argument("--I", type=float, help="override the root input")
    sp.add_argument("--gamma", type=float, help="override every edge coupling")
    sp.add_argument("--t-end", type=float, default=simulator.DEFAULT_T_END)
    sp.add_argument("--dt", type=float, default=simulator.DEFAULT_DT)
    sp.add_argument("--method", choices=("rk4", "rk45"), default="rk4")
    sp.add_argument("--every", type=int, default=1, help="keep one sample in N")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="classify a trajectory CSV (JSON report)")
    sp.add_argument("trajectory")
    sp.add_argument("--channel", default="B")
    sp.add_argument("--transient", type=float, default=simulator.TRANSIENT)
    sp.add_argument("--lock-with", help="driver channel for the phase-lock report")
    sp.add_argument("--canard", action="store_true", help="run the canard proximity test")
    sp.add_argument("--I", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--driver", default="A")
    sp.add_argument("-o", "--out")
    _add_params(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("tree-hopf", help="per-node equilibria and Hopf inputs (JSON)")
    sp.add_argument("--net", required=True)
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_tree_hopf)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args.func(args)
    except InputError as exc:
        print(f"fnlab: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"fnlab: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except FNLabError as exc:  # pragma: no cover
        print(f"fnlab: {exc}", file=sys.stderr)
        return 3
    except BrokenPipeError:
        # downstream closed early (e.g. ``| head``); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except OSError as exc:
        print(f"fnlab: error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"fnlab: error: malformed JSON: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

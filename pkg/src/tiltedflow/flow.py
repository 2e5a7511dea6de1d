"""Exact max-flow / min-cut on finite lattice networks.

Dinic blocking-flow on integer (fixed-point) capacities.  Undirected edges
are arc pairs with shared residual bookkeeping, so the antisymmetric net
flow satisfies |f(e)| <= t(e).  Super source/sink edges get capacity
sum(all)+1, i.e. effectively infinite without overflow.

A tiny exhaustive oracle (vertex bipartitions / edge subsets) backs the
engine in tests.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .geometry import BoundaryCondition, CylinderGraph


class FlowError(ValueError):
    pass


class InvalidNetwork(FlowError):
    pass


class TooLarge(FlowError):
    pass


@dataclass
class CutSet:
    edge_ids: tuple[int, ...]
    capacity: int


@dataclass
class FlowResult:
    value: int
    edge_flow: np.ndarray       # signed net flow per undirected edge
    cut: CutSet
    source_side: np.ndarray     # bool per vertex: residual-reachable from source


class FlowNetwork:
    """Undirected network with distinguished source/sink vertex sets."""

    def __init__(self, n_vertices: int, edges: Sequence[tuple[int, int]],
                 capacities: Sequence[int], sources: Iterable[int],
                 sinks: Iterable[int]):
        self.n = int(n_vertices)
        self.edges = [(int(u), int(v)) for u, v in edges]
        self.cap = [int(c) for c in capacities]
        self.sources = sorted(set(int(s) for s in sources))
        self.sinks = sorted(set(int(t) for t in sinks))
        if len(self.edges) != len(self.cap):
            raise InvalidNetwork("edge/capacity length mismatch")
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n) or u == v:
                raise InvalidNetwork("bad edge endpoints")
        for c in self.cap:
            if c < 0:
                raise InvalidNetwork("negative capacity")
        if set(self.sources) & set(self.sinks):
            raise InvalidNetwork("sources and sinks must be disjoint")
        if not self.sources or not self.sinks:
            raise InvalidNetwork("sources and sinks must be nonempty")


def max_flow(net: FlowNetwork) -> FlowResult:
    """Exact Dinic max flow with the canonical source-side min cut."""
    n = net.n
    S, T = n, n + 1
    inf = sum(net.cap) + 1

    head: list[list[int]] = [[] for _ in range(n + 2)]
    arc_to: list[int] = []
    arc_res: list[int] = []

    def add_arc(u, v, c_uv, c_vu):
        head[u].append(len(arc_to))
        arc_to.append(v)
        arc_res.append(c_uv)
        head[v].append(len(arc_to))
        arc_to.append(u)
        arc_res.append(c_vu)

    for (u, v), c in zip(net.edges, net.cap):
        add_arc(u, v, c, c)
    for s in net.sources:
        add_arc(S, s, inf, 0)
    for t in net.sinks:
        add_arc(t, T, inf, 0)

    level = [0] * (n + 2)
    it = [0] * (n + 2)
    total = 0
    while True:
        for i in range(n + 2):
            level[i] = -1
        dq = deque([S])
        level[S] = 0
        while dq:
            u = dq.popleft()
            for ai in head[u]:
                v = arc_to[ai]
                if arc_res[ai] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    dq.append(v)
        if level[T] < 0:
            break
        for i in range(n + 2):
            it[i] = 0
        # iterative blocking-flow DFS with current-arc pointers
        path: list[int] = []
        vpath: list[int] = [S]
        while True:
            u = vpath[-1]
            if u == T:
                push = min(arc_res[ai] for ai in path)
                for ai in path:
                    arc_res[ai] -= push
                    arc_res[ai ^ 1] += push
                total += push
                path.clear()
                del vpath[1:]
                continue
            advanced = False
            while it[u] < len(head[u]):
                ai = head[u][it[u]]
                v = arc_to[ai]
                if arc_res[ai] > 0 and level[v] == level[u] + 1:
                    path.append(ai)
                    vpath.append(v)
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                if u == S:
                    break
                level[u] = -2  # dead end for this phase
                path.pop()
                vpath.pop()

    # residual reachability from S
    reach = [False] * (n + 2)
    reach[S] = True
    dq = deque([S])
    while dq:
        u = dq.popleft()
        for ai in head[u]:
            v = arc_to[ai]
            if arc_res[ai] > 0 and not reach[v]:
                reach[v] = True
                dq.append(v)
    if reach[T]:
        raise AssertionError("flow terminated with augmenting path left")

    m = len(net.edges)
    flow = np.zeros(m, dtype=np.int64)
    cut_ids = []
    cut_cap = 0
    for ei, ((u, v), c) in enumerate(zip(net.edges, net.cap)):
        flow[ei] = c - arc_res[2 * ei]  # positive = u -> v
        if reach[u] != reach[v]:
            cut_ids.append(ei)
            cut_cap += c
    if cut_cap != total:
        raise AssertionError("min cut capacity %d != flow value %d"
                             % (cut_cap, total))
    src_side = np.array(reach[:n], dtype=bool)
    return FlowResult(total, flow, CutSet(tuple(cut_ids), cut_cap), src_side)


def check_flow_result(net: FlowNetwork, res: FlowResult) -> None:
    """Assert node law, capacity constraints, value = cut capacity."""
    n = net.n
    excess = [0] * n
    for ei, (u, v) in enumerate(net.edges):
        f = int(res.edge_flow[ei])
        if abs(f) > net.cap[ei]:
            raise AssertionError("capacity violated on edge %d" % ei)
        excess[u] -= f
        excess[v] += f
    out_src = -sum(excess[s] for s in net.sources)
    in_snk = sum(excess[t] for t in net.sinks)
    interior = set(range(n)) - set(net.sources) - set(net.sinks)
    for x in interior:
        if excess[x] != 0:
            raise AssertionError("node law violated at vertex %d" % x)
    if out_src != res.value or in_snk != res.value:
        raise AssertionError("flow in/out mismatch")
    if res.cut.capacity != res.value:
        raise AssertionError("certifying cut does not match the value")
    # deleting the cut must disconnect sources from sinks
    removed = set(res.cut.edge_ids)
    adj: list[list[int]] = [[] for _ in range(n)]
    for ei, (u, v) in enumerate(net.edges):
        if ei not in removed:
            adj[u].append(v)
            adj[v].append(u)
    seen = [False] * n
    dq = deque(net.sources)
    for s in net.sources:
        seen[s] = True
    while dq:
        u = dq.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                dq.append(v)
    if any(seen[t] for t in net.sinks):
        raise AssertionError("cut does not disconnect sources from sinks")


def brute_force_min_cut(net: FlowNetwork) -> CutSet:
    """Exact min cut by vertex-bipartition enumeration (small networks only).

    Every minimal source/sink cut is the coboundary of a vertex bipartition,
    so scanning bipartitions is equivalent to scanning all cut edge sets.
    """
    if len(net.edges) > 24:
        raise TooLarge("brute force limited to 24 edges")
    free = [x for x in range(net.n) if x not in net.sources and x not in net.sinks]
    if len(free) > 22:
        raise TooLarge("brute force limited to 22 free vertices")
    nfree = len(free)
    pos = {x: i for i, x in enumerate(free)}
    masks = np.arange(1 << nfree, dtype=np.int64)
    side = np.zeros((1 << nfree, net.n), dtype=bool)
    for x in net.sources:
        side[:, x] = True
    for x, i in pos.items():
        side[:, x] = (masks >> i) & 1
    caps = np.array(net.cap, dtype=np.int64)
    uu = np.array([u for u, _ in net.edges])
    vv = np.array([v for _, v in net.edges])
    crossing = side[:, uu] != side[:, vv]
    values = crossing @ caps
    best = int(values.argmin())
    ids = tuple(int(e) for e in np.nonzero(crossing[best])[0])
    return CutSet(ids, int(values[best]))


# ----------------------------------------------------------------------------
# cylinder flows

def _cyl_network(graph: CylinderGraph, capacities: np.ndarray,
                 sources: Sequence[int], sinks: Sequence[int]) -> FlowNetwork:
    return FlowNetwork(len(graph.vertices), [tuple(e) for e in graph.edges],
                       [int(c) for c in capacities], sources, sinks)


def _solve(graph: CylinderGraph, capacities: np.ndarray,
           sources: Sequence[int], sinks: Sequence[int]) -> FlowResult:
    sources = sorted(set(sources))
    sinks = sorted(set(sinks) - set(sources))
    if not sources or not sinks:
        # a degenerate boundary condition leaves nothing to separate
        return FlowResult(0, np.zeros(len(graph.edges), dtype=np.int64),
                          CutSet((), 0), np.zeros(len(graph.vertices), dtype=bool))
    return max_flow(_cyl_network(graph, capacities, sources, sinks))


def phi(graph: CylinderGraph, capacities: np.ndarray) -> FlowResult:
    """Top-to-bottom maximal flow phi(cyl, T, B)."""
    return _solve(graph, capacities, graph.top, graph.bottom)


def phi_kappa(graph: CylinderGraph, capacities: np.ndarray,
              bc: BoundaryCondition) -> FlowResult:
    """Flow constrained by the boundary condition kappa."""
    a1, a2 = bc.arcs(graph)
    return _solve(graph, capacities, a1, a2)


def tau(graph: CylinderGraph, capacities: np.ndarray) -> FlowResult:
    """tau = phi^{(1/2, theta)}: flow across the basis chord."""
    return phi_kappa(graph, capacities, BoundaryCondition.tau_condition(graph.spec))

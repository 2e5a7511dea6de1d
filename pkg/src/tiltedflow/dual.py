"""Planar-dual minimal cuts via shortest paths, and the boundary-condition sweep.

The cut problem (sources A, sinks Z on the cylinder boundary) is embedded in
the plane by attaching a super vertex s along the boundary exits of A and t
along those of Z.  Faces are computed combinatorially from the rotation
system (validated by Euler's formula), the outer face is split at its unique
s- and t-visits into the two lateral boundary zones, and a minimal cut is a
shortest dual path between the zones, crossing only real lattice edges.

The same machinery enumerates the finitely many effective boundary
conditions: chord classes swept over the boundary gaps of the left and
right sides.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .geometry import (TOP, BOTTOM, BoundaryCondition, Crossing, CylinderGraph,
                       CylinderSpec, side_gap_heights, quarter_points)
from . import flow as flow_mod


class DualError(ValueError):
    pass


class NoDualPath(DualError):
    pass


def _slot_dir(vertex_xy, ekey) -> int:
    x, y = vertex_xy
    ex, ey, axis = ekey
    if axis == 0:
        return 0 if (ex, ey) == (x, y) else 2
    return 1 if (ex, ey) == (x, y) else 3


class DualSolver:
    """Shortest-dual-path min-cut solver for one (graph, arcs) configuration."""

    def __init__(self, graph: CylinderGraph, sources: Sequence[int],
                 sinks: Sequence[int], source_slots, sink_slots):
        self.graph = graph
        self.sources = sorted(set(sources))
        self.sinks = sorted(set(sinks))
        self.trivial = not self.sources or not self.sinks
        if self.trivial:
            return
        if set(self.sources) & set(self.sinks):
            raise DualError("sources and sinks overlap")
        if not source_slots or not sink_slots:
            raise DualError("every source/sink needs a boundary slot")
        self._build(source_slots, sink_slots)

    # -- embedding -------------------------------------------------------
    def _build(self, source_slots, sink_slots):
        g = self.graph
        nv = len(g.vertices)
        S, T = nv, nv + 1

        # dart table: graph edges first (2 darts each), then s-edges, t-edges
        to: list[int] = []
        frm: list[int] = []
        for u, v in g.edges:
            frm += [int(u), int(v)]
            to += [int(v), int(u)]
        special = []
        for v, _d in source_slots:
            special.append((S, int(v)))
        for v, _d in sink_slots:
            special.append((T, int(v)))
        for a, b in special:
            frm += [a, b]
            to += [b, a]
        ndarts = len(to)

        # rotations: lattice vertices in E,N,W,S slot order
        slot_dart: dict[tuple[int, int], int] = {}
        m = len(g.edges)
        base = 2 * m
        for si, (v, d) in enumerate(source_slots):
            slot_dart[(int(v), int(d))] = base + 2 * si + 1  # dart v -> S
        off = base + 2 * len(source_slots)
        for si, (v, d) in enumerate(sink_slots):
            slot_dart[(int(v), int(d))] = off + 2 * si + 1   # dart v -> T

        edge_dart: dict[tuple[int, int], int] = {}
        for ei, (u, v) in enumerate(g.edges):
            edge_dart[(int(u), int(v))] = 2 * ei
            edge_dart[(int(v), int(u))] = 2 * ei + 1

        rot: list[list[int]] = [[] for _ in range(nv + 2)]
        dirs = ((1, 0), (0, 1), (-1, 0), (0, -1))
        for vi, (x, y) in enumerate(g.vertices):
            x, y = int(x), int(y)
            for di, (dx, dy) in enumerate(dirs):
                j = g.vindex.get((x + dx, y + dy))
                if j is not None:
                    rot[vi].append(edge_dart[(vi, j)])
                elif (vi, di) in slot_dart:
                    rot[vi].append(slot_dart[(vi, di)])
        rot[S] = [base + 2 * si for si in range(len(source_slots))]
        off0 = base + 2 * len(source_slots)
        rot[T] = [off0 + 2 * si for si in range(len(sink_slots))][::-1]

        pos_in_rot = {}
        for v, darts in enumerate(rot):
            for idx, d in enumerate(darts):
                pos_in_rot[d] = (v, idx)

        def next_dart(d: int) -> int:
            rd = d ^ 1
            v, idx = pos_in_rot[rd]
            return rot[v][(idx + 1) % len(rot[v])]

        # faces = orbits
        face_of = [-1] * ndarts
        faces: list[list[int]] = []
        for d0 in range(ndarts):
            if face_of[d0] >= 0:
                continue
            walk = []
            d = d0
            while face_of[d] < 0:
                face_of[d] = len(faces)
                walk.append(d)
                d = next_dart(d)
            if d != d0:
                raise DualError("face traversal did not close")
            faces.append(walk)

        nE = m + len(special)
        euler = (nv + 2) - nE + len(faces)
        if euler != 2:
            raise DualError("embedding is not planar (Euler=%d)" % euler)

        # outer face: touches both s and t
        def touches(walk, vertex):
            return any(frm[d] == vertex for d in walk)

        outer_candidates = [fi for fi, w in enumerate(faces)
                            if touches(w, S) and touches(w, T)]
        if len(outer_candidates) != 1:
            raise DualError("expected exactly one outer face, got %d"
                            % len(outer_candidates))
        outer = outer_candidates[0]
        walk = faces[outer]
        s_pos = [i for i, d in enumerate(walk) if frm[d] == S]
        t_pos = [i for i, d in enumerate(walk) if frm[d] == T]
        if len(s_pos) != 1 or len(t_pos) != 1:
            raise DualError("outer walk must visit s and t exactly once")
        i_s, i_t = s_pos[0], t_pos[0]

        # dual node ids: faces (outer replaced by two zones)
        nfaces = len(faces)
        self.OUT_A = nfaces
        self.OUT_B = nfaces + 1
        dart_node = [0] * ndarts
        for d in range(ndarts):
            dart_node[d] = face_of[d]
        k = len(walk)
        for i, d in enumerate(walk):
            if (i - i_s) % k < (i_t - i_s) % k:
                dart_node[d] = self.OUT_A
            else:
                dart_node[d] = self.OUT_B

        # dual adjacency over graph edges only
        self.n_nodes = nfaces + 2
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
        for ei in range(m):
            fa = dart_node[2 * ei]
            fb = dart_node[2 * ei + 1]
            if fa == fb:
                continue
            adj[fa].append((fb, ei))
            adj[fb].append((fa, ei))
        self.adj = adj
        self.outer_face = outer

    # -- solving --------------------------------------------------------
    def min_cut(self, weights: np.ndarray) -> tuple[int, tuple[int, ...]]:
        """(value, crossed edge ids) of a minimal source/sink cut."""
        if self.trivial:
            return 0, ()
        INF = None
        dist = [INF] * self.n_nodes
        prev: list[Optional[tuple[int, int]]] = [None] * self.n_nodes
        dist[self.OUT_A] = 0
        pq = [(0, self.OUT_A)]
        while pq:
            d, u = heapq.heappop(pq)
            if dist[u] is None or d > dist[u]:
                continue
            if u == self.OUT_B:
                break
            for v, ei in self.adj[u]:
                nd = d + int(weights[ei])
                if dist[v] is None or nd < dist[v]:
                    dist[v] = nd
                    prev[v] = (u, ei)
                    heapq.heappush(pq, (nd, v))
        if dist[self.OUT_B] is None:
            raise NoDualPath("boundary zones are not dual-connected")
        ids = []
        u = self.OUT_B
        while u != self.OUT_A:
            pu, ei = prev[u]
            ids.append(ei)
            u = pu
        return int(dist[self.OUT_B]), tuple(sorted(set(ids)))


# ----------------------------------------------------------------------------
# solver constructors

def _cmp_quad_pairs(a, b) -> int:
    s = (a[0] - b[0]).sign()
    if s:
        return s
    return (a[1] > b[1]) - (a[1] < b[1])


def _sorted_slots_on_line(graph: CylinderGraph, members: Sequence[int],
                          top_side: bool) -> list[tuple[int, int]]:
    """One slot per member vertex, its exit on the top/bottom line, sorted.

    Exit points of distinct vertices are distinct (lattice unit segments
    only share lattice endpoints, which are never exit points), so the
    lateral order is strict.
    """
    from functools import cmp_to_key
    chosen: dict[int, Crossing] = {}
    for v in members:
        best = None
        for di in range(4):
            cr = graph.crossing_by_slot.get((v, di))
            if cr is None:
                continue
            if top_side and not cr.on_top:
                continue
            if not top_side and not cr.on_bottom:
                continue
            if best is None or (cr.s_exit - best.s_exit).sign() < 0:
                best = cr
        if best is None:
            raise DualError("source/sink vertex %d has no boundary exit" % v)
        chosen[v] = best
    recs = sorted(chosen.values(),
                  key=cmp_to_key(lambda a, b: _cmp_quad_pairs(
                      (a.s_exit, a.vertex), (b.s_exit, b.vertex))))
    return [(cr.vertex, cr.dir_index) for cr in recs]


def phi_solver(graph: CylinderGraph) -> DualSolver:
    """Solver for the top-to-bottom cut."""
    return DualSolver(graph, graph.top, graph.bottom,
                      _sorted_slots_on_line(graph, graph.top, True),
                      _sorted_slots_on_line(graph, graph.bottom, False))


def bc_solver(graph: CylinderGraph, bc: BoundaryCondition) -> DualSolver:
    """Solver for the arcs of a boundary condition."""
    a1, a2 = bc.arcs(graph)
    return DualSolver(graph, a1, a2,
                      bc.upper_slots(graph, set(a1), one_per_vertex=True),
                      bc.lower_slots(graph, set(a2), one_per_vertex=True))


def dual_min_cut_phi(graph: CylinderGraph, weights: np.ndarray):
    """Minimal top-bottom cut by dual shortest path; equals flow.phi exactly."""
    return phi_solver(graph).min_cut(weights)


def min_cut_edge_count(graph: CylinderGraph) -> int:
    """Minimal cardinality of a cutset for the tau configuration."""
    bc = BoundaryCondition.tau_condition(graph.spec)
    solver = bc_solver(graph, bc)
    ones = np.ones(len(graph.edges), dtype=np.int64)
    value, _ = solver.min_cut(ones)
    return value


# ----------------------------------------------------------------------------
# kappa enumeration and the duality lemma

@dataclass
class AdmissibleFamily:
    """Representatives of the distinct boundary-condition arc partitions."""

    members: list[tuple[BoundaryCondition, tuple[tuple[int, ...], tuple[int, ...]]]]

    @property
    def size(self) -> int:
        return len(self.members)


def enumerate_kappa(graph: CylinderGraph, refine: bool = True) -> AdmissibleFamily:
    """Sweep chord endpoints over boundary gaps; one kappa per arc partition.

    Gap midpoints give the coarse classes; quarter-point refinement catches
    partitions that flip inside a gap cell through a near-chord vertex.
    """
    spec = graph.spec
    left_taus = side_gap_heights(graph, "left")
    right_taus = side_gap_heights(graph, "right")
    seen: dict[tuple, tuple] = {}
    members = []

    def try_pair(tl: Fraction, tr: Fraction):
        bc = BoundaryCondition.from_side_heights(spec, tl, tr)
        a1, a2 = bc.arcs(graph)
        key = tuple(a1)
        if key not in seen:
            seen[key] = (tuple(a1), tuple(a2))
            members.append((bc, (tuple(a1), tuple(a2))))

    for tl in left_taus:
        for tr in right_taus:
            try_pair(tl, tr)
    if refine:
        # sample extra chords inside each gap cell (chord-side flips of
        # vertices near the chord are not gap-aligned)
        lt = _with_neighbors(left_taus, spec.h)
        rt = _with_neighbors(right_taus, spec.h)
        for tl in lt:
            for tr in rt:
                try_pair(tl, tr)
    return AdmissibleFamily(members)


def _with_neighbors(taus: list[Fraction], h: Fraction) -> list[Fraction]:
    pts = sorted(set(taus) | {-Fraction(h), Fraction(h)})
    out = set(taus)
    for a, b in zip(pts, pts[1:]):
        out.update(quarter_points(a, b))
    return sorted(out)


def verify_duality_lemma(graph: CylinderGraph, weights: np.ndarray,
                         family: Optional[AdmissibleFamily] = None) -> dict:
    """phi = min over admissible kappa of phi^kappa, checked exactly."""
    if family is None:
        family = enumerate_kappa(graph)
    res_phi = flow_mod.phi(graph, weights)
    best = None
    arg = None
    per = []
    for bc, (a1, a2) in family.members:
        r = flow_mod._solve(graph, weights, list(a1), list(a2))
        per.append(r.value)
        if best is None or r.value < best:
            best = r.value
            arg = bc
    return {
        "phi": res_phi.value,
        "min_phi_kappa": best,
        "equal": best == res_phi.value,
        "argmin_k": None if arg is None or arg.k is None else float(arg.k),
        "argmin_theta": None if arg is None else arg.theta_tilde(),
        "family_size": family.size,
        "all_at_least_phi": all(v >= res_phi.value for v in per),
    }

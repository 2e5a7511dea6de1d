"""Cutset gluing: deterministic per-sample inequalities between flows.

Three constructions, each verified on a single shared environment:

  phi gluing     phi_N <= phi_N^kappa <= sum_i tau(G_i) + V(F1 u F2)
  triangle       tau_c(N) <= sum_i tau_b^i + sum_j tau_a^j + V(E3)
  slab           tau(cyl''(N)) <= sum_i phi^kappa(B_i) + V(E1 u E2)

Each connector set is the set of lattice edges with both endpoints strictly
inside the prescribed r-neighbourhoods (r = zeta0 >= 4), and every report
carries both the numeric inequality and the structural statement that the
glued edge set really contains a cutset (checked by deletion).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .exact import Quad
from .geometry import (BoundaryCondition, CylinderGraph, CylinderSpec,
                       Direction, GeometryError, build_cylinder)
from . import flow as F


class GluingError(ValueError):
    pass


class DoesNotFit(GluingError):
    pass


class BadTriangle(GluingError):
    pass


def _rationalize(x: float, den: int = 64) -> Fraction:
    return Fraction(round(x * den), den)


def _ceil_over_sqrt(a: int, R: int, den: int = 64) -> Fraction:
    """Smallest multiple m of 1/den with m * sqrt(R) >= a."""
    x = Quad(0, Fraction(a * den, R), R)  # a*den / sqrt(R)
    m = Fraction(-((-x).floor()), den)
    while m * m * R < a * a:
        m += Fraction(1, den)
    return m


@dataclass(frozen=True)
class GluingConfig:
    """Scales and auxiliary schedules for the gluing constructions."""

    n: int
    N: int
    zeta: Fraction          # zeta(n), end margin along the chord
    hprime: Fraction        # h'(n), small-cylinder height
    zetaprime: Fraction     # zeta'(n), end margin for the slab construction
    zeta0: int = 4          # connector neighbourhood radius

    def __post_init__(self):
        if self.zeta0 < 4:
            raise GluingError("zeta0 must be at least 4")
        if not self.hprime < self.zeta:
            raise GluingError("need h'(n) < zeta(n)")

    @staticmethod
    def default(n: int, N: int, h_inner: Optional[Fraction] = None,
                zeta0: int = 4) -> "GluingConfig":
        """zeta = n^(3/4), h' = sqrt(n), zeta' = h(n) * n^(1/4)."""
        hi = Fraction(h_inner) if h_inner is not None else Fraction(n, 2)
        return GluingConfig(
            n=n, N=N,
            zeta=_rationalize(n ** 0.75),
            hprime=_rationalize(max(n ** 0.5, 2.0)),
            zetaprime=_rationalize(float(hi) * n ** 0.25 + 4.0),
            zeta0=zeta0,
        )


# ----------------------------------------------------------------------------
# lattice regions (exact, Quad endpoints)

def _ball_points(center: tuple[Quad, Quad], r: int) -> set[tuple[int, int]]:
    cx, cy = center
    fx, fy = float(cx), float(cy)
    out = set()
    r2 = r * r
    for x in range(math.floor(fx - r) - 1, math.ceil(fx + r) + 2):
        for y in range(math.floor(fy - r) - 1, math.ceil(fy + r) + 2):
            dx = Quad.of(x, cx.R) - cx
            dy = Quad.of(y, cy.R) - cy
            if (dx * dx + dy * dy - r2).sign() < 0:
                out.add((x, y))
    return out


def _segment_points(P: tuple[Quad, Quad], Q: tuple[Quad, Quad],
                    r: int) -> set[tuple[int, int]]:
    px, py = P
    qx, qy = Q
    wx, wy = qx - px, qy - py
    ww = wx * wx + wy * wy
    fx0, fy0, fx1, fy1 = float(px), float(py), float(qx), float(qy)
    out = set()
    r2 = r * r
    for x in range(math.floor(min(fx0, fx1) - r) - 1, math.ceil(max(fx0, fx1) + r) + 2):
        for y in range(math.floor(min(fy0, fy1) - r) - 1, math.ceil(max(fy0, fy1) + r) + 2):
            zx = Quad.of(x, px.R) - px
            zy = Quad.of(y, py.R) - py
            zw = zx * wx + zy * wy
            if zw.sign() <= 0:
                d2 = zx * zx + zy * zy
            elif (zw - ww).sign() >= 0:
                ux, uy = zx - wx, zy - wy
                d2 = ux * ux + uy * uy
            else:
                d2 = (zx * zx + zy * zy) - (zw * zw) / ww
            if (d2 - r2).sign() < 0:
                out.add((x, y))
    return out


def _edges_of_point_set(points: set[tuple[int, int]],
                        inside=None) -> set[tuple[int, int, int]]:
    """Lattice edges with both endpoints in the set (optionally also inside)."""
    if inside is not None:
        points = {z for z in points if inside(z)}
    keys = set()
    for (x, y) in points:
        if (x + 1, y) in points:
            keys.add((x, y, 0))
        if (x, y + 1) in points:
            keys.add((x, y, 1))
    return keys


def _translated_keys(graph: CylinderGraph, v: tuple[int, int]) -> np.ndarray:
    keys = graph.edge_keys.copy()
    keys[:, 0] += v[0]
    keys[:, 1] += v[1]
    return keys


def _round_point(p: tuple[Quad, Quad]) -> tuple[int, int]:
    return (p[0].round_half_down(), p[1].round_half_down())


def _check_contained(big: CylinderSpec, graph: CylinderGraph,
                     v: tuple[int, int], what: str):
    for (x, y) in graph.vertices:
        if not big.contains((int(x) + v[0], int(y) + v[1])):
            raise DoesNotFit("%s vertex (%d,%d)+%s leaves the big cylinder"
                             % (what, int(x), int(y), (v,)))


def _disconnects(big_graph: CylinderGraph, removed_keys: set,
                 side_a: Sequence[int], side_b: Sequence[int]) -> bool:
    removed = {big_graph.eindex[k] for k in removed_keys if k in big_graph.eindex}
    from collections import deque
    seen = [False] * len(big_graph.vertices)
    dq = deque()
    for s in side_a:
        seen[s] = True
        dq.append(s)
    bset = set(side_b)
    while dq:
        u = dq.popleft()
        for (w, ei) in big_graph.adj[u]:
            if ei in removed or seen[w]:
                continue
            if w in bset:
                return False
            seen[w] = True
            dq.append(w)
    return True


def _sum_caps(field, keys: Iterable[tuple[int, int, int]]) -> int:
    ks = sorted(set(keys))
    if not ks:
        return 0
    arr = np.array(ks, dtype=np.int64)
    return int(field.capacities(arr).sum())


# ----------------------------------------------------------------------------
# phi gluing (equation (6): the "(19)" inequality)

class PhiGluingLayout:
    """Small tilted cylinders G_i along the kappa_N chord of a big cylinder."""

    def __init__(self, config: GluingConfig, big_spec: CylinderSpec,
                 tilt: tuple[int, int]):
        self.config = config
        self.big_spec = big_spec
        self.big_graph = build_cylinder(big_spec)
        self.bc = BoundaryCondition.center_chord(big_spec, tilt)
        self.tilt = self.bc.tilt
        tp, tq = self.tilt
        Rt = tp * tp + tq * tq
        n, zeta, zeta0 = config.n, config.zeta, config.zeta0

        # chord endpoints and length L = S * sqrt(Rt) / (p tp + q tq)
        p, q = big_spec.direction.p, big_spec.direction.q
        dotv = p * tp + q * tq
        mu = Fraction(big_spec.S, dotv)          # |d-c| in (tq,-tp) steps
        self.x_N = self.bc.c
        self.y_N = self.bc.d
        L = Quad.root(Rt, mu)                    # Euclidean chord length
        M = ((L - 2 * zeta) * Quad.root(Rt, Fraction(1, n * Rt))).floor()
        if M < 2:
            raise DoesNotFit("chord too short: M=%d < 2" % M)
        self.M = M

        # canonical small cylinder: basis length m*sqrt(Rt) >= n
        m_small = _ceil_over_sqrt(n, Rt)
        self.small_spec = CylinderSpec.canonical((tp, tq), n=1, h=config.hprime,
                                                 length=m_small)
        self.small_graph = build_cylinder(self.small_spec)
        self.small_bc = BoundaryCondition.tau_condition(self.small_spec)
        a1s, a2s = self.small_bc.arcs(self.small_graph)
        self.small_arcs = (a1s, a2s)

        # translate positions t_i = x_N + (zeta + (i-1) n) vperp(theta~)
        self.translations = []
        self.t_points = []
        for i in range(1, M + 1):
            coef = (zeta + (i - 1) * n) * Fraction(1, Rt)
            t_i = (self.x_N[0] + Quad.root(Rt, coef * tq),
                   self.x_N[1] - Quad.root(Rt, coef * tp))
            self.t_points.append(t_i)
            v = _round_point(t_i)
            _check_contained(big_spec, self.small_graph, v, "G_%d" % i)
            self.translations.append(v)

        inside = lambda z: big_spec.contains(z)
        f1_pts: set = set()
        for t_i in self.t_points:
            f1_pts |= _ball_points(t_i, zeta0)
        self.F1 = _edges_of_point_set(f1_pts, inside)
        # end strips: [x_N, x_N + zeta vperp] and [z_M, y_N]
        coef = zeta * Fraction(1, Rt)
        p1 = (self.x_N[0] + Quad.root(Rt, coef * tq),
              self.x_N[1] - Quad.root(Rt, coef * tp))
        coefM = (zeta + M * n) * Fraction(1, Rt)
        z_M = (self.x_N[0] + Quad.root(Rt, coefM * tq),
               self.x_N[1] - Quad.root(Rt, coefM * tp))
        strip = _segment_points(self.x_N, p1, zeta0) | _segment_points(z_M, self.y_N, zeta0)
        self.F2 = _edges_of_point_set(strip, inside)
        self.big_arcs = self.bc.arcs(self.big_graph)

    def verify(self, field) -> dict:
        caps_big = field.capacities(self.big_graph.edge_keys)
        phi_N = F.phi(self.big_graph, caps_big).value
        a1, a2 = self.big_arcs
        phi_kN = F._solve(self.big_graph, caps_big, a1, a2).value
        tau_sum = 0
        removed = set(self.F1) | set(self.F2)
        for v in self.translations:
            keys = _translated_keys(self.small_graph, v)
            caps = field.capacities(keys)
            r = F._solve(self.small_graph, caps, *self.small_arcs)
            tau_sum += r.value
            for ei in r.cut.edge_ids:
                removed.add(tuple(int(w) for w in keys[ei]))
        v_conn = _sum_caps(field, self.F1 | self.F2)
        rhs = tau_sum + v_conn
        structural = _disconnects(self.big_graph, removed, a1, a2)
        return {
            "kind": "phi",
            "phi_N": phi_N,
            "phi_kappa_N": phi_kN,
            "tau_sum": tau_sum,
            "v_connector": v_conn,
            "rhs": rhs,
            "holds": phi_N <= phi_kN <= rhs,
            "slack": rhs - phi_kN,
            "structural": structural,
            "M": self.M,
            "card_F1": len(self.F1),
            "card_F2": len(self.F2),
        }


def build_small_cylinders(config: GluingConfig, big_spec: CylinderSpec,
                          tilt: tuple[int, int]) -> PhiGluingLayout:
    """Construct and containment-check the G_i translates along the chord."""
    return PhiGluingLayout(config, big_spec, tilt)


def verify_phi_gluing(config: GluingConfig, big_spec: CylinderSpec,
                      tilt: tuple[int, int], field) -> dict:
    return PhiGluingLayout(config, big_spec, tilt).verify(field)


# ----------------------------------------------------------------------------
# triangle gluing (equation (4))

def _normal_away(edge: tuple[int, int], other: tuple[int, int]) -> tuple[int, int]:
    """Primitive normal of `edge` pointing away from the point offset `other`."""
    nx, ny = -edge[1], edge[0]
    if nx * other[0] + ny * other[1] > 0:
        nx, ny = -nx, -ny
    g = math.gcd(abs(nx), abs(ny))
    return (nx // g, ny // g)


def _leg_spec(direction_vec: tuple[int, int], n: int, h: Fraction) -> CylinderSpec:
    """Cylinder with basis n*direction_vec (either basis orientation)."""
    d = Direction.make(-direction_vec[1], direction_vec[0])
    bvec = (n * direction_vec[0], n * direction_vec[1])
    try:
        return CylinderSpec.make(d, (0, 0), bvec, n=1, h=h)
    except GeometryError:
        return CylinderSpec.make(d, bvec, (0, 0), n=1, h=h)


class TriangleLayout:
    """Lemma 3.1 construction: legs of small cylinders inside cyl(N[ab], N)."""

    def __init__(self, config: GluingConfig, a: tuple[int, int],
                 b: tuple[int, int], c: tuple[int, int]):
        self.config = config
        ab = (b[0] - a[0], b[1] - a[1])
        ac = (c[0] - a[0], c[1] - a[1])
        bc = (c[0] - b[0], c[1] - b[1])
        if ab[0] * ac[1] - ab[1] * ac[0] == 0:
            raise BadTriangle("degenerate triangle")
        if ab[0] * ac[0] + ab[1] * ac[1] <= 0:
            raise BadTriangle("angle at a must be strictly less than pi/2")
        if (-ab[0]) * bc[0] + (-ab[1]) * bc[1] <= 0:
            raise BadTriangle("angle at b must be strictly less than pi/2")
        n, N, zeta, zeta0 = config.n, config.N, config.zeta, config.zeta0
        Na = (N * a[0], N * a[1])
        Nb = (N * b[0], N * b[1])
        Nc = (N * c[0], N * c[1])
        self.big_spec = _big_basis_spec(Na, Nb, away_from=Nc, h=Fraction(N))
        self.big_graph = build_cylinder(self.big_spec)
        self.big_bc = BoundaryCondition.tau_condition(self.big_spec)
        self.big_arcs = self.big_bc.arcs(self.big_graph)

        # leg cylinders: along [a,c] walking a -> c, and along [c,b] walking c -> b
        cb_walk = (b[0] - c[0], b[1] - c[1])
        self.legs = []
        for start, evec, name in ((Na, ac, "b"), (Nc, cb_walk, "a")):
            E = evec[0] * evec[0] + evec[1] * evec[1]
            M = (Quad(Fraction(N, n), -2 * zeta / (n * E), E)).floor()
            if M < 2:
                raise DoesNotFit("leg %s: M=%d < 2" % (name, M))
            spec = _leg_spec(evec, n, config.hprime)
            graph = build_cylinder(spec)
            bcs = BoundaryCondition.tau_condition(spec)
            arcs = bcs.arcs(graph)
            pts = []
            trans = []
            for i in range(1, M + 1):
                coef = Quad(Fraction((i - 1) * n), zeta / E, E)
                P = (coef * evec[0] + start[0], coef * evec[1] + start[1])
                pts.append(P)
                v = _round_point(P)
                _check_contained(self.big_spec, graph, v, "leg %s #%d" % (name, i))
                trans.append(v)
            end_coef = Quad(Fraction(M * n), zeta / E, E)
            leg_end = (end_coef * evec[0] + start[0], end_coef * evec[1] + start[1])
            self.legs.append({
                "name": name, "spec": spec, "graph": graph, "arcs": arcs,
                "points": pts, "translations": trans, "M": M,
                "start": (Quad.of(start[0], E), Quad.of(start[1], E)),
                "first": pts[0], "last_end": leg_end,
                "corner": Nc if name == "b" else Nb,
            })

        # E3: neighbourhoods of the four uncovered chord pieces + junctions
        e3_pts: set = set()
        for leg in self.legs:
            E = leg["points"][0][0].R
            corner = (Quad.of(leg["corner"][0], E), Quad.of(leg["corner"][1], E))
            e3_pts |= _segment_points(leg["start"], leg["first"], zeta0)
            e3_pts |= _segment_points(leg["last_end"], corner, zeta0)
            for P in leg["points"]:
                e3_pts |= _ball_points(P, zeta0)
            e3_pts |= _ball_points(leg["last_end"], zeta0)
        self.E3 = _edges_of_point_set(e3_pts)

    def verify(self, field) -> dict:
        caps_big = field.capacities(self.big_graph.edge_keys)
        a1, a2 = self.big_arcs
        tau_c = F._solve(self.big_graph, caps_big, a1, a2).value
        total = 0
        removed = set(self.E3)
        for leg in self.legs:
            for v in leg["translations"]:
                keys = _translated_keys(leg["graph"], v)
                caps = field.capacities(keys)
                r = F._solve(leg["graph"], caps, *leg["arcs"])
                total += r.value
                for ei in r.cut.edge_ids:
                    removed.add(tuple(int(w) for w in keys[ei]))
        v_conn = _sum_caps(field, self.E3)
        rhs = total + v_conn
        return {
            "kind": "triangle",
            "tau_c": tau_c,
            "tau_sum": total,
            "v_connector": v_conn,
            "rhs": rhs,
            "holds": tau_c <= rhs,
            "slack": rhs - tau_c,
            "structural": _disconnects(self.big_graph, removed, a1, a2),
            "M_b": self.legs[0]["M"],
            "M_a": self.legs[1]["M"],
            "card_E3": len(self.E3),
        }


def _big_basis_spec(P, Q, away_from, h: Fraction) -> CylinderSpec:
    edge = (Q[0] - P[0], Q[1] - P[1])
    rel = (away_from[0] - P[0], away_from[1] - P[1])
    nvec = _normal_away(edge, rel)
    d = Direction.make(*nvec)
    try:
        return CylinderSpec.make(d, P, Q, n=1, h=h)
    except GeometryError:
        return CylinderSpec.make(d, Q, P, n=1, h=h)


def verify_tau_gluing_triangle(config: GluingConfig, a, b, c, field) -> dict:
    return TriangleLayout(config, tuple(a), tuple(b), tuple(c)).verify(field)


# ----------------------------------------------------------------------------
# slab gluing (equation (9): the "(24)" inequality)

class SlabLayout:
    """Translates B_i of cyl(nA, h(n)) along a long slab cyl''(N)."""

    def __init__(self, config: GluingConfig, inner_spec: CylinderSpec,
                 tilt: tuple[int, int], h_slab: Optional[Fraction] = None):
        self.config = config
        self.inner_spec = inner_spec
        N, zeta0 = config.N, config.zeta0
        zp = config.zetaprime
        if not inner_spec.h < zp:
            raise GluingError("need h(n) < zeta'(n)")
        bc = BoundaryCondition.center_chord(inner_spec, tilt)
        self.bc = bc
        tp, tq = bc.tilt
        Rt = tp * tp + tq * tq
        p, q = inner_spec.direction.p, inner_spec.direction.q
        mu = Fraction(inner_spec.S, p * tp + q * tq)  # chord in (tq,-tp) steps
        L = Quad.root(Rt, mu)
        if h_slab is None:
            h_slab = inner_spec.h + _rationalize(inner_spec.length / 2 + 4)
        m_slab = _ceil_over_sqrt(N, Rt)
        self.slab_spec = CylinderSpec.canonical((tp, tq), n=1, h=h_slab,
                                                length=m_slab)
        self.slab_graph = build_cylinder(self.slab_spec)
        self.slab_bc = BoundaryCondition.tau_condition(self.slab_spec)
        self.slab_arcs = self.slab_bc.arcs(self.slab_graph)

        Ncount = ((Quad.of(Fraction(N), Rt) - 2 * zp) / L).floor()
        if Ncount < 2:
            raise DoesNotFit("slab too short: N_count=%d < 2" % Ncount)
        self.count = Ncount
        self.inner_graph = build_cylinder(inner_spec)
        self.inner_arcs = bc.arcs(self.inner_graph)

        self.z_points = []
        self.translations = []
        for i in range(1, Ncount + 1):
            # z_i = (zeta' + (i-1) L) vperp; L = mu*sqrt(Rt), vperp = (tq,-tp)/sqrt(Rt)
            lin = (i - 1) * mu  # rational part in (tq,-tp) steps
            rad = zp * Fraction(1, Rt)
            zx = Quad(lin * tq, rad * tq, Rt)
            zy = Quad(-lin * tp, -rad * tp, Rt)
            self.z_points.append((zx, zy))
            shift = (zx - bc.c[0], zy - bc.c[1])
            v = _round_point(shift)
            _check_contained(self.slab_spec, self.inner_graph, v, "B_%d" % i)
            self.translations.append(v)

        inside = lambda z: self.slab_spec.contains(z)
        e1_pts: set = set()
        for z_pt in self.z_points:
            e1_pts |= _ball_points(z_pt, zeta0)
        self.E1 = _edges_of_point_set(e1_pts, inside)
        rad = zp * Fraction(1, Rt)
        p_end = (Quad(0, rad * tq, Rt), Quad(0, -rad * tp, Rt))
        origin = (Quad.of(0, Rt), Quad.of(0, Rt))
        slab_end = (Quad.of(m_slab * tq, Rt), Quad.of(-m_slab * tp, Rt))
        lastz = self.z_points[-1]
        strip = (_segment_points(origin, p_end, zeta0)
                 | _segment_points(lastz, slab_end, zeta0))
        self.E2 = _edges_of_point_set(strip, inside)

    def verify(self, field) -> dict:
        caps = field.capacities(self.slab_graph.edge_keys)
        a1, a2 = self.slab_arcs
        tau_slab = F._solve(self.slab_graph, caps, a1, a2).value
        total = 0
        removed = set(self.E1) | set(self.E2)
        for v in self.translations:
            keys = _translated_keys(self.inner_graph, v)
            caps_i = field.capacities(keys)
            r = F._solve(self.inner_graph, caps_i, *self.inner_arcs)
            total += r.value
            for ei in r.cut.edge_ids:
                removed.add(tuple(int(w) for w in keys[ei]))
        v_conn = _sum_caps(field, self.E1 | self.E2)
        rhs = total + v_conn
        return {
            "kind": "slab",
            "tau_slab": tau_slab,
            "phi_kappa_sum": total,
            "v_connector": v_conn,
            "rhs": rhs,
            "holds": tau_slab <= rhs,
            "slack": rhs - tau_slab,
            "structural": _disconnects(self.slab_graph, removed, a1, a2),
            "count": self.count,
            "card_E1": len(self.E1),
            "card_E2": len(self.E2),
        }


def verify_tau_phi_slab(config: GluingConfig, inner_spec: CylinderSpec,
                        tilt: tuple[int, int], field,
                        h_slab: Optional[Fraction] = None) -> dict:
    return SlabLayout(config, inner_spec, tilt, h_slab).verify(field)

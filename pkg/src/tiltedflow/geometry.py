"""Tilted lattice cylinders: exact construction, classification, boundary arcs.

A cylinder is the closed set {x + t*v : x in [a',b'], t in [-h,h]} where
[a',b'] is the scaled basis segment (a' = n*a, b' = n*b) and v is the unit
normal of a primitive integer direction (p,q).  Every predicate is decided
in the quadratic field Q[sqrt(p^2+q^2)]: lattice membership, side
classification, boundary-condition admissibility and chord sides are all
exact, never float.

Internal coordinates for a point z, relative to the scaled basis start a':
    s(z) = (z - a') . (q,-p)      lateral position, 0..S across the basis
    t(z) = (z - a') . (p,q)       height, -h*sqrt(R)..+h*sqrt(R)
with R = p^2 + q^2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from math import gcd
from typing import Iterable, Optional

import numpy as np

from .exact import Quad, rational_between

TOP, BOTTOM, LEFT, RIGHT = 1, 2, 4, 8

_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))  # E, N, W, S (ccw)


class GeometryError(ValueError):
    pass


class EmptyCylinder(GeometryError):
    pass


class NotAdmissible(GeometryError):
    pass


class DegenerateChord(GeometryError):
    pass


@dataclass(frozen=True)
class Direction:
    """Primitive integer direction (p,q) with angle theta in [0,pi)."""

    p: int
    q: int

    def __post_init__(self):
        p, q = self.p, self.q
        if p == 0 and q == 0:
            raise GeometryError("zero direction")
        if gcd(abs(p), abs(q)) != 1:
            raise GeometryError("direction must be primitive: (%d,%d)" % (p, q))
        if q < 0 or (q == 0 and p < 0):
            raise GeometryError("direction must have theta in [0,pi): (%d,%d)" % (p, q))

    @staticmethod
    def make(p: int, q: int) -> "Direction":
        g = gcd(abs(p), abs(q))
        if g == 0:
            raise GeometryError("zero direction")
        p, q = p // g, q // g
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        return Direction(p, q)

    @property
    def R(self) -> int:
        return self.p * self.p + self.q * self.q

    @property
    def norm(self) -> float:
        return math.sqrt(self.R)

    @property
    def theta(self) -> float:
        t = math.atan2(self.q, self.p)
        return t if t >= 0 else t + math.pi

    @property
    def v(self) -> tuple[float, float]:
        r = self.norm
        return (self.p / r, self.q / r)

    @property
    def vperp(self) -> tuple[float, float]:
        r = self.norm
        return (self.q / r, -self.p / r)


def tan_between(base: Direction, tp: int, tq: int) -> Fraction:
    """tan(theta~ - theta) for tilt vector (tp,tq) with positive dot."""
    p, q = base.p, base.q
    dotv = p * tp + q * tq
    if dotv <= 0:
        raise NotAdmissible("tilt not within +-pi/2 of the base direction")
    return Fraction(p * tq - q * tp, dotv)


@dataclass(frozen=True)
class CylinderSpec:
    """Scaled tilted cylinder cyl(n*A, h) with rational basis endpoints."""

    direction: Direction
    a: tuple[Fraction, Fraction]
    b: tuple[Fraction, Fraction]
    n: int
    h: Fraction

    MAX_DENOMINATOR = 10**6

    def __post_init__(self):
        p, q = self.direction.p, self.direction.q
        ax, ay = self.a
        bx, by = self.b
        if self.n <= 0:
            raise GeometryError("scale n must be positive")
        if self.h <= 0:
            raise GeometryError("height h must be positive")
        if (bx - ax) * p + (by - ay) * q != 0:
            raise GeometryError("basis segment must be orthogonal to the direction")
        if (bx - ax) * q - (by - ay) * p <= 0:
            raise GeometryError("need (b-a).vperp > 0")
        for f in (ax, ay, bx, by, self.h):
            if f.denominator > self.MAX_DENOMINATOR:
                raise GeometryError("denominator exceeds 10^6")

    @staticmethod
    def make(direction, a, b, n=1, h=1) -> "CylinderSpec":
        if not isinstance(direction, Direction):
            direction = Direction.make(*direction)
        a = (Fraction(a[0]), Fraction(a[1]))
        b = (Fraction(b[0]), Fraction(b[1]))
        return CylinderSpec(direction, a, b, int(n), Fraction(h))

    @staticmethod
    def canonical(direction, n=1, h=1, length: Fraction = 1) -> "CylinderSpec":
        """Basis from the origin along vperp, Euclidean length length*sqrt(R)."""
        if not isinstance(direction, Direction):
            direction = Direction.make(*direction)
        m = Fraction(length)
        b = (m * direction.q, -m * direction.p)
        return CylinderSpec.make(direction, (0, 0), b, n=n, h=h)

    # -- scaled data ---------------------------------------------------
    @property
    def na(self) -> tuple[Fraction, Fraction]:
        return (self.n * self.a[0], self.n * self.a[1])

    @property
    def nb(self) -> tuple[Fraction, Fraction]:
        return (self.n * self.b[0], self.n * self.b[1])

    @property
    def R(self) -> int:
        return self.direction.R

    @property
    def S(self) -> Fraction:
        """Lateral extent (nb-na).(q,-p); positive."""
        p, q = self.direction.p, self.direction.q
        return (self.nb[0] - self.na[0]) * q - (self.nb[1] - self.na[1]) * p

    @property
    def length(self) -> float:
        """Euclidean length of the scaled basis (normalization only)."""
        dx = float(self.nb[0] - self.na[0])
        dy = float(self.nb[1] - self.na[1])
        return math.hypot(dx, dy)

    @property
    def base_length(self) -> float:
        """Euclidean length of the unscaled basis l(A)."""
        return self.length / self.n

    @property
    def hr(self) -> Quad:
        """Height in t-units: h*sqrt(R)."""
        return Quad.root(self.R, self.h)

    # -- exact coordinates ----------------------------------------------
    def s_of(self, z) -> Fraction:
        p, q = self.direction.p, self.direction.q
        return (Fraction(z[0]) - self.na[0]) * q - (Fraction(z[1]) - self.na[1]) * p

    def t_of(self, z) -> Fraction:
        p, q = self.direction.p, self.direction.q
        return (Fraction(z[0]) - self.na[0]) * p + (Fraction(z[1]) - self.na[1]) * q

    def contains(self, z) -> bool:
        s = self.s_of(z)
        if s < 0 or s > self.S:
            return False
        t = self.t_of(z)
        return t * t <= self.h * self.h * self.R

    def translate(self, v: tuple[int, int]) -> "CylinderSpec":
        """Integer translate: same shape, shifted basis."""
        vx, vy = Fraction(v[0]), Fraction(v[1])
        # translate the scaled segment; keep n by shifting a,b by v/n
        return CylinderSpec(
            self.direction,
            (self.a[0] + vx / self.n, self.a[1] + vy / self.n),
            (self.b[0] + vx / self.n, self.b[1] + vy / self.n),
            self.n,
            self.h,
        )

    def bbox(self) -> tuple[int, int, int, int]:
        """Integer bounding box (xmin, xmax, ymin, ymax) with margin."""
        p, q = self.direction.p, self.direction.q
        r = self.direction.norm
        hx, hy = float(self.h) * p / r, float(self.h) * q / r
        xs, ys = [], []
        for corner in (self.na, self.nb):
            for sgn in (1, -1):
                xs.append(float(corner[0]) + sgn * hx)
                ys.append(float(corner[1]) + sgn * hy)
        return (
            math.floor(min(xs)) - 1,
            math.ceil(max(xs)) + 1,
            math.floor(min(ys)) - 1,
            math.ceil(max(ys)) + 1,
        )

    def to_json(self) -> dict:
        return {
            "direction": [self.direction.p, self.direction.q],
            "a": [[self.a[0].numerator, self.a[0].denominator],
                  [self.a[1].numerator, self.a[1].denominator]],
            "b": [[self.b[0].numerator, self.b[0].denominator],
                  [self.b[1].numerator, self.b[1].denominator]],
            "n": self.n,
            "h": [self.h.numerator, self.h.denominator],
        }

    @staticmethod
    def from_json(obj: dict) -> "CylinderSpec":
        return CylinderSpec.make(
            tuple(obj["direction"]),
            (Fraction(*obj["a"][0]), Fraction(*obj["a"][1])),
            (Fraction(*obj["b"][0]), Fraction(*obj["b"][1])),
            n=obj["n"],
            h=Fraction(*obj["h"]),
        )


@dataclass
class Crossing:
    """One boundary exit: vertex -> outside neighbour, with the exact exit point."""

    vertex: int            # vertex id
    dir_index: int         # 0..3 into _DIRS
    on_top: bool
    on_bottom: bool
    on_left: bool
    on_right: bool
    s_exit: Quad           # lateral coordinate of the exit point
    t_exit: Quad           # height coordinate of the exit point


class CylinderGraph:
    """Lattice graph induced on cyl(nA,h), with classification and crossings."""

    def __init__(self, spec: CylinderSpec):
        self.spec = spec
        self._build_vertices()
        if len(self.vertices) == 0:
            raise EmptyCylinder("no lattice vertex inside the cylinder")
        self._build_edges()
        self._build_boundary()

    # -- vertices -------------------------------------------------------
    def _build_vertices(self):
        spec = self.spec
        xmin, xmax, ymin, ymax = spec.bbox()
        xs = np.arange(xmin, xmax + 1, dtype=np.int64)
        ys = np.arange(ymin, ymax + 1, dtype=np.int64)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        mask = self._membership_mask(X, Y)
        pts = np.stack([X[mask], Y[mask]], axis=1)
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        self.vertices = pts[order]
        self.vindex = {(int(x), int(y)): i for i, (x, y) in enumerate(self.vertices)}

    def _membership_mask(self, X, Y):
        spec = self.spec
        p, q, R = spec.direction.p, spec.direction.q, spec.R
        den = 1
        for f in (spec.na[0], spec.na[1], spec.nb[0], spec.nb[1], spec.h):
            den = den * f.denominator // gcd(den, f.denominator)
        nax = int(spec.na[0] * den)
        nay = int(spec.na[1] * den)
        S_num = int(spec.S * den)
        h_num = int(spec.h * den)
        # int64 overflow guard; fall back to exact python ints if too big
        big = max(abs(int(X.max())), abs(int(X.min())), abs(int(Y.max())),
                  abs(int(Y.min()))) * den + abs(nax) + abs(nay)
        if big * (abs(p) + abs(q)) < 2**31 and h_num * h_num * R < 2**62:
            DX = X * den - nax
            DY = Y * den - nay
            s = DX * q - DY * p
            t = DX * p + DY * q
            return (s >= 0) & (s <= S_num) & (t * t <= h_num * h_num * R)
        out = np.zeros(X.shape, dtype=bool)
        it = np.nditer([X, Y], flags=["multi_index"])
        for x, y in it:
            out[it.multi_index] = spec.contains((int(x), int(y)))
        return out

    # -- edges ------------------------------------------------------------
    def _build_edges(self):
        edges = []
        keys = []
        for i, (x, y) in enumerate(self.vertices):
            x, y = int(x), int(y)
            for axis, (dx, dy) in ((0, (1, 0)), (1, (0, 1))):
                j = self.vindex.get((x + dx, y + dy))
                if j is not None:
                    edges.append((i, j))
                    keys.append((x, y, axis))
        self.edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
        self.edge_keys = np.array(keys, dtype=np.int64).reshape(-1, 3)
        self.eindex = {tuple(k): i for i, k in enumerate(keys)}
        self.adj: list[list[tuple[int, int]]] = [[] for _ in range(len(self.vertices))]
        for ei, (u, v) in enumerate(self.edges):
            self.adj[int(u)].append((int(v), ei))
            self.adj[int(v)].append((int(u), ei))

    # -- boundary classification -------------------------------------------
    def _build_boundary(self):
        spec = self.spec
        R = spec.R
        p, q = spec.direction.p, spec.direction.q
        hr = spec.hr
        S = spec.S
        nvert = len(self.vertices)
        self.labels = np.zeros(nvert, dtype=np.int64)
        self.crossings: list[Crossing] = []
        self.witnesses: dict[int, list[tuple[int, tuple[int, int, int]]]] = {
            TOP: [], BOTTOM: [], LEFT: [], RIGHT: []}
        for i, (x, y) in enumerate(self.vertices):
            x, y = int(x), int(y)
            s0 = spec.s_of((x, y))
            t0 = spec.t_of((x, y))
            for di, (dx, dy) in enumerate(_DIRS):
                yx, yy = x + dx, y + dy
                if (yx, yy) in self.vindex:
                    continue
                cs = dx * q - dy * p
                ct = dx * p + dy * q
                ekey = self._edge_key(x, y, dx, dy)
                self._classify_witness(i, ekey, s0, t0, cs, ct, S, hr)
                self.crossings.append(
                    self._exit_crossing(i, di, s0, t0, cs, ct, S, hr, R))
        self.boundary_ids = sorted({c.vertex for c in self.crossings})
        self.crossing_by_slot = {(c.vertex, c.dir_index): c for c in self.crossings}

    @staticmethod
    def _edge_key(x, y, dx, dy) -> tuple[int, int, int]:
        if dx == 1:
            return (x, y, 0)
        if dx == -1:
            return (x - 1, y, 0)
        if dy == 1:
            return (x, y, 1)
        return (x, y - 1, 1)

    def _classify_witness(self, i, ekey, s0, t0, cs, ct, S, hr):
        """Paper classification: closed edge vs top/bottom, half-open vs sides."""
        R = self.spec.R
        # top: closed [x,y] meets {t = hr, 0 <= s <= S}
        for lab, target, c_dir in ((TOP, hr, 1), (BOTTOM, -hr, -1)):
            hit = False
            if ct * c_dir > 0:
                lam = (target - Quad.of(t0, R)) / Quad.of(ct, R)
                if Quad.of(0, R) <= lam <= Quad.of(1, R):
                    s_at = Quad.of(s0, R) + lam * cs
                    if Quad.of(0, R) <= s_at <= Quad.of(S, R):
                        hit = True
            elif (Quad.of(t0, R) - target).sign() == 0:
                hit = True  # x exactly on the line; [x,y] touches at x
            if hit:
                self.labels[i] |= lab
                self.witnesses[lab].append((i, ekey))
        # left/right: half-open [x,y) meets {s = s_side, |t| <= hr}
        for lab, s_side in ((LEFT, Fraction(0)), (RIGHT, S)):
            hit = False
            if s0 == s_side:
                hit = True
            elif cs != 0:
                lam = Fraction(s_side - s0, cs)
                if 0 <= lam < 1:
                    t_at = Quad.of(t0 + lam * ct, R)
                    if (-hr <= t_at) and (t_at <= hr):
                        hit = True
            if hit:
                self.labels[i] |= lab
                self.witnesses[lab].append((i, ekey))

    def _exit_crossing(self, i, di, s0, t0, cs, ct, S, hr, R) -> Crossing:
        """First point where the unit edge leaves the closed cylinder."""
        cands: list[Quad] = []
        if cs < 0:
            cands.append(Quad.of(Fraction(s0, -cs), R))
        if cs > 0:
            cands.append(Quad.of(Fraction(S - s0, cs), R))
        if ct > 0:
            cands.append((hr - Quad.of(t0, R)) / Quad.of(ct, R))
        if ct < 0:
            cands.append((Quad.of(t0, R) + hr) / Quad.of(-ct, R))
        lam = cands[0]
        for c in cands[1:]:
            if c < lam:
                lam = c
        s_exit = Quad.of(s0, R) + lam * cs
        t_exit = Quad.of(t0, R) + lam * ct
        return Crossing(
            vertex=i,
            dir_index=di,
            on_top=(t_exit - hr).sign() == 0,
            on_bottom=(t_exit + hr).sign() == 0,
            on_left=s_exit.sign() == 0,
            on_right=(s_exit - Quad.of(S, R)).sign() == 0,
            s_exit=s_exit,
            t_exit=t_exit,
        )

    # -- convenience -----------------------------------------------------
    def vertex_ids_with(self, label: int) -> list[int]:
        return [i for i in range(len(self.vertices)) if self.labels[i] & label]

    @property
    def top(self) -> list[int]:
        return self.vertex_ids_with(TOP)

    @property
    def bottom(self) -> list[int]:
        return self.vertex_ids_with(BOTTOM)

    @property
    def left(self) -> list[int]:
        return self.vertex_ids_with(LEFT)

    @property
    def right(self) -> list[int]:
        return self.vertex_ids_with(RIGHT)

    def dump_jsonl(self) -> Iterable[str]:
        names = {TOP: "top", BOTTOM: "bottom", LEFT: "left", RIGHT: "right"}
        for i, (x, y) in enumerate(self.vertices):
            labs = [names[m] for m in (TOP, BOTTOM, LEFT, RIGHT) if self.labels[i] & m]
            yield json.dumps({"kind": "vertex", "id": i, "x": int(x), "y": int(y),
                              "labels": labs}, sort_keys=True)
        for ei, (u, v) in enumerate(self.edges):
            k = self.edge_keys[ei]
            yield json.dumps({"kind": "edge", "id": ei, "u": int(u), "v": int(v),
                              "key": [int(k[0]), int(k[1]), int(k[2])]},
                             sort_keys=True)


def build_cylinder(spec: CylinderSpec) -> CylinderGraph:
    """All lattice vertices in the closed cylinder, induced edges, labels."""
    return CylinderGraph(spec)


class BoundaryCondition:
    """Admissible boundary condition: a chord from the left side to the right.

    Stored as the exact chord endpoints c (left side) and d (right side) in
    Quad coordinates.  kappa=(k,theta~) parameterizations are converted on
    construction; arbitrary chords (from the enumeration sweep) are supported
    directly.
    """

    def __init__(self, spec: CylinderSpec, c: tuple[Quad, Quad], d: tuple[Quad, Quad],
                 k: Optional[Fraction] = None, tilt: Optional[tuple[int, int]] = None):
        self.spec = spec
        self.c = c
        self.d = d
        self.k = k
        self.tilt = tilt
        if c[0] == d[0] and c[1] == d[1]:
            raise DegenerateChord("chord endpoints coincide")

    # -- constructors ---------------------------------------------------
    @staticmethod
    def from_kappa(spec: CylinderSpec, k, tilt: tuple[int, int]) -> "BoundaryCondition":
        """kappa = (k, theta~) with rational k in [0,1] and integer tilt vector.

        The tilt vector is sign-normalized to have positive dot with the base
        direction; admissibility (c and d on the cylinder sides) is exact.
        """
        k = Fraction(k)
        if not 0 <= k <= 1:
            raise NotAdmissible("k must lie in [0,1]")
        p, q = spec.direction.p, spec.direction.q
        tp, tq = tilt
        g = gcd(abs(tp), abs(tq))
        if g == 0:
            raise NotAdmissible("zero tilt vector")
        tp, tq = tp // g, tq // g
        if p * tp + q * tq < 0:
            tp, tq = -tp, -tq
        if p * tp + q * tq == 0:
            raise NotAdmissible("tilt at +-pi/2 from the base direction")
        R = spec.R
        # c = na + (2k-1) h v;  v = (p,q)/sqrt(R)
        coef = (2 * k - 1) * spec.h / R
        c = (Quad(spec.na[0], coef * p, R), Quad(spec.na[1], coef * q, R))
        # d = c + mu (tq,-tp) with s(d) = S
        dotv = p * tp + q * tq
        mu = Fraction(spec.S, dotv)
        d = (c[0] + mu * tq, c[1] - mu * tp)
        # admissibility: |t(d)| <= h sqrt(R)
        t_d = Quad.root(R, (2 * k - 1) * spec.h) + mu * (p * tq - q * tp)
        if (t_d - spec.hr).sign() > 0 or (t_d + spec.hr).sign() < 0:
            raise NotAdmissible("chord leaves the cylinder sides")
        return BoundaryCondition(spec, c, d, k=k, tilt=(tp, tq))

    @staticmethod
    def from_side_heights(spec: CylinderSpec, tau_left: Fraction,
                          tau_right: Fraction) -> "BoundaryCondition":
        """Chord through c = na + tau_left*v and d = nb + tau_right*v."""
        tau_left, tau_right = Fraction(tau_left), Fraction(tau_right)
        if not (-spec.h <= tau_left <= spec.h and -spec.h <= tau_right <= spec.h):
            raise NotAdmissible("side heights must lie in [-h, h]")
        p, q, R = spec.direction.p, spec.direction.q, spec.R
        c = (Quad(spec.na[0], tau_left * p / R, R),
             Quad(spec.na[1], tau_left * q / R, R))
        d = (Quad(spec.nb[0], tau_right * p / R, R),
             Quad(spec.nb[1], tau_right * q / R, R))
        k = (tau_left / spec.h + 1) / 2
        return BoundaryCondition(spec, c, d, k=k, tilt=None)

    @staticmethod
    def tau_condition(spec: CylinderSpec) -> "BoundaryCondition":
        """kappa = (1/2, theta): the chord through the scaled basis itself."""
        return BoundaryCondition.from_kappa(
            spec, Fraction(1, 2), (spec.direction.p, spec.direction.q))

    @staticmethod
    def center_chord(spec: CylinderSpec, tilt: tuple[int, int]) -> "BoundaryCondition":
        """The tilted chord cutting the scaled basis in both middles.

        This is the condition kappa_n = (k_n, theta~) with
        k_n = 1/2 + n l(A) tan(theta~-theta) / (4 h): the chord and the basis
        segment bisect each other, and both endpoints are rational points.
        """
        p, q, R = spec.direction.p, spec.direction.q, spec.R
        tp, tq = tilt
        g = gcd(abs(tp), abs(tq))
        if g == 0:
            raise NotAdmissible("zero tilt vector")
        tp, tq = tp // g, tq // g
        if p * tp + q * tq < 0:
            tp, tq = -tp, -tq
        if p * tp + q * tq == 0:
            raise NotAdmissible("tilt at +-pi/2 from the base direction")
        dotv = p * tp + q * tq
        mu = Fraction(spec.S, dotv)
        mid = ((spec.na[0] + spec.nb[0]) / 2, (spec.na[1] + spec.nb[1]) / 2)
        cx = mid[0] - mu / 2 * tq
        cy = mid[1] + mu / 2 * tp
        c = (Quad.of(cx, R), Quad.of(cy, R))
        d = (Quad.of(cx + mu * tq, R), Quad.of(cy - mu * tp, R))
        # admissibility: |t(c)| = |t(d)| = S |tan| / 2 <= h sqrt(R)
        t_c = Fraction(spec.S, 2) * Fraction(abs(p * tq - q * tp), dotv)
        if Quad.of(t_c, R) > spec.hr:
            raise NotAdmissible("tilt outside the admissible window")
        k = None
        return BoundaryCondition(spec, c, d, k=k, tilt=(tp, tq))

    # -- exact chord data --------------------------------------------------
    def _t_of(self, z: tuple[Quad, Quad]) -> Quad:
        p, q = self.spec.direction.p, self.spec.direction.q
        return (z[0] - self.spec.na[0]) * p + (z[1] - self.spec.na[1]) * q

    def _s_of(self, z: tuple[Quad, Quad]) -> Quad:
        p, q = self.spec.direction.p, self.spec.direction.q
        return (z[0] - self.spec.na[0]) * q - (z[1] - self.spec.na[1]) * p

    def side_of(self, z) -> int:
        """Sign of cross(d-c, z-c): +1 above the chord line, -1 below."""
        ux = self.d[0] - self.c[0]
        uy = self.d[1] - self.c[1]
        wx = Quad.of(Fraction(z[0]), self.spec.R) - self.c[0]
        wy = Quad.of(Fraction(z[1]), self.spec.R) - self.c[1]
        return (ux * wy - uy * wx).sign()

    def theta_tilde(self) -> float:
        """Angle of the chord normal, for reporting."""
        ux = float(self.d[0] - self.c[0])
        uy = float(self.d[1] - self.c[1])
        ang = math.atan2(uy, ux)  # chord direction ~ vperp(theta~)
        t = ang + math.pi / 2
        return t

    # -- arcs ---------------------------------------------------------------
    def _crossing_is_upper(self, cr: Crossing, t_c: Quad, t_d: Quad,
                           hr: Quad, S: Quad) -> bool:
        """Assign a boundary exit to the upper arc (c -> left/top/right -> d).

        Exits exactly at c or d count as lower; corner exits resolve through
        the top/bottom test first.
        """
        at_c = cr.s_exit.sign() == 0 and (cr.t_exit - t_c).sign() == 0
        at_d = (cr.s_exit - S).sign() == 0 and (cr.t_exit - t_d).sign() == 0
        if at_c or at_d:
            return False
        if cr.on_top:
            return True
        if cr.on_bottom:
            return False
        if cr.on_left:
            return (cr.t_exit - t_c).sign() > 0
        if cr.on_right:
            return (cr.t_exit - t_d).sign() > 0
        raise AssertionError("exit point not on the boundary")

    def arcs(self, graph: CylinderGraph) -> tuple[list[int], list[int]]:
        """Boundary vertex arcs (A1, A2) induced by the chord.

        A boundary vertex joins the arc its outside exits poke through; the
        exits are split at c and d.  Vertices of T (resp. B) always join A1
        (resp. A2) - this pins phi <= phi^kappa for every admissible chord,
        which the continuum statement takes for granted but a near-boundary
        chord can violate vertex-by-vertex.  Remaining two-sided vertices
        are broken by the exact side-of-chord sign (on-chord goes to A2).
        """
        spec = self.spec
        t_c = self._t_of(self.c)
        t_d = self._t_of(self.d)
        hr = spec.hr
        S = Quad.of(spec.S, spec.R)
        upper: dict[int, bool] = {}
        lower: dict[int, bool] = {}
        for cr in graph.crossings:
            if self._crossing_is_upper(cr, t_c, t_d, hr, S):
                upper[cr.vertex] = True
            else:
                lower[cr.vertex] = True
        a1, a2 = [], []
        for vid in graph.boundary_ids:
            in_t = bool(graph.labels[vid] & TOP)
            in_b = bool(graph.labels[vid] & BOTTOM)
            if in_t and not in_b:
                a1.append(vid)
                continue
            if in_b and not in_t:
                a2.append(vid)
                continue
            up, lo = vid in upper, vid in lower
            if up and not lo:
                a1.append(vid)
            elif lo and not up:
                a2.append(vid)
            else:
                z = graph.vertices[vid]
                if self.side_of((int(z[0]), int(z[1]))) > 0:
                    a1.append(vid)
                else:
                    a2.append(vid)
        return a1, a2

    def upper_slots(self, graph: CylinderGraph, members: set[int],
                    one_per_vertex: bool = True):
        """(vertex, dir_index) attachment slots along the upper arc, in order."""
        return self._slots(graph, members, want_upper=True,
                           one_per_vertex=one_per_vertex)

    def lower_slots(self, graph: CylinderGraph, members: set[int],
                    one_per_vertex: bool = True):
        return self._slots(graph, members, want_upper=False,
                           one_per_vertex=one_per_vertex)

    def _slots(self, graph: CylinderGraph, members: set[int], want_upper: bool,
               one_per_vertex: bool = True):
        spec = self.spec
        t_c = self._t_of(self.c)
        t_d = self._t_of(self.d)
        hr = spec.hr
        S = Quad.of(spec.S, spec.R)
        out = []
        for cr in graph.crossings:
            if cr.vertex not in members:
                continue
            if self._crossing_is_upper(cr, t_c, t_d, hr, S) != want_upper:
                continue
            out.append((cr, self._arc_position(cr, t_c, t_d, hr, S, want_upper)))
        out.sort(key=cmp_to_key(_cmp_slots))
        if one_per_vertex:
            picked = []
            seen: set[int] = set()
            for cr, _pos in out:
                if cr.vertex not in seen:
                    seen.add(cr.vertex)
                    picked.append((cr.vertex, cr.dir_index))
            return picked
        return [(cr.vertex, cr.dir_index) for cr, _ in out]

    def _arc_position(self, cr: Crossing, t_c, t_d, hr, S, upper: bool):
        """Position along the arc from c to d, as comparable (piece, Quad)."""
        if upper:
            if cr.on_left and not cr.on_top:
                return (0, cr.t_exit - t_c)
            if cr.on_top:
                return (1, cr.s_exit)
            return (2, hr - cr.t_exit)  # right side, descending towards d
        if cr.on_left and not cr.on_bottom:
            return (0, t_c - cr.t_exit)
        if cr.on_bottom:
            return (1, cr.s_exit)
        return (2, cr.t_exit + hr)  # right side ascending towards d


def _cmp_slots(a, b) -> int:
    (cra, (pa, qa)), (crb, (pb, qb)) = a, b
    if pa != pb:
        return -1 if pa < pb else 1
    s = (qa - qb).sign()
    if s != 0:
        return s
    if cra.vertex != crb.vertex:
        return -1 if cra.vertex < crb.vertex else 1
    return (cra.dir_index > crb.dir_index) - (cra.dir_index < crb.dir_index)


# -- angle windows ---------------------------------------------------------

@dataclass(frozen=True)
class AngleWindow:
    """Closed symmetric angle window [lo, hi] about the base angle theta."""

    theta: float
    half_width: float

    @property
    def lo(self) -> float:
        return self.theta - self.half_width

    @property
    def hi(self) -> float:
        return self.theta + self.half_width

    def contains(self, ang: float, tol: float = 1e-12) -> bool:
        return self.lo - tol <= ang <= self.hi + tol


def angle_window(spec: CylinderSpec) -> AngleWindow:
    """D(nA, h): admissible tilt angles for the scaled cylinder."""
    return AngleWindow(spec.direction.theta,
                       math.atan(2 * float(spec.h) / spec.length))


def limit_windows(schedule, base: CylinderSpec) -> tuple[AngleWindow, AngleWindow]:
    """(limsup, liminf) windows for h(n) along the schedule.

    Uses the analytic limits of 2h(n)/(n l(A)) provided by the schedule
    family; an oscillating schedule yields distinct windows.
    """
    lA = base.base_length
    lo, hi = schedule.ratio_liminf_limsup()
    alpha_lo = math.atan(lo / lA) if math.isfinite(lo) else math.pi / 2
    alpha_hi = math.atan(hi / lA) if math.isfinite(hi) else math.pi / 2
    theta = base.direction.theta
    return AngleWindow(theta, alpha_hi), AngleWindow(theta, alpha_lo)


# -- kappa enumeration helpers ----------------------------------------------

def side_gap_heights(graph: CylinderGraph, side: str) -> list[Fraction]:
    """Rational heights tau (so c = na + tau*v) inside each boundary gap.

    Dividers are the exact exit heights of boundary crossings through the
    requested side; returned taus are one rational per open gap, plus the
    two end gaps against the cylinder corners.
    """
    spec = graph.spec
    R = spec.R
    want_left = side == "left"
    divs: list[Quad] = []
    for cr in graph.crossings:
        if (cr.on_left if want_left else cr.on_right):
            divs.append(cr.t_exit)
    lo = -spec.hr
    hi = spec.hr
    divs.sort(key=cmp_to_key(lambda u, v: (u - v).sign()))
    uniq: list[Quad] = []
    for d in divs:
        if not uniq or (d - uniq[-1]).sign() != 0:
            uniq.append(d)
    points: list[Fraction] = []
    prev = lo
    for d in uniq + [hi]:
        if (d - prev).sign() > 0:
            # tau = t / sqrt(R); t in (prev, d)
            tau_lo = prev * Quad.root(R, Fraction(1, R))
            tau_hi = d * Quad.root(R, Fraction(1, R))
            points.append(rational_between(tau_lo, tau_hi))
        prev = d
    return points


def quarter_points(a: Fraction, b: Fraction) -> list[Fraction]:
    return [a + (b - a) * Fraction(i, 4) for i in (1, 2, 3)]

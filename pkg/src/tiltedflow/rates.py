"""Monte Carlo estimators for the limit constants, and rate-function algebra.

Simulation layer: nu (the tau flow constant per angle), eta (the phi limit,
checked against the infimum formula over the angle window), and empirical
lower-tail rate tables -log P_hat / (n l(A)) with censoring for zero-hit
cells.

Analytic layer: the paper objects built over tabulated/synthetic tau rate
curves - Gamma, delta_{theta,h}, g_lambda, K~, K, J, Lambda - with one-sided
limits computed by a geometric step-shrinking protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .environment import (CapacityField, DistributionSpec, HeightSchedule,
                          HypothesisViolation, SCALE)
from .geometry import AngleWindow, CylinderSpec, Direction, build_cylinder
from . import dual as D
from . import flow as F

CAP_INF = 1e12
LIMIT_TOL = 1e-9


# ----------------------------------------------------------------------------
# simulation layer

def _tau_values(direction, n, h, dist, R, seed, length=1, use_dual=True):
    """tau(nA, h)/ (n l(A)) for R replicates on the canonical basis."""
    spec = CylinderSpec.canonical(direction, n=n, h=h, length=Fraction(length))
    graph = build_cylinder(spec)
    norm = spec.length * SCALE
    vals = np.empty(R, dtype=np.float64)
    if use_dual:
        from .geometry import BoundaryCondition
        solver = D.bc_solver(graph, BoundaryCondition.tau_condition(spec))
        for rep in range(R):
            caps = CapacityField(dist, seed, rep).capacities(graph.edge_keys)
            vals[rep] = solver.min_cut(caps)[0] / norm
    else:
        for rep in range(R):
            caps = CapacityField(dist, seed, rep).capacities(graph.edge_keys)
            vals[rep] = F.tau(graph, caps).value / norm
    return vals, spec


def _phi_values(spec: CylinderSpec, dist, R, seed, use_dual=True):
    graph = build_cylinder(spec)
    norm = spec.length * SCALE
    vals = np.empty(R, dtype=np.float64)
    solver = D.phi_solver(graph) if use_dual else None
    for rep in range(R):
        caps = CapacityField(dist, seed, rep).capacities(graph.edge_keys)
        if use_dual:
            vals[rep] = solver.min_cut(caps)[0] / norm
        else:
            vals[rep] = F.phi(graph, caps).value / norm
    return vals


@dataclass
class NuEstimate:
    """Sample means of tau/(n l(A)) over an n grid."""

    direction: tuple[int, int]
    n_grid: tuple[int, ...]
    R: int
    means: tuple[float, ...]
    stderrs: tuple[float, ...]

    @property
    def nu_hat(self) -> float:
        return self.means[-1]

    @property
    def stderr(self) -> float:
        return self.stderrs[-1]

    def subadditivity_ok(self) -> bool:
        """E[tau at 2n] <= 2 E[tau at n] within two joint standard errors.

        Means here are already normalized by n l(A), so the subadditive
        comparison reads mean(2n) <= mean(n) + 2*se.
        """
        ok = True
        for i, n in enumerate(self.n_grid):
            for j, m in enumerate(self.n_grid):
                if m == 2 * n:
                    se = math.hypot(self.stderrs[i], self.stderrs[j])
                    ok &= self.means[j] <= self.means[i] + 2 * se
        return ok

    def to_json(self) -> dict:
        return {
            "direction": list(self.direction),
            "n_grid": list(self.n_grid),
            "R": self.R,
            "means": list(self.means),
            "stderrs": list(self.stderrs),
            "nu_hat": self.nu_hat,
        }


def estimate_nu(direction, dist: DistributionSpec, n_grid: Sequence[int],
                R: int, schedule: HeightSchedule, seed: int = 0,
                length=1, use_dual: bool = True) -> NuEstimate:
    """Monte Carlo estimate of the tau flow constant for one direction."""
    if not dist.check_F()["F2"]:
        raise HypothesisViolation("estimate_nu requires (F2): finite mean")
    if not schedule.check_H()["H1"]:
        raise HypothesisViolation("estimate_nu requires (H1): h(n) -> infinity")
    d = direction if isinstance(direction, Direction) else Direction.make(*direction)
    means, errs = [], []
    for n in n_grid:
        vals, _ = _tau_values(d, n, schedule.h(n), dist, R, seed + n, length,
                              use_dual)
        means.append(float(vals.mean()))
        errs.append(float(vals.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0)
    return NuEstimate((d.p, d.q), tuple(n_grid), R, tuple(means), tuple(errs))


def tilt_grid(base: Direction, window: AngleWindow, max_component: int = 4,
              min_count: int = 9) -> list[tuple[int, int]]:
    """Primitive integer tilts whose angles lie in the closed window."""
    out = {}
    q_max = max_component
    while True:
        for tp in range(-q_max, q_max + 1):
            for tq in range(-q_max, q_max + 1):
                if tp == 0 and tq == 0 or math.gcd(abs(tp), abs(tq)) != 1:
                    continue
                if base.p * tp + base.q * tq <= 0:
                    continue
                ang = math.atan2(tq, tp)
                for cand in (ang, ang + math.pi, ang - math.pi):
                    if window.contains(cand):
                        out[(tp, tq)] = cand
                        break
        if len(out) >= min_count or q_max > 16:
            break
        q_max += 2
    return sorted(out, key=lambda t: out[t])


def estimate_eta(spec: CylinderSpec, dist: DistributionSpec,
                 schedule: HeightSchedule, R: int, seed: int = 0,
                 angle_tilts: Optional[Sequence[tuple[int, int]]] = None,
                 nu_R: Optional[int] = None, use_dual: bool = True) -> dict:
    """eta_hat = mean phi_n/(n l(A)); formula = min over tilts of nu/cos."""
    rep_h = validate_hypotheses_for_eta(dist, schedule, spec.base_length)
    theta = spec.direction.theta
    win, _ = limit_windows_of(schedule, spec)
    if angle_tilts is None:
        angle_tilts = tilt_grid(spec.direction, win)
    phis = _phi_values(spec, dist, R, seed, use_dual)
    eta_hat = float(phis.mean())
    eta_se = float(phis.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0
    nu_R = nu_R or R
    rows = []
    for (tp, tq) in angle_tilts:
        est = estimate_nu((tp, tq), dist, [spec.n], nu_R, schedule,
                          seed=seed + 7919 * (tp * 37 + tq), use_dual=use_dual)
        ang = math.atan2(tq, tp)
        # fold the tilt angle into theta +- pi/2
        while ang - theta > math.pi / 2:
            ang -= math.pi
        while ang - theta < -math.pi / 2:
            ang += math.pi
        cosd = math.cos(ang - theta)
        rows.append({
            "tilt": [tp, tq],
            "theta_tilde": ang,
            "nu_hat": est.nu_hat,
            "nu_stderr": est.stderr,
            "value": est.nu_hat / cosd,
            "stderr": est.stderr / cosd,
        })
    best = min(rows, key=lambda r: r["value"])
    comb = math.hypot(eta_se, best["stderr"])
    return {
        "eta_hat": eta_hat,
        "eta_stderr": eta_se,
        "formula": best["value"],
        "formula_stderr": best["stderr"],
        "argmin_tilt": best["tilt"],
        "combined_stderr": comb,
        "within_3se": abs(eta_hat - best["value"]) <= 3 * comb
                      + 1e-12,
        "grid": rows,
        "hypotheses": rep_h,
    }


def validate_hypotheses_for_eta(dist, schedule, base_length) -> dict:
    from .environment import validate_hypotheses
    rep = validate_hypotheses(dist, schedule, base_length)
    for need in ("F1", "F2", "H1", "H2"):
        if not rep[need]:
            raise HypothesisViolation("estimate_eta requires (%s)" % need)
    return rep


def limit_windows_of(schedule, spec) -> tuple[AngleWindow, AngleWindow]:
    from .geometry import limit_windows
    return limit_windows(schedule, spec)


@dataclass
class RateRow:
    lam: float
    n: int
    hits: int
    R: int
    rate: float              # -log(k/R) / (n l); bound when censored
    censored: bool


@dataclass
class RateTable:
    kind: str
    direction: tuple[int, int]
    rows: list[RateRow] = field(default_factory=list)

    def isotonic(self) -> list[RateRow]:
        """PAVA-smoothed rates, non-increasing in lambda for each fixed n."""
        out = []
        for n in sorted({r.n for r in self.rows}):
            sub = sorted((r for r in self.rows if r.n == n), key=lambda r: r.lam)
            vals = [r.rate for r in sub]
            # pool adjacent violators for a non-increasing fit
            blocks = [[v, 1] for v in vals]
            i = 0
            while i + 1 < len(blocks):
                if blocks[i][0] < blocks[i + 1][0] - 1e-15:
                    tot = blocks[i][0] * blocks[i][1] + blocks[i + 1][0] * blocks[i + 1][1]
                    cnt = blocks[i][1] + blocks[i + 1][1]
                    blocks[i:i + 2] = [[tot / cnt, cnt]]
                    i = max(i - 1, 0)
                else:
                    i += 1
            smooth = []
            for v, c in blocks:
                smooth.extend([v] * c)
            for r, v in zip(sub, smooth):
                out.append(RateRow(r.lam, r.n, r.hits, r.R, v, r.censored))
        return out

    def csv_rows(self):
        for r in self.rows:
            yield {
                "theta_p": self.direction[0], "theta_q": self.direction[1],
                "n": r.n, "lambda": r.lam, "hits": r.hits, "reps": r.R,
                "rate": r.rate, "censored": int(r.censored),
            }

    def to_json(self) -> dict:
        return {"kind": self.kind, "direction": list(self.direction),
                "rows": [vars(r) for r in self.rows]}


def estimate_rate(kind: str, direction, dist: DistributionSpec,
                  schedule: HeightSchedule, lambda_grid: Sequence[float],
                  n_grid: Sequence[int], R: int, seed: int = 0,
                  length=1, use_dual: bool = True) -> RateTable:
    """Empirical lower-tail rates r(lambda, n) with zero-hit censoring."""
    d = direction if isinstance(direction, Direction) else Direction.make(*direction)
    table = RateTable(kind, (d.p, d.q))
    for n in n_grid:
        if kind == "tau":
            vals, spec = _tau_values(d, n, schedule.h(n), dist, R,
                                     seed + 101 * n, length, use_dual)
        elif kind == "phi":
            spec = CylinderSpec.canonical(d, n=n, h=schedule.h(n),
                                          length=Fraction(length))
            vals = _phi_values(spec, dist, R, seed + 101 * n, use_dual)
        else:
            raise ValueError("kind must be tau or phi")
        nl = spec.length
        for lam in lambda_grid:
            k = int((vals <= lam + 1e-12).sum())
            if k == 0:
                table.rows.append(RateRow(float(lam), n, 0, R,
                                          math.log(R) / nl, True))
            else:
                table.rows.append(RateRow(float(lam), n, k, R,
                                          -math.log(k / R) / nl, False))
    return table


def rate_binomial_slack(hits: int, R: int, nl: float) -> float:
    """Delta-method standard error of -log(k/R)/(n l)."""
    if hits == 0:
        return math.inf
    p = hits / R
    return math.sqrt((1 - p) / (p * R)) / nl


# ----------------------------------------------------------------------------
# analytic layer: shape-conforming rate curves

@dataclass(frozen=True)
class ICurve:
    """Lower-tail rate curve for tau in one direction.

    Infinite on [0, floor], finite on (floor, nu), zero on [nu, inf),
    convex and non-increasing; `wall` is the right limit at the floor
    (finite exactly when the capacity law has an atom at its infimum).
    """

    floor: float
    nu: float
    profile: Callable[[float], float]  # on (0,1]: scaled position in (floor,nu]

    def __call__(self, x: float) -> float:
        if x < 0:
            return math.inf
        if x >= self.nu:
            return 0.0
        if x <= self.floor:
            return math.inf
        return self.profile((x - self.floor) / (self.nu - self.floor))

    def right(self, x: float) -> float:
        return right_limit(self, x)

    def shape_check(self, grid: int = 257) -> None:
        if not 0 <= self.floor < self.nu:
            raise ShapeViolation("need 0 <= floor < nu")
        xs = np.linspace(self.floor, self.nu * 1.5, grid)[1:]
        vals = [self(float(x)) for x in xs]
        finite = [v for v in vals if math.isfinite(v)]
        for a, b in zip(vals, vals[1:]):
            if b > a + 1e-12:
                raise ShapeViolation("curve must be non-increasing")
        # convexity on the finite part
        fin = [(float(x), v) for x, v in zip(xs, vals) if math.isfinite(v)]
        for (x0, v0), (x1, v1), (x2, v2) in zip(fin, fin[1:], fin[2:]):
            lam = (x1 - x0) / (x2 - x0)
            if v1 > (1 - lam) * v0 + lam * v2 + 1e-8 * (1 + abs(v0)):
                raise ShapeViolation("curve must be convex")
        if self(self.nu) != 0 or self(self.nu * 2) != 0:
            raise ShapeViolation("curve must vanish on [nu, inf)")
        if math.isfinite(self(self.floor * 0.5 if self.floor else -1.0)):
            raise ShapeViolation("curve must be infinite below the floor")


class ShapeViolation(ValueError):
    pass


def linear_profile(wall: float) -> Callable[[float], float]:
    return lambda u: wall * (1.0 - u)


def quadratic_profile(c: float) -> Callable[[float], float]:
    return lambda u: c * (1.0 - u) ** 2 / u


@dataclass(frozen=True)
class RateAlgebraContext:
    """Angle-indexed curves plus the geometry of one cylinder problem."""

    theta: float
    window: AngleWindow
    delta: float
    curve_of: Callable[[float], ICurve]

    @staticmethod
    def synthetic(theta: float, half_width: float, delta: float, nu0: float,
                  profile: str = "linear", strength: float = 1.0
                  ) -> "RateAlgebraContext":
        """Homogeneous family I_t(x) = w(t) * base(x / w(t)), w = |cos|+|sin|.

        The induced nu_t = nu0 * w(t) and floor_t = delta * w(t) match the
        required curve shape at every angle, and make Lambda positively
        homogeneous, which realizes the subadditivity equality case.
        """
        if profile == "linear":
            base = linear_profile(strength * (nu0 - delta))
        elif profile == "quadratic":
            base = quadratic_profile(strength)
        else:
            raise ValueError("unknown profile %r" % profile)

        def curve(ang: float) -> ICurve:
            w = abs(math.cos(ang)) + abs(math.sin(ang))
            return ICurve(floor=delta * w, nu=nu0 * w,
                          profile=lambda u, _b=base: _b(u))

        return RateAlgebraContext(theta, AngleWindow(theta, half_width),
                                  delta, curve)

    # -- derived constants ------------------------------------------------
    @property
    def delta_theta_h(self) -> float:
        return delta_theta_h(self.delta, self.theta, self.window)

    def eta(self, grid: int = 513) -> float:
        """inf over the closed window of nu(t)/cos(t - theta)."""
        best = math.inf
        for ang in _window_grid(self.window, grid):
            cosd = math.cos(ang - self.theta)
            if cosd <= 1e-15:
                continue
            best = min(best, self.curve_of(_fold(ang)).nu / cosd)
        return best


def _fold(ang: float) -> float:
    while ang >= math.pi:
        ang -= math.pi
    while ang < 0:
        ang += math.pi
    return ang


def _window_grid(window: AngleWindow, k: int) -> np.ndarray:
    lo = max(window.lo, window.theta - math.pi / 2)
    hi = min(window.hi, window.theta + math.pi / 2)
    g = np.linspace(lo, hi, k)
    return np.append(g, window.theta)


# ----------------------------------------------------------------------------
# one-sided limits

def right_limit(f: Callable[[float], float], x: float,
                tol: float = LIMIT_TOL, cap: float = CAP_INF) -> float:
    """f(x+): geometric step shrinking, stop on agreement or blow-up."""
    prev = None
    for j in range(8, 60):
        v = f(x + 2.0 ** -j)
        if prev is not None:
            if v > cap and prev > cap:
                return math.inf
            if math.isfinite(v) and math.isfinite(prev) and \
                    abs(v - prev) <= tol * max(1.0, abs(v)):
                return v
        prev = v
    return prev if prev is not None else f(x)


def left_limit(f: Callable[[float], float], x: float,
               tol: float = LIMIT_TOL, cap: float = CAP_INF) -> float:
    return right_limit(lambda y: f(2 * x - y), x, tol, cap)


# ----------------------------------------------------------------------------
# the algebra

def J(curve: ICurve, lam: float) -> float:
    """Right-continuous modification, +infinity above nu."""
    if lam > curve.nu:
        return math.inf
    return curve.right(lam)


def Gamma(theta_tilde: float, theta: float) -> float:
    """(|cos t| + |sin t|) / cos(t - theta); the cut-length-per-flow ratio."""
    c = math.cos(theta_tilde - theta)
    if c <= 0:
        return math.inf
    return (abs(math.cos(theta_tilde)) + abs(math.sin(theta_tilde))) / c


def gamma_inf(theta: float, window: AngleWindow) -> tuple[float, float]:
    """(inf, argmin) of Gamma over the window by monotone-branch analysis.

    On each quarter-turn branch Gamma(t) = sqrt(2) cos(t - pi/4 - k pi/2)
    / cos(t - theta) is monotone (the derivative sign is that of
    sin(branch_center - theta), a constant), so the infimum over a closed
    window is attained at window endpoints or branch boundaries.
    """
    lo = max(window.lo, theta - math.pi / 2)
    hi = min(window.hi, theta + math.pi / 2)
    cands = {lo, hi}
    k0 = math.floor(lo / (math.pi / 2))
    k1 = math.ceil(hi / (math.pi / 2))
    for k in range(k0, k1 + 1):
        b = k * math.pi / 2
        if lo <= b <= hi:
            cands.add(b)
    best, arg = math.inf, lo
    for t in sorted(cands):
        v = Gamma(t, theta)
        if v < best:
            best, arg = v, t
    return best, arg


def delta_theta_h(delta: float, theta: float, window: AngleWindow) -> float:
    """delta * inf over the window of Gamma: the asymptotic floor of phi."""
    return delta * gamma_inf(theta, window)[0]


def g_lambda(ctx: RateAlgebraContext, lam: float, theta_tilde: float) -> float:
    """I_t(lambda cos(t-theta)^+) / cos(t-theta) with endpoint conventions."""
    dtheta = theta_tilde - ctx.theta
    if abs(abs(dtheta) - math.pi / 2) < 1e-15:
        curve = ctx.curve_of(_fold(theta_tilde))
        return math.inf if curve.right(0.0) > 0 else 0.0
    c = math.cos(dtheta)
    if c <= 0:
        return math.inf
    curve = ctx.curve_of(_fold(theta_tilde))
    return curve.right(lam * c) / c


def K_tilde(ctx: RateAlgebraContext, lam: float, grid: int = 513,
            refine_iters: int = 40) -> float:
    """inf over the closed window of g_lambda, grid + golden refinement."""
    angs = _window_grid(ctx.window, grid)
    vals = np.array([g_lambda(ctx, lam, float(a)) for a in angs])
    i = int(np.argmin(vals))
    best = float(vals[i])
    lo = float(angs[max(i - 1, 0)])
    hi = float(angs[min(i + 1, len(angs) - 1)])
    gr = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    fa = g_lambda(ctx, lam, a)
    for _ in range(refine_iters):
        m1 = b - gr * (b - a)
        m2 = a + gr * (b - a)
        if g_lambda(ctx, lam, m1) <= g_lambda(ctx, lam, m2):
            b = m2
        else:
            a = m1
    best = min(best, g_lambda(ctx, lam, (a + b) / 2))
    return best if best <= CAP_INF else math.inf


def K(ctx: RateAlgebraContext, lam: float, eta: Optional[float] = None,
      grid: int = 513) -> float:
    """Good rate function: K~ below eta, +infinity above."""
    if eta is None:
        eta = ctx.eta()
    if lam > eta + 1e-12:
        return math.inf
    return K_tilde(ctx, lam, grid)


def Lambda(ctx: RateAlgebraContext, lam: float, vec) -> float:
    """|v|_2 * I_{theta(v)}(lambda (|cos|+|sin|)^+)."""
    vx, vy = float(vec[0]), float(vec[1])
    norm = math.hypot(vx, vy)
    if norm == 0:
        raise ValueError("Lambda is undefined at the zero vector")
    ang = math.atan2(vy, vx)
    w = abs(math.cos(ang)) + abs(math.sin(ang))
    curve = ctx.curve_of(_fold(ang))
    return norm * curve.right(lam * w)


def check_Lambda_subadditive(ctx: RateAlgebraContext, pairs: int = 1000,
                             lam_max: float = 2.0, seed: int = 0) -> dict:
    """Lambda(lam, u+v) <= Lambda(lam, u) + Lambda(lam, v) on random pairs."""
    rng = np.random.default_rng(seed)
    failures = 0
    worst = 0.0
    for _ in range(pairs):
        u = rng.uniform(0.05, 3.0, 2)
        v = rng.uniform(0.05, 3.0, 2)
        lam = float(rng.uniform(0.0, lam_max))
        lhs = Lambda(ctx, lam, u + v)
        rhs = Lambda(ctx, lam, u) + Lambda(ctx, lam, v)
        if math.isinf(rhs):
            continue
        gap = lhs - rhs
        worst = max(worst, gap)
        if gap > 1e-9 * max(1.0, abs(rhs)):
            failures += 1
    return {"pairs": pairs, "failures": failures, "worst_gap": worst}


def H_lambda_set(ctx: RateAlgebraContext, lam: float, op: str,
                 theta_tilde: float) -> bool:
    """Membership of t in H_lambda^op = {t | lam op delta Gamma(t)}."""
    rhs = ctx.delta * Gamma(theta_tilde, ctx.theta)
    return {
        "<": lam < rhs, ">": lam > rhs, "<=": lam <= rhs,
        ">=": lam >= rhs, "==": abs(lam - rhs) < 1e-12,
    }[op]

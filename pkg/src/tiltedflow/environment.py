"""Random capacity environments and hypothesis validators.

Capacities are i.i.d. over lattice edges, sampled through a counter-based
generator keyed by (seed, replicate, canonical edge key), so a field is a
pure function of its address: re-enumerating edges in any order, or
sharding the work over any number of threads, reproduces identical values.

Values are fixed-point integers at scale 2**20 per unit so that min-cut /
max-flow identities hold exactly in integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import FIXED_POINT_SCALE

SCALE = FIXED_POINT_SCALE
MAX_FIXED = 1 << 43  # refuse (never truncate) beyond this


class EnvironmentError_(ValueError):
    pass


class OverflowRisk(EnvironmentError_):
    pass


class HypothesisViolation(EnvironmentError_):
    pass


def quantize(x: float | Fraction) -> int:
    """Fixed-point with round-half-up."""
    if isinstance(x, Fraction):
        v = (x * SCALE * 2 + 1) // 2  # floor(x*S + 1/2)
        return int(v)
    return int(math.floor(x * SCALE + 0.5))


# ----------------------------------------------------------------------------
# counter-based uniform generator (splitmix64 rounds over the key tuple)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def counter_uniform(seed: int, replicate: int, keys: np.ndarray) -> np.ndarray:
    """U(0,1) per key row; keys is an (n,3) int array (x, y, axis)."""
    with np.errstate(over="ignore"):
        state = np.full(len(keys), np.uint64(seed & (2**64 - 1)))
        for col in (np.uint64(replicate & (2**64 - 1)),
                    keys[:, 0].astype(np.int64).view(np.uint64),
                    keys[:, 1].astype(np.int64).view(np.uint64),
                    keys[:, 2].astype(np.int64).view(np.uint64)):
            state = _mix((state + _GOLDEN) ^ (col * _GOLDEN))
        bits = _mix(state + _GOLDEN)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0**-53)


# ----------------------------------------------------------------------------
# distributions

_FAMILIES = ("two_atom", "bernoulli", "shifted_exponential", "pareto",
             "uniform", "constant")


@dataclass(frozen=True)
class DistributionSpec:
    """Capacity law F on [0, inf) with hard-coded moment truth table."""

    family: str
    params: tuple

    @staticmethod
    def two_atom(delta, b, p) -> "DistributionSpec":
        """P(t=b) = p, P(t=delta) = 1-p, with 0 <= delta < b."""
        delta, b, p = Fraction(delta), Fraction(b), float(p)
        if not (0 <= delta < b and 0 <= p <= 1):
            raise EnvironmentError_("need 0 <= delta < b and p in [0,1]")
        return DistributionSpec("two_atom", (delta, b, p))

    @staticmethod
    def bernoulli(c, p) -> "DistributionSpec":
        """P(t=c) = p, P(t=0) = 1-p."""
        return DistributionSpec("bernoulli", (Fraction(c), float(p)))

    @staticmethod
    def shifted_exponential(delta, rate) -> "DistributionSpec":
        return DistributionSpec("shifted_exponential", (Fraction(delta), float(rate)))

    @staticmethod
    def pareto(shape) -> "DistributionSpec":
        """P(t > x) = x**-shape for x >= 1 (scale fixed to 1)."""
        return DistributionSpec("pareto", (float(shape),))

    @staticmethod
    def uniform(lo, hi) -> "DistributionSpec":
        lo, hi = Fraction(lo), Fraction(hi)
        if not 0 <= lo < hi:
            raise EnvironmentError_("need 0 <= lo < hi")
        return DistributionSpec("uniform", (lo, hi))

    @staticmethod
    def constant(c) -> "DistributionSpec":
        return DistributionSpec("constant", (Fraction(c),))

    # -- derived quantities ------------------------------------------------
    @property
    def delta(self) -> Fraction:
        """Essential infimum of F."""
        f, p = self.family, self.params
        if f == "two_atom":
            return p[0] if p[2] < 1 else p[1]
        if f == "bernoulli":
            return Fraction(0) if p[1] < 1 else p[0]
        if f == "shifted_exponential":
            return p[0]
        if f == "pareto":
            return Fraction(1)
        if f == "uniform":
            return p[0]
        return p[0]

    @property
    def atom_at_delta(self) -> float:
        f, p = self.family, self.params
        if f == "two_atom":
            return 1 - p[2] if p[2] < 1 else p[2]
        if f == "bernoulli":
            return 1 - p[1] if p[1] < 1 else p[1]
        if f == "constant":
            return 1.0
        return 0.0

    @property
    def prob_zero(self) -> float:
        f, p = self.family, self.params
        if f == "two_atom":
            out = 0.0
            if p[0] == 0:
                out += 1 - p[2]
            if p[1] == 0:
                out += p[2]
            return out
        if f == "bernoulli":
            return (1 - p[1]) + (p[1] if p[0] == 0 else 0.0)
        if f == "shifted_exponential":
            return 0.0
        if f == "pareto":
            return 0.0
        if f == "uniform":
            return 0.0
        return 1.0 if p[0] == 0 else 0.0

    @property
    def upper_bound(self) -> Optional[Fraction]:
        f, p = self.family, self.params
        if f == "two_atom":
            return p[1]
        if f == "bernoulli":
            return p[0]
        if f == "uniform":
            return p[1]
        if f == "constant":
            return p[0]
        return None

    def mean(self) -> float:
        f, p = self.family, self.params
        if f == "two_atom":
            return float(p[0]) * (1 - p[2]) + float(p[1]) * p[2]
        if f == "bernoulli":
            return float(p[0]) * p[1]
        if f == "shifted_exponential":
            return float(p[0]) + 1.0 / p[1]
        if f == "pareto":
            return p[0] / (p[0] - 1.0) if p[0] > 1 else math.inf
        if f == "uniform":
            return float(p[0] + p[1]) / 2
        return float(p[0])

    # -- hypothesis truth table ----------------------------------------------
    def check_F(self) -> dict[str, bool]:
        f, p = self.family, self.params
        out = {"F1": self.prob_zero < 0.5}
        if f == "pareto":
            shape = p[0]
            out["F2"] = shape > 1
            out["F3"] = shape > 2
            out["F4"] = False
            out["F5"] = False
        elif f == "shifted_exponential":
            out["F2"] = out["F3"] = True
            out["F4"] = True      # gamma < rate works
            out["F5"] = False     # gamma >= rate diverges
        else:  # bounded support
            out["F2"] = out["F3"] = out["F4"] = out["F5"] = True
        return out

    # -- sampling -------------------------------------------------------------
    def quantized_atoms(self) -> Optional[tuple[int, int, float]]:
        """(low_fixed, high_fixed, p_high) for two-valued families."""
        f, p = self.family, self.params
        if f == "two_atom":
            return quantize(p[0]), quantize(p[1]), p[2]
        if f == "bernoulli":
            return 0, quantize(p[0]), p[1]
        return None

    def validate_overflow(self):
        ub = self.upper_bound
        if ub is not None and quantize(ub) >= MAX_FIXED:
            raise OverflowRisk("fixed-point range exceeded by %s" % (self.family,))

    def sample_fixed(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms to fixed-point capacities (vectorized inverse CDF)."""
        self.validate_overflow()
        atoms = self.quantized_atoms()
        if atoms is not None:
            lo, hi, ph = atoms
            return np.where(u < ph, np.int64(hi), np.int64(lo))
        f, p = self.family, self.params
        if f == "constant":
            return np.full(len(u), quantize(p[0]), dtype=np.int64)
        if f == "uniform":
            vals = float(p[0]) + (float(p[1]) - float(p[0])) * u
        elif f == "shifted_exponential":
            vals = float(p[0]) - np.log1p(-u) / p[1]
        elif f == "pareto":
            vals = np.power(1.0 - u, -1.0 / p[0])
        else:
            raise EnvironmentError_("unknown family %r" % (self.family,))
        fixed = np.floor(vals * SCALE + 0.5).astype(np.int64)
        if fixed.size and int(fixed.max()) >= MAX_FIXED:
            raise OverflowRisk("sampled capacity exceeded 2^43 fixed-point")
        return fixed

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, Fraction):
                return [v.numerator, v.denominator]
            return v
        return {"family": self.family, "params": [enc(v) for v in self.params]}

    @staticmethod
    def from_json(obj) -> "DistributionSpec":
        fam = obj["family"]
        raw = obj["params"]
        dec = [Fraction(*v) if isinstance(v, list) else v for v in raw]
        ctor = {
            "two_atom": DistributionSpec.two_atom,
            "bernoulli": DistributionSpec.bernoulli,
            "shifted_exponential": DistributionSpec.shifted_exponential,
            "pareto": DistributionSpec.pareto,
            "uniform": DistributionSpec.uniform,
            "constant": DistributionSpec.constant,
        }[fam]
        return ctor(*dec)


# ----------------------------------------------------------------------------
# capacity fields

@dataclass(frozen=True)
class CapacityField:
    """One sampled environment: capacities are functions of the edge key."""

    dist: DistributionSpec
    seed: int
    replicate: int

    def capacities(self, edge_keys: np.ndarray) -> np.ndarray:
        u = counter_uniform(self.seed, self.replicate, edge_keys)
        return self.dist.sample_fixed(u)

    def capacity(self, key: tuple[int, int, int]) -> int:
        return int(self.capacities(np.array([key], dtype=np.int64))[0])


def sample(dist: DistributionSpec, seed: int, replicate: int,
           edge_keys: np.ndarray) -> np.ndarray:
    """Capacities for the given canonical edge keys."""
    return CapacityField(dist, seed, replicate).capacities(edge_keys)


# ----------------------------------------------------------------------------
# height schedules

@dataclass(frozen=True)
class HeightSchedule:
    """h(n) family with analytic H1-H4 validators."""

    family: str
    params: tuple

    @staticmethod
    def power(c, beta) -> "HeightSchedule":
        """h(n) = c * n**beta."""
        if Fraction(c) <= 0:
            raise EnvironmentError_("need c > 0")
        return HeightSchedule("power", (Fraction(c), Fraction(beta)))

    @staticmethod
    def linear(c) -> "HeightSchedule":
        return HeightSchedule.power(c, 1)

    @staticmethod
    def log_scaled(c) -> "HeightSchedule":
        """h(n) = c * n * log(n)."""
        return HeightSchedule("log_scaled", (Fraction(c),))

    @staticmethod
    def alternating(even: "HeightSchedule", odd: "HeightSchedule") -> "HeightSchedule":
        return HeightSchedule("alternating", (even, odd))

    @staticmethod
    def table(values: dict[int, Fraction]) -> "HeightSchedule":
        return HeightSchedule("table", (tuple(sorted(values.items())),))

    def h(self, n: int) -> Fraction:
        f, p = self.family, self.params
        if f == "power":
            c, beta = p
            if beta.denominator == 1:
                return c * Fraction(n) ** int(beta)
            val = float(c) * float(n) ** float(beta)
            return Fraction(val).limit_denominator(4096)
        if f == "log_scaled":
            return Fraction(float(p[0]) * n * math.log(n)).limit_denominator(4096)
        if f == "alternating":
            return p[n % 2].h(n)
        if f == "table":
            d = dict(p[0])
            if n not in d:
                raise EnvironmentError_("n=%d not in schedule table" % n)
            return Fraction(d[n])
        raise EnvironmentError_("unknown schedule %r" % (f,))

    def ratio_liminf_limsup(self) -> tuple[float, float]:
        """liminf/limsup of 2 h(n) / n (divide by l(A) downstream)."""
        f, p = self.family, self.params
        if f == "power":
            c, beta = p
            if beta < 1:
                return 0.0, 0.0
            if beta == 1:
                v = 2 * float(c)
                return v, v
            return math.inf, math.inf
        if f == "log_scaled":
            return math.inf, math.inf
        if f == "alternating":
            lo0, hi0 = p[0].ratio_liminf_limsup()
            lo1, hi1 = p[1].ratio_liminf_limsup()
            return min(lo0, lo1), max(hi0, hi1)
        if f == "table":
            ns = [n for n, _ in p[0]]
            vals = [2 * float(h) / n for n, h in p[0]]
            tail = vals[len(vals) // 2:]
            return min(tail), max(tail)
        raise EnvironmentError_("unknown schedule %r" % (f,))

    def check_H(self, base_length: float = 1.0) -> dict:
        """H1..H4 flags plus tan(alpha) when H4 holds."""
        f, p = self.family, self.params
        out: dict[str, object] = {}
        lo, hi = self.ratio_liminf_limsup()
        if f == "power":
            c, beta = p
            out["H1"] = beta > 0
            out["H2"] = True
            out["H3"] = beta > 1
        elif f == "log_scaled":
            out["H1"] = True
            out["H2"] = True
            out["H3"] = True
        elif f == "alternating":
            h0 = p[0].check_H(base_length)
            h1 = p[1].check_H(base_length)
            out["H1"] = bool(h0["H1"] and h1["H1"])
            out["H2"] = bool(h0["H2"] and h1["H2"])
            out["H3"] = bool(h0["H3"] and h1["H3"])
        else:  # table: empirical flags over the listed range
            ns = [n for n, _ in p[0]]
            hs = [float(h) for _, h in p[0]]
            out["H1"] = hs[-1] > hs[0]
            out["H2"] = math.log(max(hs[-1], 1.0)) / ns[-1] < 0.5
            out["H3"] = hs[-1] / ns[-1] > hs[0] / ns[0]
        out["H4"] = lo == hi
        out["tan_alpha"] = (lo / base_length) if lo == hi else None
        if out["H3"] and not out["H1"]:
            raise AssertionError("validator inconsistency: H3 implies H1")
        return out

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, Fraction):
                return [v.numerator, v.denominator]
            if isinstance(v, HeightSchedule):
                return v.to_json()
            if isinstance(v, tuple):
                return [[n, [h.numerator, h.denominator]] for n, h in v]
            return v
        return {"family": self.family, "params": [enc(v) for v in self.params]}

    @staticmethod
    def from_json(obj) -> "HeightSchedule":
        fam = obj["family"]
        raw = obj["params"]
        if fam == "power":
            return HeightSchedule.power(Fraction(*raw[0]), Fraction(*raw[1]))
        if fam == "log_scaled":
            return HeightSchedule.log_scaled(Fraction(*raw[0]))
        if fam == "alternating":
            return HeightSchedule.alternating(HeightSchedule.from_json(raw[0]),
                                              HeightSchedule.from_json(raw[1]))
        if fam == "table":
            return HeightSchedule.table({n: Fraction(*h) for n, h in raw[0]})
        raise EnvironmentError_("unknown schedule %r" % (fam,))


def validate_hypotheses(dist: DistributionSpec, schedule: HeightSchedule,
                        base_length: float = 1.0) -> dict:
    """Joint report of F1..F5, H1..H4, and the FH flags.

    (FH1)/(FH2) are reported as implied when (H4) holds; the paper gives no
    checkable criterion otherwise, so they stay unknown.
    """
    report: dict[str, object] = {}
    report.update(dist.check_F())
    report.update(schedule.check_H(base_length))
    fh = "implied" if report["H4"] else "unknown"
    report["FH1"] = fh
    report["FH2"] = fh
    report["theorems"] = {
        "lln_tau": bool(report["F2"] and report["H1"]),
        "lln_phi": bool(report["F2"] and report["H1"] and report["H2"]),
        "lower_ld_phi": bool(report["F1"] and report["F2"] and report["H1"]
                             and report["H2"] and report["FH1"] == "implied"),
        "ldp_phi": bool(report["F1"] and report["F2"] and report["H1"]
                        and report["H2"] and report["FH1"] == "implied"
                        and (report["F4"] or report["H3"])),
    }
    return report

"""Experiment configuration, dispatch, persistence and manifests.

A run is driven by one JSON config; results are JSON-lines plus flat CSV
summaries, every row carrying provenance (seed, replicate, config hash).
Fixed-point values are serialized as integers with the scale recorded in
the manifest, so outputs round-trip bit-exactly.  For a fixed (config,
seed) the result bytes are identical at any thread budget: workers fill a
task table that is merged in sorted task order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import FIXED_POINT_SCALE, __version__
from .environment import (CapacityField, DistributionSpec, HeightSchedule,
                          validate_hypotheses)
from .geometry import BoundaryCondition, CylinderSpec, build_cylinder
from . import dual as D
from . import flow as F
from . import gluing as G
from . import rates as R


class ConfigError(ValueError):
    pass


VALID_KINDS = ("geometry", "flow", "dual-check", "glue-check", "nu", "eta",
               "rate", "algebra-check")


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    payload: dict
    threads: int = 1
    out_dir: str = "results"

    @staticmethod
    def from_json(obj: dict) -> "ExperimentConfig":
        if "kind" not in obj or obj["kind"] not in VALID_KINDS:
            raise ConfigError("config field 'kind' must be one of %s"
                              % (VALID_KINDS,))
        return ExperimentConfig(
            kind=obj["kind"],
            seed=int(obj.get("seed", 0)),
            payload=obj.get("payload", {}),
            threads=int(obj.get("threads", 1)),
            out_dir=obj.get("out", "results"),
        )

    def canonical_json(self) -> str:
        return json.dumps({"kind": self.kind, "seed": self.seed,
                           "payload": self.payload}, sort_keys=True)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]


def _pmap(fn: Callable, keys, threads: int):
    """Deterministic parallel map: results merged in sorted key order."""
    keys = sorted(keys)
    if threads <= 1:
        return [(k, fn(k)) for k in keys]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        vals = list(pool.map(fn, keys))
    return list(zip(keys, vals))


def _dist(payload) -> DistributionSpec:
    try:
        return DistributionSpec.from_json(payload["dist"])
    except KeyError as e:
        raise ConfigError("missing distribution spec: %s" % e)


def _sched(payload) -> HeightSchedule:
    try:
        return HeightSchedule.from_json(payload["schedule"])
    except KeyError as e:
        raise ConfigError("missing height schedule: %s" % e)


def _spec(payload, key="spec") -> CylinderSpec:
    try:
        return CylinderSpec.from_json(payload[key])
    except KeyError as e:
        raise ConfigError("missing cylinder spec: %s" % e)


def run(config: ExperimentConfig) -> dict:
    """Dispatch a config, write result files + manifest, return the manifest."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    runner = {
        "geometry": _run_geometry,
        "flow": _run_flow,
        "dual-check": _run_dual_check,
        "glue-check": _run_glue_check,
        "nu": _run_nu,
        "eta": _run_eta,
        "rate": _run_rate,
        "algebra-check": _run_algebra,
    }[config.kind]
    files, summary = runner(config, out)
    manifest = {
        "kind": config.kind,
        "config_hash": config.config_hash,
        "code_version": __version__,
        "seed": config.seed,
        "fixed_point_scale": FIXED_POINT_SCALE,
        "elapsed_s": round(time.time() - t0, 3),
        "files": {name: _digest(out / name) for name in files},
        "summary": summary,
        "partial": False,
    }
    _write_text(out / "manifest.json",
                json.dumps(_strip_volatile(manifest), sort_keys=True, indent=1))
    return manifest


def _strip_volatile(manifest: dict) -> dict:
    out = dict(manifest)
    out.pop("elapsed_s", None)  # timing cannot be part of the digest contract
    return out


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_text(path: Path, text: str):
    path.write_text(text if text.endswith("\n") else text + "\n")


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _write_csv(path: Path, rows, fieldnames) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames)
        w.writeheader()
        for row in rows:
            w.writerow(row)


# ----------------------------------------------------------------------------
# runners

def _run_geometry(config, out):
    spec = _spec(config.payload)
    graph = build_cylinder(spec)
    _write_jsonl(out / "geometry.jsonl",
                 (json.loads(line) for line in graph.dump_jsonl()))
    return ["geometry.jsonl"], {"vertices": len(graph.vertices),
                                "edges": len(graph.edges)}


def _run_flow(config, out):
    spec = _spec(config.payload)
    dist = _dist(config.payload)
    graph = build_cylinder(spec)
    rep = int(config.payload.get("replicate", 0))
    caps = CapacityField(dist, config.seed, rep).capacities(graph.edge_keys)
    kind = config.payload.get("flow", "phi")
    if kind == "phi":
        res = F.phi(graph, caps)
    elif kind == "tau":
        res = F.tau(graph, caps)
    else:
        raise ConfigError("payload.flow must be phi or tau")
    row = {"flow": kind, "value": res.value, "cut_edges": list(res.cut.edge_ids),
           "seed": config.seed, "replicate": rep,
           "config": config.config_hash}
    _write_jsonl(out / "flow.jsonl", [row])
    return ["flow.jsonl"], {"value": res.value}


def _run_dual_check(config, out):
    spec = _spec(config.payload)
    dist = _dist(config.payload)
    reps = int(config.payload.get("reps", 10))
    graph = build_cylinder(spec)
    family = D.enumerate_kappa(graph)

    def task(rep):
        caps = CapacityField(dist, config.seed, rep).capacities(graph.edge_keys)
        r = D.verify_duality_lemma(graph, caps, family)
        vd, _ = D.dual_min_cut_phi(graph, caps)
        return {"replicate": rep, "phi": r["phi"], "min_phi_kappa":
                r["min_phi_kappa"], "equal": r["equal"],
                "dual_phi": vd, "dual_equal": vd == r["phi"],
                "family_size": r["family_size"], "seed": config.seed,
                "config": config.config_hash}

    rows = [v for _, v in _pmap(task, range(reps), config.threads)]
    _write_jsonl(out / "dual_check.jsonl", rows)
    ok = all(r["equal"] and r["dual_equal"] for r in rows)
    return ["dual_check.jsonl"], {"reps": reps, "all_equal": ok,
                                  "family_size": family.size}


def _run_glue_check(config, out):
    p = config.payload
    dist = _dist(p)
    kind = p.get("glue", "phi")
    reps = int(p.get("reps", 10))
    cfg = G.GluingConfig.default(int(p["n"]), int(p["N"]),
                                 zeta0=int(p.get("zeta0", 4)))
    if kind == "phi":
        layout = G.PhiGluingLayout(cfg, _spec(p, "big_spec"), tuple(p["tilt"]))
    elif kind == "triangle":
        layout = G.TriangleLayout(cfg, tuple(p["a"]), tuple(p["b"]),
                                  tuple(p["c"]))
    elif kind == "slab":
        cfg = G.GluingConfig.default(int(p["n"]), int(p["N"]),
                                     h_inner=_spec(p, "inner_spec").h,
                                     zeta0=int(p.get("zeta0", 4)))
        layout = G.SlabLayout(cfg, _spec(p, "inner_spec"), tuple(p["tilt"]))
    else:
        raise ConfigError("payload.glue must be phi, triangle or slab")

    def task(rep):
        r = layout.verify(CapacityField(dist, config.seed, rep))
        r.update({"replicate": rep, "seed": config.seed,
                  "config": config.config_hash})
        return r

    rows = [v for _, v in _pmap(task, range(reps), config.threads)]
    _write_jsonl(out / "glue_check.jsonl", rows)
    ok = all(r["holds"] and r["structural"] for r in rows)
    return ["glue_check.jsonl"], {"reps": reps, "all_hold": ok}


def _require(report: dict, flags: tuple[str, ...], what: str):
    for f in flags:
        if not report[f]:
            raise ConfigError("%s requires (%s), violated by this config"
                              % (what, f))


def _run_nu(config, out):
    p = config.payload
    dist, sched = _dist(p), _sched(p)
    _require(dist.check_F(), ("F2",), "nu")
    _require(sched.check_H(), ("H1",), "nu")
    directions = p.get("directions", [p.get("direction", [0, 1])])
    n_grid = [int(n) for n in p["n_grid"]]
    Rn = int(p["R"])
    length = Fraction(*p.get("length", [1, 1]))
    rows = []
    ests = []
    for dvec in directions:
        est = R.estimate_nu(tuple(dvec), dist, n_grid, Rn, sched,
                            seed=config.seed, length=length)
        ests.append(est.to_json())
        for n, m, s in zip(est.n_grid, est.means, est.stderrs):
            rows.append({"theta_p": dvec[0], "theta_q": dvec[1], "n": n,
                         "lambda": "", "hits": "", "reps": Rn, "rate": m,
                         "censored": 0, "stderr": s})
    _write_jsonl(out / "nu.jsonl", ests)
    _write_csv(out / "nu.csv", rows,
               ["theta_p", "theta_q", "n", "lambda", "hits", "reps", "rate",
                "censored", "stderr"])
    return ["nu.jsonl", "nu.csv"], {"directions": len(directions)}


def _run_eta(config, out):
    p = config.payload
    dist, sched = _dist(p), _sched(p)
    spec = _spec(p)
    rep = R.estimate_eta(spec, dist, sched, R=int(p["R"]), seed=config.seed,
                         nu_R=int(p.get("nu_R", p["R"])))
    _write_jsonl(out / "eta.jsonl", [
        {k: rep[k] for k in ("eta_hat", "eta_stderr", "formula",
                             "formula_stderr", "argmin_tilt", "combined_stderr",
                             "within_3se")} | {"config": config.config_hash},
    ])
    rows = [{"theta_p": r["tilt"][0], "theta_q": r["tilt"][1], "n": spec.n,
             "lambda": "", "hits": "", "reps": p["R"], "rate": r["value"],
             "censored": 0, "stderr": r["stderr"]} for r in rep["grid"]]
    _write_csv(out / "eta.csv", rows,
               ["theta_p", "theta_q", "n", "lambda", "hits", "reps", "rate",
                "censored", "stderr"])
    return ["eta.jsonl", "eta.csv"], {"within_3se": rep["within_3se"]}


def _run_rate(config, out):
    p = config.payload
    dist, sched = _dist(p), _sched(p)
    kind = p.get("flow", "tau")
    table = R.estimate_rate(kind, tuple(p.get("direction", [0, 1])), dist,
                            sched, [float(x) for x in p["lambda_grid"]],
                            [int(n) for n in p["n_grid"]], int(p["R"]),
                            seed=config.seed,
                            length=Fraction(*p.get("length", [1, 1])))
    _write_jsonl(out / "rate.jsonl", [table.to_json()])
    _write_csv(out / "rate.csv", list(table.csv_rows()),
               ["theta_p", "theta_q", "n", "lambda", "hits", "reps", "rate",
                "censored"])
    return ["rate.jsonl", "rate.csv"], {"rows": len(table.rows)}


def _run_algebra(config, out):
    p = config.payload
    import math
    rows = []
    for profile in p.get("profiles", ["linear", "quadratic"]):
        ctx = R.RateAlgebraContext.synthetic(
            theta=float(p.get("theta", 0.0)),
            half_width=float(p.get("half_width", math.pi / 4)),
            delta=float(p.get("delta", 0.5)),
            nu0=float(p.get("nu0", 2.0)),
            profile=profile)
        eta = ctx.eta()
        dth = ctx.delta_theta_h
        lams = np.linspace(dth, eta, 33)
        vals = [R.K_tilde(ctx, float(l)) for l in lams]
        mono = all(b <= a + 1e-10 for a, b in zip(vals, vals[1:]))
        strict = all(a - b > 1e-10 for a, b in
                     zip(vals, vals[1:]) if math.isfinite(a))
        sub = R.check_Lambda_subadditive(ctx, pairs=int(p.get("pairs", 1000)),
                                         seed=config.seed)
        rows.append({"profile": profile, "eta": eta, "delta_theta_h": dth,
                     "monotone": mono, "strictly_decreasing": strict,
                     "subadditive_failures": sub["failures"],
                     "config": config.config_hash})
    _write_jsonl(out / "algebra.jsonl", rows)
    ok = all(r["monotone"] and r["strictly_decreasing"]
             and r["subadditive_failures"] == 0 for r in rows)
    return ["algebra.jsonl"], {"all_ok": ok}


# ----------------------------------------------------------------------------
# capacity field files (env sample / flow solve)

def write_field_file(path, spec: CylinderSpec, dist: DistributionSpec,
                     seed: int, replicate: int) -> dict:
    graph = build_cylinder(spec)
    caps = CapacityField(dist, seed, replicate).capacities(graph.edge_keys)
    header = {"seed": seed, "replicate": replicate, "dist": dist.to_json(),
              "spec": spec.to_json(), "edges": len(caps),
              "scale": FIXED_POINT_SCALE}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for ei, c in enumerate(caps):
            fh.write(struct.pack("<qq", ei, int(c)))
    return header


def read_field_file(path) -> tuple[CylinderSpec, np.ndarray, dict]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        spec = CylinderSpec.from_json(header["spec"])
        caps = np.zeros(header["edges"], dtype=np.int64)
        for _ in range(header["edges"]):
            ei, c = struct.unpack("<qq", fh.read(16))
            caps[ei] = c
    return spec, caps, header

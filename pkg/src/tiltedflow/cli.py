"""Command line interface.

    tiltedflow <kind> <action> [--config FILE] [--seed S] [--threads T] [--out DIR]

Kinds and their actions:

    geometry dump --spec FILE       vertices/edges/classification as JSON lines
    env sample --config FILE --out-file FILE   binary capacity field
    flow solve --net FILE           {value, cut edge ids} for a stored field
    dual check --config FILE        duality-lemma reports per replicate
    glue check --kind {phi,triangle,slab} --config FILE
    nu run / eta run / rate run --config FILE
    algebra check --config FILE
    <any> report --out DIR          render tables/CSV/figures for a run

Exit codes: 0 all assertions passed, 2 assertion failure, 1 config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiment import (ConfigError, ExperimentConfig, read_field_file,
                         run, write_field_file)
from .environment import DistributionSpec
from .geometry import CylinderSpec, GeometryError, build_cylinder


_KIND_MAP = {
    "dual": "dual-check",
    "glue": "glue-check",
    "algebra": "algebra-check",
    "nu": "nu",
    "eta": "eta",
    "rate": "rate",
    "geometry": "geometry",
    "flow": "flow",
    "env": "env",
}

_ASSERT_FLAGS = ("all_equal", "all_hold", "all_ok", "within_3se")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tiltedflow", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("kind", choices=sorted(_KIND_MAP) + ["report"])
    ap.add_argument("action", nargs="?", default=None,
                    help="dump|sample|solve|check|run|report")
    ap.add_argument("--config", type=Path, help="experiment config JSON")
    ap.add_argument("--spec", type=Path, help="cylinder spec JSON (geometry)")
    ap.add_argument("--net", type=Path, help="binary field file (flow solve)")
    ap.add_argument("--kind", dest="glue_kind",
                    choices=["phi", "triangle", "slab"],
                    help="gluing construction (glue check)")
    ap.add_argument("--out-file", type=Path, help="output file (env sample)")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", type=Path, default=None, help="result directory")
    ap.add_argument("--reps", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, GeometryError, FileNotFoundError, KeyError) as e:
        print("config error: %s" % e, file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.kind == "report" or args.action == "report":
        from .report import report
        out = args.out or Path("results")
        print(report(out))
        return 0

    if args.kind == "geometry":
        spec = CylinderSpec.from_json(json.loads(args.spec.read_text()))
        graph = build_cylinder(spec)
        for line in graph.dump_jsonl():
            print(line)
        return 0

    if args.kind == "env":
        cfg = json.loads(args.config.read_text())
        spec = CylinderSpec.from_json(cfg["spec"])
        dist = DistributionSpec.from_json(cfg["dist"])
        header = write_field_file(args.out_file or Path("field.bin"), spec,
                                  dist, int(cfg.get("seed", 0)),
                                  int(cfg.get("replicate", 0)))
        print(json.dumps(header, sort_keys=True))
        return 0

    if args.kind == "flow" and args.action == "solve":
        from . import flow as F
        spec, caps, header = read_field_file(args.net)
        graph = build_cylinder(spec)
        res = F.phi(graph, caps)
        print(json.dumps({"value": res.value,
                          "cut_edge_ids": list(res.cut.edge_ids)},
                         sort_keys=True))
        return 0

    # config-driven experiment kinds
    obj = json.loads(args.config.read_text()) if args.config else {}
    obj.setdefault("kind", _KIND_MAP[args.kind])
    if obj["kind"] != _KIND_MAP[args.kind]:
        raise ConfigError("config kind %r does not match CLI kind %r"
                          % (obj["kind"], args.kind))
    if args.seed is not None:
        obj["seed"] = args.seed
    if args.threads is not None:
        obj["threads"] = args.threads
    if args.out is not None:
        obj["out"] = str(args.out)
    payload = obj.setdefault("payload", {})
    if args.glue_kind:
        payload["glue"] = args.glue_kind
    if args.reps is not None:
        payload["reps"] = args.reps
    config = ExperimentConfig.from_json(obj)
    manifest = run(config)
    print(json.dumps(manifest["summary"], sort_keys=True))
    ok = all(bool(manifest["summary"][f]) for f in _ASSERT_FLAGS
             if f in manifest["summary"])
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())

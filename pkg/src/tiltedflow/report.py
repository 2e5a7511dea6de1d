"""Human-readable summaries and figures from result directories.

Reads the manifest plus the JSON-lines results a run produced, prints
aligned tables (censored rate entries rendered as ">= bound"), writes
plot-ready CSV next to them, and renders matplotlib figures to PNG files
alongside the delimited output.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


class MissingManifest(FileNotFoundError):
    pass


def _load_jsonl(path: Path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def report(result_dir, fmt_scale: bool = True) -> str:
    """Summarize a result directory; returns the rendered text."""
    out = Path(result_dir)
    manifest_path = out / "manifest.json"
    if not manifest_path.exists():
        raise MissingManifest("no manifest.json in %s" % out)
    manifest = json.loads(manifest_path.read_text())
    kind = manifest["kind"]
    scale = manifest.get("fixed_point_scale", 1)
    lines = ["run %s  kind=%s  code=%s" % (manifest["config_hash"], kind,
                                           manifest.get("code_version"))]
    renderer = {
        "nu": _report_nu,
        "eta": _report_eta,
        "rate": _report_rate,
        "dual-check": _report_dual,
        "glue-check": _report_glue,
        "algebra-check": _report_algebra,
    }.get(kind)
    if renderer is not None:
        lines.extend(renderer(out, manifest, scale))
    else:
        lines.append("summary: %s" % json.dumps(manifest.get("summary", {}),
                                                sort_keys=True))
    text = "\n".join(lines)
    (out / "report.txt").write_text(text + "\n")
    return text


def _report_nu(out: Path, manifest, scale):
    rows = _load_jsonl(out / "nu.jsonl")
    lines = ["%8s %6s %10s %10s" % ("dir", "n", "nu_hat", "stderr")]
    fig, ax = plt.subplots(figsize=(6, 4))
    for est in rows:
        p, q = est["direction"]
        for n, m, s in zip(est["n_grid"], est["means"], est["stderrs"]):
            lines.append("%8s %6d %10.5f %10.5f" % ("(%d,%d)" % (p, q), n, m, s))
        ang = math.atan2(q, p)
        ax.errorbar([ang], [est["nu_hat"]], yerr=[est["stderrs"][-1]],
                    fmt="o", capsize=3)
    ax.set_xlabel("angle")
    ax.set_ylabel("nu_hat")
    ax.set_title("flow constant per direction")
    fig.savefig(out / "nu.png", dpi=120, bbox_inches="tight")
    plt.close(fig)
    lines.append("figure: nu.png")
    return lines


def _report_eta(out: Path, manifest, scale):
    row = _load_jsonl(out / "eta.jsonl")[0]
    k = abs(row["eta_hat"] - row["formula"]) / max(row["combined_stderr"], 1e-300)
    lines = [
        "eta_hat    = %.5f +- %.5f" % (row["eta_hat"], row["eta_stderr"]),
        "formula    = %.5f +- %.5f  (argmin tilt %s)" %
        (row["formula"], row["formula_stderr"], tuple(row["argmin_tilt"])),
        "verdict: eta_hat within %.2f stderr of the window-infimum formula%s"
        % (k, "" if row["within_3se"] else "  [FAILS 3-sigma]"),
    ]
    grid = _load_jsonl(out / "eta.jsonl")
    fig, ax = plt.subplots(figsize=(6, 4))
    csv_rows = (out / "eta.csv").read_text().splitlines()[1:]
    angs, vals, errs = [], [], []
    for line in csv_rows:
        f = line.split(",")
        angs.append(math.atan2(int(f[1]), int(f[0])))
        vals.append(float(f[6]))
        errs.append(float(f[8]))
    ax.errorbar(angs, vals, yerr=errs, fmt="o", capsize=3, label="nu/cos")
    ax.axhline(row["eta_hat"], color="k", ls="--", label="eta_hat")
    ax.legend()
    ax.set_xlabel("tilt angle")
    ax.set_ylabel("nu/cos(angle-theta)")
    fig.savefig(out / "eta.png", dpi=120, bbox_inches="tight")
    plt.close(fig)
    lines.append("figure: eta.png")
    return lines


def _report_rate(out: Path, manifest, scale):
    table = _load_jsonl(out / "rate.jsonl")[0]
    lines = ["%8s %6s %8s %8s %12s" % ("lambda", "n", "hits", "reps", "rate")]
    for r in table["rows"]:
        val = (">= %.5f" % r["rate"]) if r["censored"] else "%.5f" % r["rate"]
        lines.append("%8.4f %6d %8d %8d %12s"
                     % (r["lam"], r["n"], r["hits"], r["R"], val))
    fig, ax = plt.subplots(figsize=(6, 4))
    for n in sorted({r["n"] for r in table["rows"]}):
        sub = [r for r in table["rows"] if r["n"] == n]
        xs = [r["lam"] for r in sub if not r["censored"]]
        ys = [r["rate"] for r in sub if not r["censored"]]
        cx = [r["lam"] for r in sub if r["censored"]]
        cy = [r["rate"] for r in sub if r["censored"]]
        ax.plot(xs, ys, "o-", label="n=%d" % n)
        if cx:
            ax.plot(cx, cy, "^", mfc="none", label="n=%d censored (bound)" % n)
    ax.set_xlabel("lambda")
    ax.set_ylabel("-log P / (n l)")
    ax.legend()
    fig.savefig(out / "rate.png", dpi=120, bbox_inches="tight")
    plt.close(fig)
    lines.append("figure: rate.png")
    return lines


def _report_dual(out: Path, manifest, scale):
    rows = _load_jsonl(out / "dual_check.jsonl")
    eq = sum(1 for r in rows if r["equal"] and r["dual_equal"])
    return ["duality: %d/%d replicates equal (family size %d)"
            % (eq, len(rows), rows[0]["family_size"] if rows else 0)]


def _report_glue(out: Path, manifest, scale):
    rows = _load_jsonl(out / "glue_check.jsonl")
    ok = sum(1 for r in rows if r["holds"] and r["structural"])
    lines = ["gluing (%s): %d/%d inequalities hold (numeric and structural)"
             % (rows[0]["kind"] if rows else "?", ok, len(rows))]
    slacks = [r["slack"] / scale for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(slacks, bins=20)
    ax.set_xlabel("slack (rhs - lhs)")
    ax.set_ylabel("count")
    fig.savefig(out / "glue.png", dpi=120, bbox_inches="tight")
    plt.close(fig)
    lines.append("figure: glue.png")
    return lines


def _report_algebra(out: Path, manifest, scale):
    rows = _load_jsonl(out / "algebra.jsonl")
    lines = []
    for r in rows:
        lines.append("profile %-10s eta=%.4f delta=%.4f monotone=%s strict=%s "
                     "subadd_failures=%d"
                     % (r["profile"], r["eta"], r["delta_theta_h"],
                        r["monotone"], r["strictly_decreasing"],
                        r["subadditive_failures"]))
    return lines

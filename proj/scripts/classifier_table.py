#!/usr/bin/env python3
"""Collect a vesselmark run into one CSV row per (family, vessel, scale factor).

Three vessel types times four smoothing factors, once for the high-tortuosity
maps and once for the low-density (dropout) maps: 24 rows with the default
factors.

Classification metrics are not produced by vesselmark. If a metrics file is
given it is a JSON object keyed by map stem, e.g.

    {"artery_tortuosity_f0.02": {"bal_acc": [0.81, 0.86], "spec": [...],
                                 "sens": [...], "auc": [...]}, ...}

with one value per fold; mean and sample standard deviation are reported.
Missing entries leave the metric columns empty. Nothing here compares the
numbers against reference values.

usage: classifier_table.py RUN_DIR [--metrics metrics.json] [--out classifier_table.csv]
"""

import argparse
import csv
import json
import statistics
import sys
from pathlib import Path

VESSELS = ("artery", "vein", "capillary")
FAMILIES = (("tortuosity", "tortuosity"), ("dropout", "density"))
METRICS = ("bal_acc", "spec", "sens", "auc")


def factor_label(f):
    # matches the %g formatting used in output file names
    return f"{f:g}"


def summarize(values):
    if not values:
        return "", ""
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return f"{mean:.4f}", f"{std:.4f}"


def build_rows(manifest, metrics):
    factors = manifest["config"]["scale_factors"]
    ok_eyes = [e for e in manifest["eyes"] if e["status"] == "ok"]
    rows = []
    for family, table_family in FAMILIES:
        for vessel in VESSELS:
            for f in factors:
                stem = f"{vessel}_{family}_f{factor_label(f)}"
                fused = sum(
                    1 for e in ok_eyes for m in e["maps"] if m["fused"].endswith("/" + stem + ".png")
                )
                row = {
                    "family": table_family,
                    "vessel": vessel,
                    "factor": factor_label(f),
                    "map": stem,
                    "eyes": len(ok_eyes),
                    "fused_images": fused,
                }
                entry = metrics.get(stem, {})
                for name in METRICS:
                    row[f"{name}_mean"], row[f"{name}_std"] = summarize(entry.get(name, []))
                rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run_dir", type=Path, help="output root of `vesselmark run` (holds manifest.json)")
    ap.add_argument("--metrics", type=Path, help="per-map fold metrics (JSON)")
    ap.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    args = ap.parse_args(argv)

    manifest = json.loads((args.run_dir / "manifest.json").read_text())
    metrics = json.loads(args.metrics.read_text()) if args.metrics else {}
    rows = build_rows(manifest, metrics)

    fields = ["family", "vessel", "factor", "map", "eyes", "fused_images"]
    fields += [f"{m}_{s}" for m in METRICS for s in ("mean", "std")]
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            out.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Recompute summary.json statistics from steps.csv in a single pass."""

import csv
import json
import math
import sys
from pathlib import Path


def quantile(xs, q):
    xs = sorted(xs)
    pos = q * (len(xs) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (pos - lo) * (xs[hi] - xs[lo])


def main(run_dir):
    run_dir = Path(run_dir)
    summary = json.loads((run_dir / "summary.json").read_text())
    with open(run_dir / "steps.csv", newline="") as f:
        meta = f.readline()
        reader = csv.reader(f)
        header = next(reader)
        dist_cols = [i for i, h in enumerate(header) if h.startswith("d_")]
        ospa_cols = [i for i, h in enumerate(header) if h.endswith("_ospa")]
        card_cols = [i for i, h in enumerate(header) if h.endswith("_cardinality")]
        lo, total, count, rows = math.inf, 0.0, 0, 0
        card_total, card_count, last_t = 0.0, 0, -math.inf
        ospa = []
        for row in reader:
            t = float(row[0])
            assert t > last_t, "rows not time ordered"
            last_t = t
            rows += 1
            for i in dist_cols:
                d = float(row[i])
                lo = min(lo, d)
                total += d
                count += 1
            if t >= summary["convergence_time"] - 1e-9:
                ospa.extend(float(row[i]) for i in ospa_cols)
            for i in card_cols:
                card_total += float(row[i])
                card_count += 1

    assert f"config_hash={summary['config_hash']}" in meta, meta
    assert f"seed={summary['seed']}" in meta, meta
    checks = {
        "steps": (rows, summary["steps"]),
        "min_distance": (lo, summary["min_distance"]),
        "mean_distance": (total / count, summary["mean_distance"]),
        "ospa_median": (quantile(ospa, 0.5), summary["ospa_median"]),
        "ospa_p90": (quantile(ospa, 0.9), summary["ospa_p90"]),
        "mean_cardinality": (card_total / card_count, summary["mean_cardinality"]),
    }
    ok = True
    for name, (mine, theirs) in checks.items():
        good = abs(mine - theirs) <= 1e-9
        ok &= good
        print(f"{name}: csv={mine!r} summary={theirs!r} {'ok' if good else 'MISMATCH'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1]))

#!/usr/bin/env python3
"""Recompute a sweep's summary.csv from its trace CSVs and compare.

Usage: recompute_summary.py SWEEP_DIR

Reads q_tolerance_db from SWEEP_DIR/sweep.conf, rebuilds best_q_db,
epochs_saved_pct and data_saved_pct for every row from the
row<id>_seed<s>_{wo_tl,tl<k>}.csv traces, and checks them against
summary.csv for exact equality. Exits 0 when every row matches.
"""

import csv
import math
import re
import sys
from collections import defaultdict
from pathlib import Path

TRACE = re.compile(r"^row(.+?)_seed(\d+)_(wo_nn|snn|wo_tl|tl\d+)\.csv$")


def read_conf(path):
    conf = {}
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if "=" in line:
            k, v = line.split("=", 1)
            conf[k.strip()] = v.strip()
    return conf


def effective_q(row):
    if row["q_db"] != "NA":
        return float(row["q_db"])
    return math.inf if float(row["ber"]) == 0.0 else -math.inf


def read_trace(path):
    with path.open(newline="") as f:
        rows = list(csv.DictReader(f))
    fraction = float(rows[0]["fraction"]) if rows else 1.0
    return fraction, [(int(r["epoch"]), effective_q(r)) for r in rows]


def epochs_to(trace, threshold):
    for epoch, q in trace:
        if q >= threshold:
            return max(epoch, 1)
    return None


def median_ranked(values, missing):
    if not values:
        return None
    v = sorted(missing if x is None else x for x in values)
    n = len(v)
    m = v[n // 2] if n % 2 == 1 else (v[n // 2 - 1] + v[n // 2]) / 2.0
    return m if math.isfinite(m) else None


def seed_values(wo_tl, tls, tol):
    best = max(q for _, q in wo_tl)
    threshold = best - tol
    e_wo = epochs_to(wo_tl, threshold)
    full_fraction, full_trace = max(tls, key=lambda t: t[0])
    e_full = epochs_to(full_trace, threshold)
    epochs_saved = None if e_full is None else (1.0 - e_full / e_wo) * 100.0
    reaching = [f for f, t in tls if epochs_to(t, threshold) is not None]
    data_saved = None if not reaching else (1.0 - min(reaching)) * 100.0
    return max(q for _, q in full_trace), epochs_saved, data_saved


def parse_cell(s):
    return None if s == "NA" else float(s)


def main(argv):
    if len(argv) != 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    root = Path(argv[1])
    tol = float(read_conf(root / "sweep.conf")["q_tolerance_db"])

    traces = defaultdict(lambda: defaultdict(dict))
    for p in root.iterdir():
        m = TRACE.match(p.name)
        if m:
            row, seed, kind = m.group(1), int(m.group(2)), m.group(3)
            traces[row][seed][kind] = read_trace(p)

    ok = True
    with (root / "summary.csv").open(newline="") as f:
        for rec in csv.DictReader(f):
            row = rec["row"]
            if rec["best_q_db"] == "FAILED":
                if not (root / f"row{row}.error.txt").exists():
                    print(f"row {row}: FAILED without error file")
                    ok = False
                continue
            per_seed = []
            for seed in sorted(traces[row]):
                kinds = traces[row][seed]
                tls = [kinds[k] for k in sorted(kinds) if k.startswith("tl")]
                per_seed.append(seed_values(kinds["wo_tl"][1], tls, tol))
            got = (
                median_ranked([s[0] for s in per_seed], -math.inf),
                median_ranked([s[1] for s in per_seed], -math.inf),
                median_ranked([s[2] for s in per_seed], -math.inf),
            )
            want = tuple(parse_cell(rec[k]) for k in ("best_q_db", "epochs_saved_pct", "data_saved_pct"))
            status = "ok" if got == want else "MISMATCH"
            ok &= got == want
            print(f"row {row}: {status} recomputed={got} summary={want}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))

#!/usr/bin/env python3
"""Plot a result CSV produced by `dopmimo run` (rates linear, SER on a
log axis), one line per (receiver, metric).

Usage: python scripts/plot_results.py results/fig3.csv [-o fig3.png]
"""

import argparse
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from dopmimo import read_csv_rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("-o", "--output", default=None)
    args = ap.parse_args()

    series = defaultdict(list)
    for row in read_csv_rows(args.csv):
        series[(row.receiver.value, row.metric.value)].append(
            (row.sweep_value, row.value, row.ci_halfwidth))

    fig, ax = plt.subplots(figsize=(6, 4))
    log_y = any("ser" in m for _, m in series)
    for (receiver, metric), pts in sorted(series.items()):
        pts.sort()
        x, y, ci = zip(*pts)
        style = "--o" if metric.endswith("_mc") else "-"
        ax.plot(x, y, style, label=f"{receiver} {metric}", markersize=4)
        if any(c is not None for c in ci):
            err = [c or 0.0 for c in ci]
            ax.errorbar(x, y, yerr=err, fmt="none", alpha=0.4)
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel("sweep value")
    ax.set_ylabel("SER" if log_y else "normalized rate (bit/s/Hz)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    out = args.output or args.csv.rsplit(".", 1)[0] + ".png"
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()

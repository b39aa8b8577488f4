#!/usr/bin/env python3
"""Run every built-in experiment preset and write one CSV per figure id.

Usage: python scripts/run_all_presets.py [--out-dir results] [--threads N]
"""

import argparse
import pathlib
import time

from dopmimo import emit_csv, parse_spec, preset_names, preset_spec, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--only", nargs="*", help="subset of figure ids")
    args = ap.parse_args()

    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for fid in args.only or preset_names():
        spec = parse_spec(preset_spec(fid))
        t0 = time.time()
        rows = run_experiment(spec, threads=args.threads)
        path = out_dir / f"{fid}.csv"
        emit_csv(rows, path)
        print(f"{fid}: {len(rows)} rows -> {path}  ({time.time() - t0:.1f} s)")


if __name__ == "__main__":
    main()

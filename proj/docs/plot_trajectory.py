#!/usr/bin/env python3
"""Quick look at svgph output. Not part of the build; needs matplotlib.

usage: plot_trajectory.py <out-dir> [more out-dirs...]
"""
import csv
import pathlib
import sys

import matplotlib.pyplot as plt


def load(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    cols = {k: [float(r[k]) if r[k] else float("nan") for r in rows] for k in rows[0]}
    return cols


def main(dirs):
    fig, (ax_x, ax_h) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    for d in map(pathlib.Path, dirs):
        for csv_path in sorted(d.glob("trajectory_*.csv")):
            label = f"{d.name}/{csv_path.stem.removeprefix('trajectory_')}"
            c = load(csv_path)
            norm = [sum(c[f"x{i}"][k] ** 2 for i in range(1, 5)) ** 0.5 for k in range(len(c["t"]))]
            ax_x.plot(c["t"], norm, label=label)
            h0 = c["H"][0]
            ax_h.semilogy(c["t"], [abs(h - h0) + 1e-17 for h in c["H"]], label=label)
    ax_x.set_ylabel("|(x1..x4)|")
    ax_h.set_ylabel("|H - H(0)|")
    ax_h.set_xlabel("t")
    ax_x.legend(fontsize="small")
    fig.tight_layout()
    plt.show()


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    main(sys.argv[1:])

"""Redraw the simulation figures from summary.csv and khat.csv.

Usage: python plot_simulation.py [DIR]   (default: the directory of this file)
Needs matplotlib. Lines starting with '#' in the CSVs are provenance.
"""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(row for row in fh if not row.startswith("#")))


def main():
    here = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
    summary = read(os.path.join(here, "summary.csv"))
    sizes = sorted({int(r["n"]) for r in summary})
    fig, axes = plt.subplots(1, len(sizes), figsize=(5 * len(sizes), 4), squeeze=False)
    for ax, n in zip(axes[0], sizes):
        rows = [r for r in summary if int(r["n"]) == n]
        stats = [
            {
                "label": r["k"],
                "whislo": float(r["min"]),
                "q1": float(r["q1"]),
                "med": float(r["median"]),
                "q3": float(r["q3"]),
                "whishi": float(r["max"]),
                "mean": float(r["mean"]),
                "fliers": [],
            }
            for r in rows
        ]
        ax.bxp(stats, showmeans=True)
        ax.set_title(f"{rows[0]['setting']}, n = {n}")
        ax.set_xlabel("k")
        ax.set_ylabel("clipped estimate")
        ax.tick_params(axis="x", labelrotation=90)
    fig.tight_layout()
    fig.savefig(os.path.join(here, "boxplots.png"), dpi=120)

    khat = [r for r in read(os.path.join(here, "khat.csv")) if r["k_hat"]]
    if khat:
        fig, ax = plt.subplots(figsize=(5, 4))
        for n in sizes:
            pts = [r for r in khat if int(r["n"]) == n]
            ax.scatter(
                [float(r["k_hat"]) for r in pts],
                [float(r["clipped"]) for r in pts],
                label=f"n = {n}",
                s=12,
            )
        ax.set_xlabel("selected k")
        ax.set_ylabel("clipped estimate at selected k")
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(here, "khat.png"), dpi=120)


if __name__ == "__main__":
    main()

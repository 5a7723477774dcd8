"""Side-by-side comparison of two benchmark runs: speedups, plots, CSV."""

from __future__ import annotations

import csv
import os

from ..errors import WorkloadMismatch
from .report import load_report


def compare_reports(a_dir: str, b_dir: str, out_dir: str) -> dict:
    """Per-cell speedup of run B relative to run A (speedup = mean_a/mean_b).

    Emits comparison.csv plus two SVG plot families: latency over targets
    at each fixed source count, and latency over sources at each fixed
    target count.
    """
    a = load_report(a_dir)
    b = load_report(b_dir)
    if a["workload_hash"] != b["workload_hash"]:
        raise WorkloadMismatch(
            f"workload hashes differ: {a['workload_hash'][:12]} vs {b['workload_hash'][:12]}"
        )
    os.makedirs(out_dir, exist_ok=True)

    cells_a = {(c["sources"], c["targets"]): c for c in a["cells"]}
    cells_b = {(c["sources"], c["targets"]): c for c in b["cells"]}
    rows = []
    for key in sorted(cells_a):
        ca, cb = cells_a[key], cells_b.get(key)
        if cb is None or "mean_ms" not in ca or "mean_ms" not in cb:
            continue
        rows.append(
            {
                "sources": key[0],
                "targets": key[1],
                f"mean_ms_{a['mode']}": ca["mean_ms"],
                f"mean_ms_{b['mode']}": cb["mean_ms"],
                "speedup": ca["mean_ms"] / cb["mean_ms"],
            }
        )
    csv_path = os.path.join(out_dir, "comparison.csv")
    if rows:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    _plot_families(a, b, out_dir)
    return {
        "a": {"dir": a_dir, "mode": a["mode"], "replicas": a["replicas"]},
        "b": {"dir": b_dir, "mode": b["mode"], "replicas": b["replicas"]},
        "cells": rows,
        "csv": csv_path,
    }


def _label(report: dict) -> str:
    if report["mode"] == "monolith":
        return "monolith"
    return f"{report['mode']} x{report['replicas']}"


def _plot_families(a: dict, b: dict, out_dir: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plots_dir = os.path.join(out_dir, "plots")
    os.makedirs(plots_dir, exist_ok=True)

    def series(report, fixed_key, fixed_value, x_key):
        pts = [
            (c[x_key], c["mean_ms"] / 1000.0)
            for c in report["cells"]
            if c[fixed_key] == fixed_value and "mean_ms" in c
        ]
        pts.sort()
        return [p[0] for p in pts], [p[1] for p in pts]

    def family(fixed_key, x_key, stem):
        values = sorted({c[fixed_key] for c in a["cells"]})
        for value in values:
            fig, ax = plt.subplots(figsize=(6, 4))
            for report, color in ((a, "tab:blue"), (b, "tab:orange")):
                xs, ys = series(report, fixed_key, value, x_key)
                if xs:
                    ax.plot(xs, ys, marker="o", color=color, label=_label(report))
            ax.set_xlabel(x_key)
            ax.set_ylabel("mean processing time [s]")
            noun = "source" if fixed_key == "sources" else "target"
            plural = "s" if value != 1 else ""
            ax.set_title(f"{value} {noun}{plural}, altering {x_key}")
            ax.set_xscale("log", base=2)
            ax.grid(True, alpha=0.3)
            ax.legend()
            fig.tight_layout()
            fig.savefig(os.path.join(plots_dir, f"{stem}_{value}.svg"))
            plt.close(fig)

    family("sources", "targets", "sources")
    family("targets", "sources", "targets")

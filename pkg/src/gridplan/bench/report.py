"""Aggregation of raw benchmark samples into per-cell reports."""

from __future__ import annotations

import json
import os

import numpy as np
import psutil

from .runner import BenchSample, SUCCESS


def _cell_stats(latencies: list[float]) -> dict:
    arr = np.array(latencies)
    return {
        "mean_ms": float(arr.mean()),
        "median_ms": float(np.median(arr)),
        "p95_ms": float(np.percentile(arr, 95)),
    }


def host_descriptor() -> dict:
    return {
        "cpu_count": os.cpu_count(),
        "memory_gb": round(psutil.virtual_memory().total / 2**30, 2),
    }


def build_report(
    samples: list[BenchSample], mode: str, replicas: int, workload_hash: str
) -> dict:
    cells: dict[tuple[int, int], list[BenchSample]] = {}
    for s in samples:
        cells.setdefault((s.sources, s.targets), []).append(s)
    cell_rows = []
    for (src, tgt) in sorted(cells):
        group = cells[(src, tgt)]
        ok = [s.latency_ms for s in group if s.outcome == SUCCESS]
        row = {
            "sources": src,
            "targets": tgt,
            "samples": len(group),
            "successes": len(ok),
            "success_rate": len(ok) / len(group),
        }
        if ok:
            row.update(_cell_stats(ok))
        cell_rows.append(row)
    return {
        "mode": mode,
        "replicas": replicas,
        "workload_hash": workload_hash,
        "host": host_descriptor(),
        "cells": cell_rows,
    }


def write_report(report: dict, out_dir: str) -> str:
    path = os.path.join(out_dir, "report.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)
    return path


def load_report(out_dir: str) -> dict:
    with open(os.path.join(out_dir, "report.json"), "r", encoding="utf-8") as fh:
        return json.load(fh)

"""Figure rendering for the delimited outputs: bench scaling and solver traces.

Figures are written next to (or wherever requested relative to) the CSV they
visualize; rendering always uses the Agg backend so the CLI works headless.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def render_bench_figure(csv_path, out_path) -> None:
    """Log-log encode-time scaling with a linear-in-pixels guide line."""
    rows = _read_csv(csv_path)
    if not rows:
        raise ValueError(f"no bench rows in {csv_path}")
    pixels = [int(r["pixels"]) for r in rows]
    mean_ms = [float(r["mean_ms"]) for r in rows]
    std_ms = [float(r["stddev_ms"]) for r in rows]
    labels = [r["resolution"] for r in rows]

    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.errorbar(pixels, mean_ms, yerr=std_ms, marker="o", capsize=3, label="encode")
    guide = [mean_ms[0] * p / pixels[0] for p in pixels]
    ax.plot(pixels, guide, "--", color="gray", label="linear in pixels")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("pixels")
    ax.set_ylabel("encode time (ms)")
    ax.set_title("Encode-time scaling")
    for p, t, lab in zip(pixels, mean_ms, labels):
        ax.annotate(lab, (p, t), textcoords="offset points", xytext=(4, 4), fontsize=7)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_trace_figure(csv_path, out_path) -> None:
    """Semilog convergence curves: residual and change per iteration."""
    rows = _read_csv(csv_path)
    if not rows:
        raise ValueError(f"no trace rows in {csv_path}")
    iters = [int(r["iter"]) for r in rows]
    residual = [float(r["residual_l2"]) for r in rows]
    change = [float(r["change_l2"]) for r in rows]

    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.semilogy(iters, residual, marker=".", label="residual L2")
    ax.semilogy(iters, change, marker=".", label="change L2")
    ax.set_xlabel("iteration")
    ax.set_ylabel("norm")
    ax.set_title("Solver convergence")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_report(out_dir, bench_csv=None, trace_csv=None) -> list[Path]:
    """Render every figure a report covers; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if bench_csv is not None:
        target = out / "bench_scaling.png"
        render_bench_figure(bench_csv, target)
        written.append(target)
    if trace_csv is not None:
        target = out / "trace_convergence.png"
        render_trace_figure(trace_csv, target)
        written.append(target)
    return written

"""Report figures rendered next to the delimited metrics output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .engine import MetricsReport  # noqa: E402
from .trace import TraceRow, iter_ticks  # noqa: E402


def bench_figure(reports: dict[int, MetricsReport], path: str | Path) -> None:
    """Mean reach time per robot count, with the per-trial scatter behind it."""
    fig, ax = plt.subplots(figsize=(6, 4))
    counts = sorted(reports)
    means = [reports[n].mean_reach_time for n in counts]
    for i, n in enumerate(counts):
        times = reports[n].reach_times
        ax.scatter(np.full(len(times), i) + np.random.default_rng(0).uniform(-0.12, 0.12, len(times)),
                   times, s=6, alpha=0.3, color="tab:gray", zorder=1)
    ax.bar(range(len(counts)), means, width=0.5, color="tab:blue", alpha=0.8, zorder=2)
    for i, m in enumerate(means):
        if m is not None:
            ax.text(i, m + 0.05, f"{m:.2f} s", ha="center")
    ax.set_xticks(range(len(counts)))
    ax.set_xticklabels([f"{n} robot{'s' if n > 1 else ''}" for n in counts])
    ax.set_ylabel("target reach time [s]")
    ax.set_title("Randomized-target reach time")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def trajectory_figure(rows: list[TraceRow], bounds: tuple[float, float],
                      path: str | Path) -> None:
    """Top-down robot paths over the mat."""
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    by_robot: dict[int, list[TraceRow]] = {}
    for r in rows:
        by_robot.setdefault(r.robot, []).append(r)
    cmap = plt.get_cmap("tab10")
    for rid, rrows in sorted(by_robot.items()):
        xs = [r.x for r in rrows]
        ys = [r.y for r in rrows]
        ax.plot(xs, ys, lw=0.8, color=cmap(rid % 10), label=f"robot {rid}")
        ax.scatter([xs[-1]], [ys[-1]], marker="s", s=60, color=cmap(rid % 10),
                   edgecolor="k", zorder=3)
    ax.set_xlim(0, bounds[0])
    ax.set_ylim(0, bounds[1])
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("Robot trajectories")
    ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def separation_figure(rows: list[TraceRow], min_allowed: float, path: str | Path) -> None:
    """Minimum pairwise robot separation over time, against the safety floor."""
    times = []
    mins = []
    for _tick, rrows in iter_ticks(rows):
        if len(rrows) < 2:
            continue
        pts = np.array([[r.x, r.y] for r in rrows])
        diff = pts[:, None, :] - pts[None, :, :]
        d = np.hypot(diff[..., 0], diff[..., 1])
        iu = np.triu_indices(len(rrows), k=1)
        times.append(rrows[0].time)
        mins.append(float(d[iu].min()))
    fig, ax = plt.subplots(figsize=(6, 3.2))
    if times:
        ax.plot(times, mins, lw=0.9)
    ax.axhline(min_allowed, color="tab:red", ls="--", lw=1, label=f"floor {min_allowed:.3f} m")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("min pairwise distance [m]")
    ax.set_title("Separation")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def height_figure(rows: list[TraceRow], path: str | Path) -> None:
    """Rendered height and tilt per robot over time."""
    by_robot: dict[int, list[TraceRow]] = {}
    for r in rows:
        by_robot.setdefault(r.robot, []).append(r)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 4.6), sharex=True)
    cmap = plt.get_cmap("tab10")
    for rid, rrows in sorted(by_robot.items()):
        ts = [r.time for r in rrows]
        ax1.plot(ts, [r.height for r in rrows], lw=0.8, color=cmap(rid % 10))
        ax2.plot(ts, [r.tilt for r in rrows], lw=0.8, color=cmap(rid % 10))
    ax1.set_ylabel("height [m]")
    ax2.set_ylabel("tilt [deg]")
    ax2.set_xlabel("time [s]")
    ax1.set_title("Surface rendering")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)

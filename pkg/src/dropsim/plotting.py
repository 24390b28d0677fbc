"""Matplotlib renderings of run outputs.

Figures are 600x400 px, the window size Xgraph is usually opened with.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

FIGSIZE = (6, 4)
DPI = 100


def plot_throughput(samples: dict, path, drop_times: dict | None = None, title: str | None = None):
    """Per-flow throughput (Mb/s) against time, with drop instants as ticks."""
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for fid in sorted(samples):
        series = samples[fid]
        ax.plot([s.t for s in series], [s.bits_per_second / 1e6 for s in series],
                "-", lw=1.2, label=f"flow{fid}")
    if drop_times:
        ymax = ax.get_ylim()[1]
        for fid in sorted(drop_times):
            ts = drop_times[fid]
            if ts:
                ax.plot(ts, [ymax * 0.97] * len(ts), "|", ms=8, label=f"drops flow{fid}")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("throughput (Mb/s)")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_drops(records, path, bin_width: float = 0.1, title: str | None = None):
    """Histogram of drop events per node over time, from trace records."""
    by_node: dict[int, list[float]] = {}
    t_end = 0.0
    for r in records:
        t_end = max(t_end, r.time)
        if r.event == "d":
            by_node.setdefault(r.src_node, []).append(r.time)
    nbins = max(1, int(round(t_end / bin_width)) + 1)
    edges = [i * bin_width for i in range(nbins + 1)]
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for node in sorted(by_node):
        ax.hist(by_node[node], bins=edges, histtype="step", label=f"n{node}")
    ax.set_xlabel("time (s)")
    ax.set_ylabel(f"drops per {bin_width:g} s")
    ax.set_title(title or "queue drops")
    if by_node:
        ax.legend(fontsize=7)
    else:
        ax.text(0.5, 0.5, "no drops", transform=ax.transAxes, ha="center")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path

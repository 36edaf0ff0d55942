"""Delimited stats output and the figure renderer."""

from __future__ import annotations

import csv
import io


def stats_rows(stats: dict) -> list[tuple[str, object]]:
    rows: list[tuple[str, object]] = []
    for level, count in enumerate(stats["nodes_by_level"]):
        rows.append((f"nodes_level_{level}", count))
    for key in ("total_nodes", "arena_bytes", "mapped_bytes",
                "usage_total", "lookups", "rules", "articles"):
        if key in stats:
            rows.append((key, stats[key]))
    return rows


def stats_csv(stats: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(("metric", "value"))
    writer.writerows(stats_rows(stats))
    return buf.getvalue()


def plot_stats(stats: dict, path: str) -> str:
    """Bar chart of node counts per level, written as an image file."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    counts = stats["nodes_by_level"]
    labels = ["characters\n& numbers", "words", "sentences\n& schemes",
              "rules"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.bar(range(4), counts, color="#4878a8")
    ax1.set_xticks(range(4), labels, fontsize=8)
    ax1.set_ylabel("relations")
    ax1.set_title("relations per level")
    sizes = [("used", stats["arena_bytes"]),
             ("mapped", stats["mapped_bytes"])]
    ax2.bar([s[0] for s in sizes], [s[1] / 1024 for s in sizes],
            color="#a85448")
    ax2.set_ylabel("KiB")
    ax2.set_title("arena size")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path

"""Figure rendering for the report commands (PNG files, headless backend)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 110,
}


def bar_histogram(buckets, path, title="", xlabel="", ylabel="cases"):
    """Bar chart of an ordered {label: count} mapping."""
    labels = list(buckets)
    counts = [buckets[k] for k in labels]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(max(5.0, 0.32 * len(labels)), 3.4))
        ax.bar(range(len(labels)), counts, color="#4a6fa5", width=0.8)
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=90 if len(labels) > 10 else 0)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def score_histogram(hist, path, title="similarity scores >= display floor"):
    buckets = {(k if k.endswith("+") else k + "+"): v for k, v in hist["buckets"].items()}
    bar_histogram(buckets, path, title=title, xlabel="score", ylabel="case pairs")


def eval_curve(report, path):
    rows = report["rows"]
    ns = [r["topN"] for r in rows]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.8, 3.2))
        ax.plot(ns, [r["precision"] for r in rows], "o-", label="precision")
        ax.plot(ns, [r["ndcg"] for r in rows], "s--", label="NDCG")
        ax.set_xlabel("topN")
        ax.set_ylim(0, 1.02)
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)

"""Figure rendering for evaluation reports.

Every report-producing CLI path writes its figures next to the delimited
output: per-set QWK bars for `evaluate`, loss/QWK curves for `train`, and
the QWK-versus-fraction curve for `reduce-sweep`. Agg backend only; nothing
here ever opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .scorers import TrainReport


def save_qwk_bars(per_set: dict[int, float], path: str,
                  title: str = "QWK by essay set") -> str:
    fig, ax = plt.subplots(figsize=(7, 4))
    sets = sorted(per_set)
    values = [per_set[s] for s in sets]
    labels = [str(s) for s in sets]
    if len(sets) > 1:
        labels.append("Avg")
        values.append(sum(values) / len(values))
    ax.bar(range(len(values)), values, color="#4878a8")
    ax.set_xticks(range(len(values)), labels)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("Essay set")
    ax.set_ylabel("QWK")
    ax.set_title(title)
    for i, v in enumerate(values):
        ax.text(i, v + 0.02, f"{v:.2f}", ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_training_curves(report: TrainReport, path: str,
                         title: str = "Training") -> str:
    epochs = range(1, len(report.train_loss) + 1)
    fig, (ax_loss, ax_qwk) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax_loss.plot(epochs, report.train_loss, label="train loss")
    ax_loss.plot(epochs, report.dev_loss, label="dev loss")
    ax_loss.set_xlabel("Epoch")
    ax_loss.set_ylabel("Loss")
    ax_loss.legend()
    ax_qwk.plot(epochs, report.dev_qwk, color="#a85448")
    if report.best_epoch:
        ax_qwk.axvline(report.best_epoch, linestyle="--", color="grey",
                       linewidth=0.8)
    ax_qwk.set_xlabel("Epoch")
    ax_qwk.set_ylabel("Dev QWK")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_sweep_curve(points: list[tuple[float, float]], path: str,
                     title: str = "QWK vs training fraction") -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    fractions = [f for f, _ in points]
    qwks = [q for _, q in points]
    ax.plot(fractions, qwks, marker="o", color="#4878a8")
    ax.set_xlabel("Training fraction")
    ax.set_ylabel("Mean test QWK")
    ax.set_ylim(0.0, 1.0)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

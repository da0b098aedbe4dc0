"""Report figures for a pipeline run (PNG, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# keep PNG bytes stable across runs
_SAVE_KW = {"dpi": 100, "metadata": {"Software": None}}

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def plot_spectrum(report, path: Path) -> Path:
    s = np.asarray(report.singular_values)
    energy = np.cumsum(s ** 2) / max((s ** 2).sum(), np.finfo(float).tiny)
    lam = np.asarray(report.eigenvalues)
    idx = np.arange(len(s))
    with plt.rc_context(_RC):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
        colors = ["C0" if i in report.energy_retained else "0.7" for i in idx]
        ax1.bar(idx, lam, color=colors)
        ax1.axhline(1.0, color="C3", lw=1, ls="--", label="eigenvalue = 1")
        ax1.set_xlabel("component")
        ax1.set_ylabel("eigenvalue")
        ax1.legend(frameon=False)
        ax2.plot(idx, energy, marker="o", ms=3)
        ax2.set_ylim(0, 1.02)
        ax2.set_xlabel("component")
        ax2.set_ylabel("cumulative energy")
        fig.tight_layout()
    return _save(fig, path)


def plot_scalars(train, test, path: Path, class_order=None) -> Path:
    """Strip plot of the one-dimensional features per class."""
    labels = class_order or sorted({lab for lab in train.labels if lab is not None})
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 0.5 + 0.45 * len(labels)))
        for row, lab in enumerate(labels):
            for fs, marker, off in ((train, "|", -0.12), (test, "x", 0.12)):
                v = np.asarray(fs.values)[[x == lab for x in fs.labels]]
                ax.scatter(v, np.full(len(v), row + off), marker=marker, s=18,
                           color=f"C{row % 10}", label=None)
        ax.set_yticks(range(len(labels)), labels)
        ax.set_xlabel("scalar feature (train |, test x)")
        ax.invert_yaxis()
        fig.tight_layout()
    return _save(fig, path)


def plot_confusion(report, path: Path) -> Path:
    conf = np.asarray(report.confusion)
    n = len(report.class_order)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(1.2 + 0.7 * n, 1.0 + 0.6 * n))
        ax.imshow(conf, cmap="Blues")
        for i in range(n):
            for j in range(n):
                ax.text(j, i, str(conf[i, j]), ha="center", va="center",
                        color="white" if conf[i, j] > conf.max() / 2 else "black")
        ax.set_xticks(range(n), report.class_order, rotation=45, ha="right")
        ax.set_yticks(range(n), report.class_order)
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
        fig.tight_layout()
    return _save(fig, path)


def write_run_figures(result, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        plot_spectrum(result.spectral, out_dir / "spectrum.png"),
        plot_scalars(result.train_scalars, result.test_scalars, out_dir / "scalars.png",
                     result.evaluation.class_order),
        plot_confusion(result.evaluation, out_dir / "confusion.png"),
    ]

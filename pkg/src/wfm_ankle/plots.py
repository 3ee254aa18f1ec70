"""Figure rendering for the report path; every figure goes straight to a file."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .activation import ActivationCurve, evaluate_activation  # noqa: E402
from .pipeline import EvaluationReport  # noqa: E402

_MODEL_COLOR = "tab:blue"
_REF_COLOR = "tab:red"


def save_torque_figure(path, phase, tau_model, tau_ref=None,
                       curves: dict[str, ActivationCurve] | None = None,
                       torque_unit: str = "", title: str = "") -> Path:
    """Model torque over the gait cycle, with reference torque and the
    activation curves (dashed, right axis) when given."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(phase, tau_model, color=_MODEL_COLOR, lw=2, label="model torque")
    if tau_ref is not None:
        ax.plot(phase, tau_ref, color=_REF_COLOR, lw=2, label="reference torque")
    ax.set_xlabel("gait cycle phase")
    unit = f" [{torque_unit}]" if torque_unit else ""
    ax.set_ylabel(f"ankle torque{unit}")
    ax.grid(True, alpha=0.3)

    if curves:
        ax2 = ax.twinx()
        grid = np.linspace(0.0, 1.0, 201)
        for (name, curve), style in zip(curves.items(), ("--", ":")):
            ax2.plot(grid, evaluate_activation(curve, grid), style, color="gray",
                     lw=1.5, label=f"{name} activation")
        ax2.set_ylabel("activation")
        ax2.set_ylim(bottom=0)
        h1, l1 = ax.get_legend_handles_labels()
        h2, l2 = ax2.get_legend_handles_labels()
        ax.legend(h1 + h2, l1 + l2, fontsize=8, loc="upper left")
    else:
        ax.legend(fontsize=8, loc="upper left")

    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_convergence_figure(path, history) -> Path:
    """Global best objective versus iteration, log scale when it helps."""
    history = np.asarray(history, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    ax.plot(np.arange(len(history)), history, color=_MODEL_COLOR, lw=2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("best objective (mean RMSE)")
    if np.all(history > 0) and history.max() / max(history.min(), 1e-300) > 100:
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_report_figure(path, report: EvaluationReport) -> Path:
    """Per-subject RMSE bars grouped by split, with split means overlaid."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    labels = [f"{r.subject_id}-{r.sex}" for r in report.rows]
    values = [r.rmse for r in report.rows]
    colors = [_MODEL_COLOR if r.split == "train" else _REF_COLOR for r in report.rows]
    x = np.arange(len(labels))
    ax.bar(x, values, color=colors, alpha=0.8)
    ax.axhline(report.train_mean, color=_MODEL_COLOR, ls="--", lw=1.2,
               label=f"train mean {report.train_mean:.2f}")
    ax.axhline(report.test_mean, color=_REF_COLOR, ls="--", lw=1.2,
               label=f"test mean {report.test_mean:.2f}")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(f"RMSE [{report.torque_unit}]")
    ax.legend(fontsize=8)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path

"""Accuracy report emission: JSON, plot-ready CSV, and rendered figures.

The report JSON schema::

    {"overall_acc": <percent>, "macro_acc": <percent>,
     "per_class": [{"class": <int>, "support": <int>, "correct": <int>}, ...]}

Alongside it go a ``<stem>_per_class.csv`` with one ``class,recall`` row
per class and a ``<stem>_per_class.png`` bar chart of the same numbers.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .fusion_engine import AccuracyReport

__all__ = [
    "report_to_json_dict",
    "write_report_json",
    "write_per_class_csv",
    "render_per_class_figure",
    "write_report_outputs",
    "per_class_csv_path",
    "per_class_figure_path",
]


def report_to_json_dict(report: AccuracyReport) -> dict:
    return {
        "overall_acc": report.overall_acc,
        "macro_acc": report.macro_acc,
        "per_class": [
            {"class": s.class_id, "support": s.support, "correct": s.correct}
            for s in report.per_class
        ],
    }


def write_report_json(report: AccuracyReport, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(report_to_json_dict(report), fh, indent=2)
        fh.write("\n")


def write_per_class_csv(report: AccuracyReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "recall"])
        for s in report.per_class:
            writer.writerow([s.class_id, repr(s.recall)])


def render_per_class_figure(report: AccuracyReport, path: str | Path) -> None:
    """Render per-class recall as a bar chart with the macro mean marked."""
    classes = [str(s.class_id) for s in report.per_class]
    recalls = [s.recall for s in report.per_class]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(classes) + 2.0), 3.5))
    ax.bar(classes, recalls, color="#4878a8")
    ax.axhline(report.macro_acc, color="#b0413e", linewidth=1.2, linestyle="--",
               label=f"macro {report.macro_acc:.2f}%")
    ax.set_xlabel("class")
    ax.set_ylabel("recall (%)")
    ax.set_ylim(0.0, 105.0)
    ax.legend(loc="lower right", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def per_class_csv_path(report_path: str | Path) -> Path:
    report_path = Path(report_path)
    return report_path.with_name(report_path.stem + "_per_class.csv")


def per_class_figure_path(report_path: str | Path) -> Path:
    report_path = Path(report_path)
    return report_path.with_name(report_path.stem + "_per_class.png")


def write_report_outputs(report: AccuracyReport, report_path: str | Path) -> list[Path]:
    """Write the report JSON plus its sibling CSV and figure; return paths."""
    report_path = Path(report_path)
    write_report_json(report, report_path)
    csv_path = per_class_csv_path(report_path)
    write_per_class_csv(report, csv_path)
    fig_path = per_class_figure_path(report_path)
    render_per_class_figure(report, fig_path)
    return [report_path, csv_path, fig_path]

"""Rendering of evaluation and annotation-analysis results: aligned
plain-text tables mirroring the benchmark layouts, JSON documents with full
precision, and matplotlib figures written next to them.

Table cells show ratios with one decimal place; the JSON keeps full values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .evaluate import CATEGORY_GROUPS, EvalDocument
from .metrics import EvalReport
from .taxonomy import (
    CATEGORIES,
    AnnotationRecord,
    Distribution,
    distribution,
    fleiss_kappa,
    group_records,
    vote_annotations,
)

MODE_LABELS = {
    "generic": "Generic",
    "actor": "Only Actor",
    "action": "Only Action",
    "actor_action": "Actor + Action",
    "full": "Full phrase",
}
MODE_ORDER = ("generic", "actor", "action", "actor_action", "full")


def fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.1f}"


def _rows_to_text(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [
            cell.rjust(width) for cell, width in zip(row[1:], widths[1:])
        ]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


def render_headline_table(document: EvalDocument) -> str:
    """Precision at the two highlighted thresholds plus both IoU pools."""
    mode = "full" if "full" in document.modes else next(iter(document.modes))
    report = document.modes[mode]
    rows = [
        ["", "Prec", "", "IoU", ""],
        ["", "@0.5", "@0.9", "Overall", "Mean"],
        [
            document.predictor,
            fmt(report.precision_at.get(0.5)),
            fmt(report.precision_at.get(0.9)),
            fmt(report.overall_iou),
            fmt(report.mean_iou),
        ],
    ]
    return _rows_to_text(rows)


def render_category_table(document: EvalDocument) -> str | None:
    """Mean IoU by category presence/absence (+App -App ... layout)."""
    mode = "full" if "full" in document.modes else next(iter(document.modes))
    groups = document.modes[mode].groups
    labels = [sign + display for _, display in CATEGORY_GROUPS for sign in "+-"]
    if not any(label in groups for label in labels):
        return None
    values = [
        fmt(groups[label].mean_iou) if label in groups else "-" for label in labels
    ]
    return _rows_to_text([labels, values])


def _split_cells(report: EvalReport, attr: str) -> list[str]:
    cells = []
    for group in ("trivial", "non_trivial"):
        sub = report.groups.get(group)
        cells.append(fmt(getattr(sub, attr)) if sub else "-")
    cells.append(fmt(getattr(report, attr)))
    return cells


def render_phrase_mode_table(document: EvalDocument) -> str | None:
    """Information-level ablation: one row per phrase mode, overall and mean
    IoU split by difficulty."""
    modes = [m for m in MODE_ORDER if m in document.modes]
    if len(modes) < 2:
        return None
    rows = [
        ["", "Overall IoU", "", "", "Mean IoU", "", ""],
        ["", "Trivial", "Non-Trivial", "All", "Trivial", "Non-Trivial", "All"],
    ]
    for mode in modes:
        report = document.modes[mode]
        rows.append(
            [MODE_LABELS[mode]]
            + _split_cells(report, "overall_iou")
            + _split_cells(report, "mean_iou")
        )
    return _rows_to_text(rows)


def render_difficulty_table(document: EvalDocument) -> str | None:
    mode = "full" if "full" in document.modes else next(iter(document.modes))
    report = document.modes[mode]
    splits = [g for g in ("trivial", "non_trivial") if g in report.groups]
    if not splits:
        return None
    rows = [["", "Overall", "Mean", "J&F", "instances"]]
    for label in splits + ["all"]:
        sub = report if label == "all" else report.groups[label]
        jf = (
            sum(s.jf for s in sub.per_instance.values()) / len(sub.per_instance)
            if sub.per_instance
            else None
        )
        rows.append(
            [label, fmt(sub.overall_iou), fmt(sub.mean_iou), fmt(jf), str(len(sub.per_instance))]
        )
    return _rows_to_text(rows)


def render_eval_text(document: EvalDocument) -> str:
    sections = [
        f"evaluation: predictor={document.predictor} split={document.split}"
        f" re_aggregation={document.re_aggregation} tolerance={document.tolerance}",
        render_headline_table(document),
    ]
    for extra in (
        render_category_table(document),
        render_phrase_mode_table(document),
        render_difficulty_table(document),
    ):
        if extra:
            sections.append(extra)
    for warning in document.warnings:
        sections.append(f"warning: {warning}")
    return "\n\n".join(sections) + "\n"


def save_eval_figures(document: EvalDocument, out_dir) -> list[Path]:
    """Precision curve and per-group mean IoU bars as PNG files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for mode, report in document.modes.items():
        thresholds = sorted(report.precision_at)
        ax.plot(
            thresholds,
            [report.precision_at[k] for k in thresholds],
            marker="o",
            label=MODE_LABELS.get(mode, mode),
        )
    ax.set_xlabel("IoU threshold")
    ax.set_ylabel("precision")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    fig.tight_layout()
    path = out_dir / "precision.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    mode = "full" if "full" in document.modes else next(iter(document.modes))
    groups = document.modes[mode].groups
    if groups:
        labels = sorted(groups)
        fig, ax = plt.subplots(figsize=(max(4, 0.8 * len(labels)), 3.5))
        ax.bar(labels, [groups[g].mean_iou for g in labels])
        ax.set_ylabel("mean IoU")
        ax.set_ylim(0, 1.05)
        plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
        fig.tight_layout()
        path = out_dir / "groups.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


@dataclass
class AnalysisDocument:
    """Annotation-corpus statistics: proportions plus per-category agreement."""

    n_records: int
    n_items: int
    distribution: Distribution
    kappa: dict[str, float | None]
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "kind": "analysis",
            "n_records": self.n_records,
            "n_items": self.n_items,
            "difficulty_correctness": self.distribution.difficulty_correctness,
            "categories": self.distribution.categories,
            "redundancy_ratio": self.distribution.redundancy_ratio,
            "kappa": {c: self.kappa[c] for c in CATEGORIES},
            "warnings": self.warnings,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "AnalysisDocument":
        dist = Distribution(
            difficulty_correctness=dict(doc["difficulty_correctness"]),
            categories=dict(doc["categories"]),
            redundancy_ratio=doc["redundancy_ratio"],
            n_items=doc["n_items"],
        )
        return cls(
            n_records=doc["n_records"],
            n_items=doc["n_items"],
            distribution=dist,
            kappa=dict(doc["kappa"]),
            warnings=list(doc.get("warnings", [])),
        )


def analyze_annotations(records: Sequence[AnnotationRecord]) -> AnalysisDocument:
    """Voted label distribution and per-category Fleiss kappa.

    Kappa uses the items rated by the most common annotator count (>= 2);
    items with other counts are skipped with a warning, and degenerate
    categories report None (undefined).
    """
    grouped = group_records(records)
    voted = [vote_annotations(group) for group in grouped.values()]
    dist = distribution(voted)
    warnings: list[str] = []

    counts: dict[int, int] = {}
    for group in grouped.values():
        counts[len(group)] = counts.get(len(group), 0) + 1
    rated_counts = {n: k for n, k in counts.items() if n >= 2}
    kappa: dict[str, float | None] = {c: None for c in CATEGORIES}
    if not rated_counts:
        warnings.append("kappa undefined: no item has >= 2 annotators")
    else:
        n_raters = max(rated_counts, key=lambda n: (rated_counts[n], n))
        skipped = sum(k for n, k in counts.items() if n != n_raters)
        if skipped:
            warnings.append(
                f"kappa computed over items with {n_raters} annotators;"
                f" {skipped} items with other counts skipped"
            )
        items = [g for g in grouped.values() if len(g) == n_raters]
        for category in CATEGORIES:
            matrix = [
                [int(rec.categories[category]) for rec in sorted(g, key=lambda r: r.annotator_id)]
                for g in items
            ]
            kappa[category] = fleiss_kappa(matrix)
    return AnalysisDocument(
        n_records=len(records),
        n_items=len(grouped),
        distribution=dist,
        kappa=kappa,
        warnings=warnings,
    )


def render_analysis_text(document: AnalysisDocument) -> str:
    dist = document.distribution
    lines = [
        f"annotations: {document.n_records} records over {document.n_items} items",
        "",
        "difficulty / correctness",
    ]
    for key, value in dist.difficulty_correctness.items():
        lines.append(f"  {key:<13} {value:.3f}")
    lines.append("")
    lines.append("categories (majority-voted)")
    for category in CATEGORIES:
        lines.append(f"  {category:<11} {dist.categories[category]:.3f}")
    lines.append("")
    lines.append(f"redundant REs: {dist.redundancy_ratio:.3f}")
    lines.append("")
    lines.append("agreement (Fleiss kappa per category)")
    for category in CATEGORIES:
        value = document.kappa[category]
        rendered = "undefined" if value is None else f"{value:.2f}"
        lines.append(f"  {category:<11} {rendered}")
    for warning in document.warnings:
        lines.append(f"warning: {warning}")
    return "\n".join(lines) + "\n"


def save_analysis_figures(document: AnalysisDocument, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    dist = document.distribution

    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    keys = list(dist.difficulty_correctness)
    ax.bar(keys, [dist.difficulty_correctness[k] for k in keys])
    ax.set_ylabel("proportion")
    ax.set_ylim(0, 1.05)
    plt.setp(ax.get_xticklabels(), rotation=20, ha="right")
    fig.tight_layout()
    path = out_dir / "difficulty_correctness.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    ax.bar(list(CATEGORIES), [dist.categories[c] for c in CATEGORIES])
    ax.set_ylabel("proportion of REs")
    ax.set_ylim(0, 1.05)
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    fig.tight_layout()
    path = out_dir / "categories.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    defined = {c: v for c, v in document.kappa.items() if v is not None}
    if defined:
        fig, ax = plt.subplots(figsize=(5.5, 3.2))
        ax.bar(list(defined), list(defined.values()))
        ax.set_ylabel("Fleiss kappa")
        ax.set_ylim(min(0, min(defined.values())) - 0.05, 1.05)
        plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
        fig.tight_layout()
        path = out_dir / "kappa.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def write_eval_outputs(document: EvalDocument, out_dir) -> dict[str, Path]:
    """The eval report bundle: JSON, rendered tables, figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    json_path.write_text(
        json.dumps(document.to_json(), indent=1, sort_keys=True), encoding="utf-8"
    )
    text_path = out_dir / "tables.txt"
    text_path.write_text(render_eval_text(document), encoding="utf-8")
    figures = save_eval_figures(document, out_dir / "figures")
    return {"json": json_path, "text": text_path, "figures": figures}


def write_analysis_outputs(document: AnalysisDocument, out_dir) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "stats.json"
    json_path.write_text(
        json.dumps(document.to_json(), indent=1, sort_keys=True), encoding="utf-8"
    )
    text_path = out_dir / "stats.txt"
    text_path.write_text(render_analysis_text(document), encoding="utf-8")
    figures = save_analysis_figures(document, out_dir / "figures")
    return {"json": json_path, "text": text_path, "figures": figures}

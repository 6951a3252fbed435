"""JSON and markdown rendering of evaluation reports."""

from __future__ import annotations

import json
from typing import Sequence

from .harness import EvalReport

LABELS = {"none": "Original", "cobfc": "CobFC", "dcfringe": "DC-Fringe", "baseline": "Baseline"}


def to_json(runs: Sequence[EvalReport]) -> bytes:
    doc = {"runs": [r.to_dict() for r in runs]}
    return (json.dumps(doc, indent=2) + "\n").encode()


def from_json(payload: bytes | str) -> list[EvalReport]:
    return [EvalReport.from_dict(r) for r in json.loads(payload)["runs"]]


def cell(mean: float, sd: float, improved: bool = False, overfit: bool = False) -> str:
    text = f"{mean:.2f} ± {sd:.2f}"
    if improved:
        return f"**{text}**"
    if overfit:
        return f"<u>{text}</u>"
    return text


def _fmt(x) -> str:
    return "" if x is None else f"{x:.2f}"


def to_markdown(runs: Sequence[EvalReport]) -> bytes:
    """Accuracy table (bold = improved, underlined = overfit) and construction statistics."""
    methods = []
    for r in runs:
        for m in r.methods[1:]:
            if m.method not in methods:
                methods.append(m.method)
    head = ["Data set", "Original (train)", "Original (test)"] + [LABELS[m] for m in methods]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for r in runs:
        ref = r.methods[0]
        row = [r.dataset, cell(ref.train_mean, ref.train_sd), cell(ref.test_mean, ref.test_sd)]
        for name in methods:
            try:
                m = r.method(name)
            except KeyError:
                row.append("")
                continue
            row.append(cell(m.test_mean, m.test_sd, m.improved, m.overfit))
        lines.append("| " + " | ".join(row) + " |")

    stats = ["Data set", "Avg. # outliers", "Avg. # gated", "Classes w/o", "Folds w/o",
             "Merged neighborhoods", "Number of features", "DC-Fringe features",
             "DC-Fringe iterations"]
    lines += ["", "| " + " | ".join(stats) + " |", "|" + "---|" * len(stats)]
    for r in runs:
        q = r.method("cobfc").quantities() if _has(r, "cobfc") else {}
        d = r.method("dcfringe").quantities() if _has(r, "dcfringe") else {}
        lines.append("| " + " | ".join([
            r.dataset, _fmt(q.get("outliers")), _fmt(q.get("gated_outliers")),
            _fmt(q.get("classes_without_outliers")),
            "" if not q else str(q["folds_without_outliers"]),
            _fmt(q.get("merged_neighborhoods")), _fmt(q.get("features")),
            _fmt(d.get("features")), _fmt(d.get("iterations")),
        ]) + " |")
    return ("\n".join(lines) + "\n").encode()


def _has(run: EvalReport, name: str) -> bool:
    return any(m.method == name for m in run.methods)


def report(runs: Sequence[EvalReport], format: str = "json") -> bytes:
    if format == "json":
        return to_json(runs)
    if format in ("md", "markdown"):
        return to_markdown(runs)
    raise ValueError(f"unknown report format {format!r}")

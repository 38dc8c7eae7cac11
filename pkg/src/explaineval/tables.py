"""Rendering of the four evaluation reports, shared by the CLI and the
HTTP service so both emit byte-identical output for the same events."""

from __future__ import annotations

import json
from typing import Iterable, Sequence

from .analytics import (
    CorrelationMatrix,
    ObjectiveReport,
    SessionView,
    SubjectiveReport,
    correlation_matrix,
    objective_report,
    subjective_report,
)
from .domain import ExplanationStyle, MetricId
from .fuzzy import (
    DEFAULT_FACTORS,
    DEFAULT_GRADES,
    StyleEvaluation,
    WeightVector,
    evaluate_style,
    implied_mean,
)

#: Presentation order for style rows (alphabetical by label).
STYLE_ROWS = (
    ExplanationStyle.AVG,
    ExplanationStyle.CONTENT,
    ExplanationStyle.CONTEXT_AWARE,
    ExplanationStyle.PER,
    ExplanationStyle.SIMI,
    ExplanationStyle.SIMU,
)

METRIC_COLUMNS = tuple(MetricId)


class InsufficientData(Exception):
    """Raised when a report needs complete sessions and none exist."""


def _require_complete(views: Sequence[SessionView]) -> list[SessionView]:
    complete = [v for v in views if v.complete]
    if not complete:
        raise InsufficientData("no complete sessions in the event log")
    return complete


def _text_table(header: Sequence[str], rows: Iterable[Sequence[str]],
                title: str) -> str:
    all_rows = [list(header)] + [list(r) for r in rows]
    widths = [max(len(r[i]) for r in all_rows) for i in range(len(header))]
    lines = [title]
    for idx, row in enumerate(all_rows):
        cells = [
            row[i].ljust(widths[i]) if i == 0 else row[i].rjust(widths[i])
            for i in range(len(row))
        ]
        lines.append("  ".join(cells).rstrip())
        if idx == 0:
            lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    return "\n".join(lines) + "\n"


def _json_doc(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def render_objective(views: Sequence[SessionView], fmt: str = "text") -> str:
    """Mean decision time and mean r - r' per style, with the supplementary
    mean |r - r'| column."""
    report: ObjectiveReport = objective_report(_require_complete(views))
    if fmt == "json":
        return _json_doc(
            {
                "table": "objective",
                "rows": {
                    style.value: {
                        "mean_time_s": round(row.mean_time_s, 6),
                        "mean_diff": round(row.mean_diff, 6),
                        "mean_abs_diff": round(row.mean_abs_diff, 6),
                        "persuasiveness": row.persuasiveness,
                        "n_trials": row.n_trials,
                    }
                    for style, row in report.rows.items()
                },
            }
        )
    rows = []
    for style in STYLE_ROWS:
        row = report.rows.get(style)
        if row is None:
            rows.append([style.value, "-", "-", "-", "0"])
            continue
        rows.append(
            [
                style.value,
                f"{row.mean_time_s:.2f}",
                f"{row.mean_diff:.2f}",
                f"{row.mean_abs_diff:.2f}",
                str(row.n_trials),
            ]
        )
    return _text_table(
        ["", "Efficiency (seconds)", "Effectiveness and persuasiveness",
         "Mean |r-r'| (supplementary)", "n"],
        rows,
        "Table 3. Efficiency, effectiveness, and persuasiveness of "
        "explanation types (average values)",
    )


def render_subjective(views: Sequence[SessionView], fmt: str = "text") -> str:
    report: SubjectiveReport = subjective_report(_require_complete(views))
    if fmt == "json":
        return _json_doc(
            {
                "table": "subjective",
                "rows": {
                    style.value: {
                        metric.value: (
                            None
                            if report.mean(style, metric) is None
                            else round(report.mean(style, metric), 6)
                        )
                        for metric in METRIC_COLUMNS
                    }
                    for style in STYLE_ROWS
                },
            }
        )
    rows = []
    for style in STYLE_ROWS:
        cells = [style.value]
        for metric in METRIC_COLUMNS:
            mean = report.mean(style, metric)
            cells.append("-" if mean is None else f"{mean:.2f}")
        rows.append(cells)
    return _text_table(
        [""] + [m.value for m in METRIC_COLUMNS],
        rows,
        "Table 4. Subjective evaluation of efficiency, effectiveness, "
        "persuasiveness, satisfaction, trust, and transparency (mean "
        "questionnaire scores, 1-5)",
    )


def render_correlation(
    views: Sequence[SessionView],
    style: ExplanationStyle = ExplanationStyle.CONTEXT_AWARE,
    source: str = "mixed",
    fmt: str = "text",
) -> str:
    matrix: CorrelationMatrix = correlation_matrix(
        _require_complete(views), style, source=source
    )
    if fmt == "json":
        return _json_doc(
            {
                "table": "correlation",
                "style": style.value,
                "source": source,
                "n": matrix.n,
                "rows": {
                    a.value: {
                        b.value: (
                            None
                            if matrix.entry(a, b).rho is None
                            else {
                                "rho": round(matrix.entry(a, b).rho, 6),
                                "p_value": round(matrix.entry(a, b).p_value, 6),
                                "stars": matrix.entry(a, b).stars,
                            }
                        )
                        for b in METRIC_COLUMNS
                    }
                    for a in METRIC_COLUMNS
                },
            }
        )
    rows = []
    for a in METRIC_COLUMNS:
        cells = [a.value]
        for b in METRIC_COLUMNS:
            res = matrix.entry(a, b)
            cells.append("-" if res.rho is None else f"{res.rho:.2f}{res.stars}")
        rows.append(cells)
    return _text_table(
        [""] + [m.value for m in METRIC_COLUMNS],
        rows,
        f"Table 5. Spearman rank order correlation of metrics in "
        f"{style.value} explanations (n={matrix.n}, source={source})",
    )


def render_fuzzy(
    views: Sequence[SessionView],
    weights: WeightVector | None = None,
    fmt: str = "text",
) -> str:
    complete = _require_complete(views)
    if weights is None:
        weights = WeightVector.equal(len(DEFAULT_FACTORS))
    evaluations: list[StyleEvaluation] = [
        evaluate_style(complete, style, weights=weights) for style in STYLE_ROWS
    ]
    if fmt == "json":
        return _json_doc(
            {
                "table": "fuzzy",
                "weights": {
                    m.value: w
                    for m, w in zip(DEFAULT_FACTORS.factors, weights.weights)
                },
                "rows": {
                    ev.style.value: {
                        "appraisal": [round(v, 4) for v in ev.vector.e],
                        "grade": ev.classification.grade.label,
                        "membership": round(ev.classification.membership, 4),
                        "tied": ev.classification.tied,
                        "implied_mean": round(implied_mean(ev.vector), 4),
                    }
                    for ev in evaluations
                },
            }
        )
    rows = []
    for ev in evaluations:
        vector = "(" + ",".join(f"{v:.4f}" for v in ev.vector.e) + ")"
        grade = ev.classification.grade.label
        if ev.classification.tied:
            grade += " (tie)"
        rows.append(
            [
                ev.style.value,
                vector,
                grade,
                f"{ev.classification.membership:.4f}",
                f"{implied_mean(ev.vector):.3f}",
            ]
        )
    return _text_table(
        ["", "Overall evaluation", "Grade (largest membership)",
         "Membership", "Implied mean"],
        rows,
        "Table 6. Overall evaluation of explanation types "
        f"(grades: {', '.join(g.label for g in DEFAULT_GRADES.grades)})",
    )

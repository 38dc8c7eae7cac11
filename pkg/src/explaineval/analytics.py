"""Batch evaluation outputs: objective metrics, Likert aggregates,
rank correlations and significance tests.

All computations run over immutable exports of completed sessions.  The
test statistics are computed from first principles here; only distribution
functions (t, F, studentized range) come from scipy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import f as f_dist
from scipy.stats import studentized_range
from scipy.stats import t as t_dist

from .domain import ExplanationStyle, MetricId


@dataclass(frozen=True)
class TrialView:
    """Analytics projection of one trial: style plus the three measurements."""

    style: ExplanationStyle
    r: int | None = None
    r_prime: int | None = None
    t_ms: int | None = None

    @property
    def complete(self) -> bool:
        return self.r is not None and self.r_prime is not None and self.t_ms is not None


@dataclass(frozen=True)
class LikertView:
    style: ExplanationStyle
    metric: MetricId
    score: int


@dataclass(frozen=True)
class SessionView:
    """What analytics needs from a session; buildable without the dataset."""

    session_id: str
    trials: tuple[TrialView, ...]
    likert: tuple[LikertView, ...]

    @property
    def complete(self) -> bool:
        return (
            len(self.trials) == len(ExplanationStyle)
            and all(t.complete for t in self.trials)
            and len(self.likert) == len(ExplanationStyle) * len(MetricId)
        )

    def trial_for(self, style: ExplanationStyle) -> TrialView | None:
        for t in self.trials:
            if t.style == style:
                return t
        return None

    def likert_score(self, style: ExplanationStyle, metric: MetricId) -> int | None:
        for resp in self.likert:
            if resp.style == style and resp.metric == metric:
                return resp.score
        return None


# ---------------------------------------------------------------------------
# Objective and subjective aggregates


@dataclass(frozen=True)
class ObjectiveRow:
    mean_time_s: float
    mean_diff: float
    mean_abs_diff: float
    n_trials: int

    @property
    def persuasiveness(self) -> str:
        """Sign interpretation of the mean rating difference."""
        if self.mean_diff > 0:
            return "positive"
        if self.mean_diff < 0:
            return "negative"
        return "neutral"


@dataclass(frozen=True)
class ObjectiveReport:
    rows: dict[ExplanationStyle, ObjectiveRow]


def objective_report(sessions: Iterable[SessionView]) -> ObjectiveReport:
    """Per-style mean decision time (seconds) and mean rating difference.

    The signed mean difference is the headline effectiveness/persuasiveness
    figure; the mean absolute difference is attached as a supplementary
    effectiveness figure because offsetting signed errors can mask poor
    estimates.  Styles without any complete trial are absent from the report.
    """
    times: dict[ExplanationStyle, list[float]] = {}
    diffs: dict[ExplanationStyle, list[int]] = {}
    for session in sessions:
        for trial in session.trials:
            if not trial.complete:
                continue
            times.setdefault(trial.style, []).append(trial.t_ms / 1000.0)
            diffs.setdefault(trial.style, []).append(trial.r - trial.r_prime)
    rows = {}
    for style, ts in times.items():
        ds = diffs[style]
        rows[style] = ObjectiveRow(
            mean_time_s=sum(ts) / len(ts),
            mean_diff=sum(ds) / len(ds),
            mean_abs_diff=sum(abs(d) for d in ds) / len(ds),
            n_trials=len(ts),
        )
    return ObjectiveReport(rows)


@dataclass(frozen=True)
class SubjectiveCell:
    mean: float
    n: int


@dataclass(frozen=True)
class SubjectiveReport:
    cells: dict[tuple[ExplanationStyle, MetricId], SubjectiveCell]

    def mean(self, style: ExplanationStyle, metric: MetricId) -> float | None:
        cell = self.cells.get((style, metric))
        return cell.mean if cell else None


def subjective_report(sessions: Iterable[SessionView]) -> SubjectiveReport:
    """Arithmetic mean questionnaire score per (style, metric) cell."""
    scores: dict[tuple[ExplanationStyle, MetricId], list[int]] = {}
    for session in sessions:
        for resp in session.likert:
            scores.setdefault((resp.style, resp.metric), []).append(resp.score)
    return SubjectiveReport(
        {
            key: SubjectiveCell(mean=sum(v) / len(v), n=len(v))
            for key, v in scores.items()
        }
    )


# ---------------------------------------------------------------------------
# Rank correlation


def rank_with_ties(values: Sequence[float]) -> np.ndarray:
    """1-based ranks, tied values receiving the average of their ranks."""
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=float)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


@dataclass(frozen=True)
class SpearmanResult:
    rho: float | None
    p_value: float | None

    @property
    def stars(self) -> str:
        return significance_stars(self.p_value)


def significance_stars(p_value: float | None) -> str:
    if p_value is None:
        return ""
    if p_value < 0.001:
        return "***"
    if p_value < 0.01:
        return "**"
    if p_value < 0.05:
        return "*"
    return ""


def spearman(x: Sequence[float], y: Sequence[float]) -> SpearmanResult:
    """Rank-order correlation with average ranks for ties.

    The p-value uses the t approximation with n-2 degrees of freedom; a
    correlation of exactly +/-1 maps to p = 0.  A constant input has no
    defined correlation and yields ``rho=None``.
    """
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise ValueError("spearman requires at least 3 observations")
    rx = rank_with_ties(x)
    ry = rank_with_ties(y)
    sx = rx - rx.mean()
    sy = ry - ry.mean()
    denom = math.sqrt(float(sx @ sx) * float(sy @ sy))
    if denom == 0.0:
        return SpearmanResult(None, None)
    rho = float(sx @ sy) / denom
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        return SpearmanResult(rho, 0.0)
    t_stat = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(t_dist.sf(abs(t_stat), n - 2))
    return SpearmanResult(rho, min(1.0, p))


def style_groups(
    sessions: Iterable[SessionView],
    measure: str | MetricId = "time_s",
) -> dict[ExplanationStyle, list[float]]:
    """Per-style observation groups for ANOVA / Tukey HSD.

    ``measure`` is ``"time_s"``, ``"diff"``, ``"abs_diff"`` or a
    :class:`MetricId` (questionnaire score).  With one trial per style per
    session, per-trial and per-participant granularities coincide, so one
    observation per complete session is emitted either way.
    """
    groups: dict[ExplanationStyle, list[float]] = {}
    for session in sessions:
        for t in session.trials:
            if not t.complete:
                continue
            if isinstance(measure, MetricId):
                score = session.likert_score(t.style, measure)
                if score is None:
                    continue
                value = float(score)
            elif measure == "time_s":
                value = t.t_ms / 1000.0
            elif measure == "diff":
                value = float(t.r - t.r_prime)
            elif measure == "abs_diff":
                value = float(abs(t.r - t.r_prime))
            else:
                raise ValueError(f"unknown measure: {measure!r}")
            groups.setdefault(t.style, []).append(value)
    return groups


# ---------------------------------------------------------------------------
# ANOVA and Tukey HSD


@dataclass(frozen=True)
class AnovaResult:
    f: float
    p_value: float
    df_between: int
    df_within: int


def one_way_anova(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """Between/within mean-square F test over independent groups."""
    if len(groups) < 2:
        raise ValueError("ANOVA requires at least 2 groups")
    if any(len(g) < 2 for g in groups):
        raise ValueError("each group needs at least 2 observations")
    arrs = [np.asarray(g, dtype=float) for g in groups]
    n_total = sum(len(a) for a in arrs)
    grand = sum(float(a.sum()) for a in arrs) / n_total
    ss_between = sum(len(a) * (float(a.mean()) - grand) ** 2 for a in arrs)
    ss_within = sum(float(((a - a.mean()) ** 2).sum()) for a in arrs)
    df_between = len(arrs) - 1
    df_within = n_total - len(arrs)
    if ss_between <= 0.0:
        return AnovaResult(0.0, 1.0, df_between, df_within)
    if ss_within == 0.0:
        return AnovaResult(math.inf, 0.0, df_between, df_within)
    f_stat = (ss_between / df_between) / (ss_within / df_within)
    p = float(f_dist.sf(f_stat, df_between, df_within))
    return AnovaResult(f_stat, p, df_between, df_within)


@dataclass(frozen=True)
class TukeyPair:
    i: int
    j: int
    mean_diff: float
    p_value: float
    significant: bool


@dataclass(frozen=True)
class TukeyResult:
    pairs: tuple[TukeyPair, ...]
    q_critical: float
    alpha: float

    def pair(self, i: int, j: int) -> TukeyPair:
        a, b = min(i, j), max(i, j)
        for p in self.pairs:
            if (p.i, p.j) == (a, b):
                return p
        raise KeyError((i, j))


def tukey_hsd(groups: Sequence[Sequence[float]], alpha: float = 0.05) -> TukeyResult:
    """All-pairs comparison by the studentized range criterion.

    ``mean_diff`` is mean(group_i) - mean(group_j) for i < j.  Unequal group
    sizes use the Tukey-Kramer standard error.  Critical values come from
    the studentized range distribution (numeric, not tabulated).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if len(groups) < 2:
        raise ValueError("Tukey HSD requires at least 2 groups")
    if any(len(g) < 2 for g in groups):
        raise ValueError("each group needs at least 2 observations")
    arrs = [np.asarray(g, dtype=float) for g in groups]
    k = len(arrs)
    n_total = sum(len(a) for a in arrs)
    df_within = n_total - k
    ms_within = sum(float(((a - a.mean()) ** 2).sum()) for a in arrs) / df_within
    q_crit = float(studentized_range.ppf(1.0 - alpha, k, df_within))
    pairs = []
    for i in range(k):
        for j in range(i + 1, k):
            diff = float(arrs[i].mean() - arrs[j].mean())
            se = math.sqrt(ms_within / 2.0 * (1.0 / len(arrs[i]) + 1.0 / len(arrs[j])))
            if se == 0.0:
                q = 0.0 if diff == 0.0 else math.inf
            else:
                q = abs(diff) / se
            p = 0.0 if math.isinf(q) else float(studentized_range.sf(q, k, df_within))
            pairs.append(TukeyPair(i, j, diff, p, q > q_crit))
    return TukeyResult(tuple(pairs), q_crit, alpha)


# ---------------------------------------------------------------------------
# Correlation matrix over the six metrics, per style


@dataclass(frozen=True)
class CorrelationMatrix:
    style: ExplanationStyle
    metrics: tuple[MetricId, ...]
    entries: dict[tuple[MetricId, MetricId], SpearmanResult]
    n: int
    source: str

    def entry(self, a: MetricId, b: MetricId) -> SpearmanResult:
        return self.entries[(a, b)]


def _metric_value(
    session: SessionView, style: ExplanationStyle, metric: MetricId, source: str
) -> float | None:
    if source == "mixed" and metric in (
        MetricId.EFFICIENCY,
        MetricId.EFFECTIVENESS,
        MetricId.PERSUASIVENESS,
    ):
        trial = session.trial_for(style)
        if trial is None or not trial.complete:
            return None
        if metric == MetricId.EFFICIENCY:
            return trial.t_ms / 1000.0
        if metric == MetricId.EFFECTIVENESS:
            return float(abs(trial.r - trial.r_prime))
        return float(trial.r - trial.r_prime)
    score = session.likert_score(style, metric)
    return float(score) if score is not None else None


def correlation_matrix(
    sessions: Iterable[SessionView],
    style: ExplanationStyle,
    source: str = "mixed",
) -> CorrelationMatrix:
    """Spearman correlation of the six metrics for one explanation style.

    Each session contributes one observation per metric.  With the default
    ``mixed`` source, the objectively measured metrics use their measured
    values (decision time, |r - r'|, signed r - r'); the remaining metrics
    use the questionnaire scores.  ``source="likert"`` uses questionnaire
    scores for all six.
    """
    if source not in ("mixed", "likert"):
        raise ValueError(f"unknown correlation source: {source!r}")
    metrics = tuple(MetricId)
    vectors: dict[MetricId, list[float]] = {m: [] for m in metrics}
    n = 0
    for session in sessions:
        values = {m: _metric_value(session, style, m, source) for m in metrics}
        if any(v is None for v in values.values()):
            continue
        n += 1
        for m in metrics:
            vectors[m].append(values[m])
    if n < 3:
        raise ValueError(
            f"correlation for style {style.value} needs >= 3 sessions with "
            f"complete data, got {n}"
        )
    entries: dict[tuple[MetricId, MetricId], SpearmanResult] = {}
    for a_idx, a in enumerate(metrics):
        for b in metrics[a_idx:]:
            result = spearman(vectors[a], vectors[b])
            entries[(a, b)] = result
            entries[(b, a)] = result
    return CorrelationMatrix(style, metrics, entries, n, source)

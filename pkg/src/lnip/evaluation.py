"""Precision / recall scoring and dataset-level aggregation.

Every index entry is used once as a query against the full index (itself
included). Precision divides by the number of images retrieved, recall
by the size of the query's category; per-category means are averaged
with equal weight per category. The dataset-level recall is the
Average Retrieval Rate (ARR).
"""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .descriptors import Kind
from .errors import EmptyDatasetError, InvalidInputError
from .retrieval import FeatureIndex, RetrievalResult, rank
from .similarity import Metric

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("kind", "metric", "n_retrieved", "category", "avg_precision", "avg_recall")
CURVE_COLUMNS = ("kind", "metric", "n_retrieved", "p_total", "r_total")
TOTAL_ROW = "TOTAL"


@dataclass(frozen=True)
class QueryScore:
    query_id: str | None
    n_retrieved: int
    relevant_retrieved: int
    relevant_total: int

    @property
    def precision(self) -> float:
        return self.relevant_retrieved / self.n_retrieved

    @property
    def recall(self) -> float:
        return self.relevant_retrieved / self.relevant_total


@dataclass(frozen=True)
class EvalReport:
    kind: Kind
    metric: Metric
    n_retrieved: int
    per_category: dict[str, tuple[float, float]]
    p_total: float
    r_total: float

    @property
    def arr(self) -> float:
        return self.r_total


def score_query(result: RetrievalResult, query_category: str, relevant_total: int, n: int) -> QueryScore:
    """Score the first ``n`` hits of ``result`` against ``query_category``."""
    if n < 1 or n > len(result.ranked):
        raise InvalidInputError(f"n={n} outside 1..{len(result.ranked)} ranked results")
    if relevant_total < 1:
        raise InvalidInputError("relevant_total must be >= 1")
    hits = sum(1 for h in result.ranked[:n] if h.category == query_category)
    return QueryScore(result.query_id, n, hits, relevant_total)


def aggregate(kind, metric, n, scores_by_category) -> EvalReport:
    """Fold per-query scores into category means and their unweighted mean."""
    per_category = {}
    for cat in sorted(scores_by_category):
        scores = scores_by_category[cat]
        per_category[cat] = (
            sum(s.precision for s in scores) / len(scores),
            sum(s.recall for s in scores) / len(scores),
        )
    k = len(per_category)
    return EvalReport(
        Kind.parse(kind), Metric.parse(metric), n, per_category,
        sum(p for p, _ in per_category.values()) / k,
        sum(r for _, r in per_category.values()) / k,
    )


def evaluate(index: FeatureIndex, metric=Metric.D1, n_values=(25,), *,
             normalize: bool = False, threads: int | None = None) -> list[EvalReport]:
    """Query every entry against the whole index and report per ``n``.

    Returns one :class:`EvalReport` per value in ``n_values``, in the
    given order.
    """
    metric = Metric.parse(metric)
    n_values = [int(n) for n in n_values]
    if len(index) == 0:
        raise EmptyDatasetError("cannot evaluate an empty index")
    if not n_values:
        raise InvalidInputError("need at least one retrieval count")
    for n in n_values:
        if not 1 <= n <= len(index):
            raise InvalidInputError(f"retrieval count {n} outside 1..{len(index)}")

    sizes = index.category_sizes()
    categories = np.array([e.category for e in index.entries], dtype=object)
    n_max = max(n_values)

    def run(pos):
        entry = index.entries[pos]
        order, _ = rank(index, entry.feature, metric, query_id=entry.id, normalize=normalize)
        relevant = np.cumsum(categories[order[:n_max]] == entry.category)
        return [int(relevant[n - 1]) for n in n_values]

    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        counts = list(pool.map(run, range(len(index))))
    log.info("ran %d %s/%s queries in %.3fs", len(index), index.kind.value, metric.value,
             time.perf_counter() - start)

    reports = []
    for j, n in enumerate(n_values):
        by_cat: dict[str, list[QueryScore]] = {}
        for entry, row in zip(index.entries, counts):
            by_cat.setdefault(entry.category, []).append(
                QueryScore(entry.id, n, row[j], sizes[entry.category])
            )
        reports.append(aggregate(index.kind, metric, n, by_cat))
    return reports


def _fmt(x: float) -> str:
    return f"{x:.10f}"


def _sorted(reports):
    return sorted(reports, key=lambda r: (r.kind.value, r.metric.value, r.n_retrieved))


def emit_report(reports, path) -> None:
    """Write per-category and TOTAL rows for each report as CSV."""
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REPORT_COLUMNS)
            for r in _sorted(reports):
                head = (r.kind.value, r.metric.value, r.n_retrieved)
                for cat, (p, rc) in sorted(r.per_category.items()):
                    writer.writerow((*head, cat, _fmt(p), _fmt(rc)))
                writer.writerow((*head, TOTAL_ROW, _fmt(r.p_total), _fmt(r.r_total)))
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc.strerror or exc}") from exc


def emit_curves(reports, path) -> None:
    """Write ``(n, P_total, R_total)`` points per kind and metric as CSV."""
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CURVE_COLUMNS)
            for r in _sorted(reports):
                writer.writerow((r.kind.value, r.metric.value, r.n_retrieved, _fmt(r.p_total), _fmt(r.r_total)))
    except OSError as exc:
        raise OSError(f"cannot write curves {path}: {exc.strerror or exc}") from exc

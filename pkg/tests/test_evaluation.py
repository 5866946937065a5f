import csv

import numpy as np
import pytest

import oracle
from conftest import save_gray
from lnip.descriptors import FeatureVector, Kind
from lnip.errors import InvalidInputError
from lnip.evaluation import (EvalReport, QueryScore, aggregate, emit_curves, emit_report, evaluate,
                             score_query)
from lnip.imaging import load_dataset
from lnip.retrieval import FeatureIndex, Hit, IndexEntry, RetrievalResult, build_index
from lnip.similarity import Metric


def _result(categories, query_id="q"):
    return RetrievalResult(query_id, tuple(Hit(f"i{k}", c, float(k)) for k, c in enumerate(categories)))


def test_score_query_precision():
    result = _result(["a"] * 7 + ["b"] * 3)
    s = score_query(result, "a", 25, 10)
    assert (s.relevant_retrieved, s.precision) == (7, 0.7)


def test_score_query_recall():
    result = _result(["a"] * 20 + ["b"] * 5)
    assert score_query(result, "a", 25, 25).recall == 0.8


def test_score_query_self_at_one():
    s = score_query(_result(["a", "b"]), "a", 16, 1)
    assert s.precision == 1.0 and s.recall == 1 / 16


def test_score_query_rejects_large_n():
    with pytest.raises(InvalidInputError):
        score_query(_result(["a", "b"]), "a", 2, 3)


def test_aggregate_mean_of_means():
    scores = {
        "x": [QueryScore("1", 2, 1, 2), QueryScore("2", 2, 1, 2)],   # precision 0.5
        "y": [QueryScore("3", 2, 2, 2)],                               # precision 1.0
    }
    report = aggregate(Kind.LBP, Metric.D1, 2, scores)
    assert report.p_total == 0.75
    assert report.per_category == {"x": (0.5, 0.5), "y": (1.0, 1.0)}


def _brute_force(index, metric, n):
    """Precision/recall from scratch: oracle distances + sorted()."""
    feats = [e.feature.bins.tolist() for e in index.entries]
    cats = [e.category for e in index.entries]
    per_cat = {}
    for qi, qf in enumerate(feats):
        d = [oracle.DISTANCES[metric](f, qf) for f in feats]
        order = sorted(range(len(feats)), key=lambda j: (d[j], j != qi, j))
        rel = sum(cats[j] == cats[qi] for j in order[:n])
        per_cat.setdefault(cats[qi], []).append((rel / n, rel / cats.count(cats[qi])))
    means = {c: (np.mean([p for p, _ in v]), np.mean([r for _, r in v])) for c, v in per_cat.items()}
    return np.mean([p for p, _ in means.values()]), np.mean([r for _, r in means.values()])


@pytest.mark.parametrize("metric", ["d1", "euclidean", "chi_square"])
def test_evaluate_matches_brute_force(tmp_path, rng, metric):
    for c, size in (("a", 3), ("b", 5), ("c", 4)):
        base = rng.integers(0, 200, (12, 12))
        for k in range(size):
            save_gray(tmp_path / c / f"{k}.png", base + rng.integers(0, 40, (12, 12)))
    index = build_index(load_dataset(tmp_path), Kind.LNIP)
    reports = evaluate(index, metric, [1, 3, 5, 12])
    for report in reports:
        p, r = _brute_force(index, metric, report.n_retrieved)
        assert report.p_total == pytest.approx(p, abs=1e-12)
        assert report.r_total == pytest.approx(r, abs=1e-12)
    assert reports[0].p_total == 1.0
    recalls = [r.r_total for r in reports]
    assert recalls == sorted(recalls)
    assert reports[-1].r_total == 1.0


@pytest.mark.parametrize("kind", list(Kind))
def test_evaluate_perfect_fixture(identical_dataset, kind):
    index = build_index(load_dataset(identical_dataset), kind)
    (report,) = evaluate(index, Metric.D1, [8])
    assert report.p_total == 1.0 and report.r_total == 1.0


def test_evaluate_self_first_with_cross_category_duplicates():
    same = FeatureVector(Kind.LBP, np.ones(256))
    index = FeatureIndex(Kind.LBP, (IndexEntry("a", "x", same), IndexEntry("b", "y", same)))
    (report,) = evaluate(index, "manhattan", [1])
    assert report.p_total == 1.0


def test_evaluate_precision_equals_recall_at_category_size(small_dataset):
    index = build_index(load_dataset(small_dataset), Kind.LBP)
    (report,) = evaluate(index, "d1", [3])
    assert report.p_total == pytest.approx(report.r_total, abs=1e-15)


def test_evaluate_thread_independent(small_dataset):
    index = build_index(load_dataset(small_dataset), Kind.LNIP)
    assert evaluate(index, "d1", [1, 2, 6], threads=1) == evaluate(index, "d1", [1, 2, 6], threads=5)


def test_evaluate_rejects_bad_n(small_dataset):
    index = build_index(load_dataset(small_dataset), Kind.LBP)
    for bad in ([7], [0], []):
        with pytest.raises(InvalidInputError):
            evaluate(index, "d1", bad)


def _report(kind, metric, n, cats):
    return aggregate(kind, metric, n, {c: [QueryScore(c, n, 1, 2)] for c in cats})


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_emit_report_rows(tmp_path):
    emit_report([_report("LNIP", "d1", 5, ["b", "a"])], tmp_path / "r.csv")
    rows = _rows(tmp_path / "r.csv")
    assert rows[0] == ["kind", "metric", "n_retrieved", "category", "avg_precision", "avg_recall"]
    assert [r[3] for r in rows[1:]] == ["a", "b", "TOTAL"]
    assert rows[3][:3] == ["LNIP", "d1", "5"]


def test_emit_report_empty(tmp_path):
    emit_report([], tmp_path / "r.csv")
    assert len(_rows(tmp_path / "r.csv")) == 1


def test_emit_report_two_metrics(tmp_path):
    reports = [_report("LNIP", m, 25, ["a"]) for m in ("euclidean", "d1")]
    emit_report(reports, tmp_path / "r.csv")
    totals = [r for r in _rows(tmp_path / "r.csv") if r[3] == "TOTAL"]
    assert [r[1] for r in totals] == ["d1", "euclidean"]


def test_emit_report_deterministic(tmp_path, small_dataset):
    index = build_index(load_dataset(small_dataset), Kind.LNIP)
    for name in ("one.csv", "two.csv"):
        emit_report(evaluate(index, "d1", [1, 3, 6]), tmp_path / name)
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()


def test_emit_curves(tmp_path):
    emit_curves([_report("LBP", "d1", n, ["a"]) for n in (30, 25)], tmp_path / "c.csv")
    rows = _rows(tmp_path / "c.csv")
    assert rows[0] == ["kind", "metric", "n_retrieved", "p_total", "r_total"]
    assert [r[2] for r in rows[1:]] == ["25", "30"]


def test_emit_report_io_error(tmp_path):
    with pytest.raises(OSError, match="missing"):
        emit_report([], tmp_path / "missing" / "r.csv")


def test_eval_report_arr_alias():
    report = EvalReport(Kind.LBP, Metric.D1, 1, {"a": (1.0, 0.5)}, 1.0, 0.5)
    assert report.arr == 0.5

"""Histogram distances for query-to-database matching.

All five metrics are evaluated in float64. For canberra and chi-square a
bin where both histograms are zero contributes nothing.
"""

from __future__ import annotations

import enum

import numpy as np

from .descriptors import FeatureVector
from .errors import InvalidInputError


class Metric(str, enum.Enum):
    D1 = "d1"
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    CANBERRA = "canberra"
    CHI_SQUARE = "chi_square"

    @classmethod
    def parse(cls, value) -> "Metric":
        """Accept members or names; ``"chi-square"`` maps to ``CHI_SQUARE``."""
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise InvalidInputError(f"unknown metric {value!r} (choose from {choices})") from None

    @property
    def cli_name(self) -> str:
        return self.value.replace("_", "-")


def _ratio(num, den):
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den != 0)
    return out


def _d1(db, q):
    return np.sum(np.abs(db - q) / (1.0 + (db + q)), axis=-1)


def _euclidean(db, q):
    return np.sqrt(np.sum((db - q) ** 2, axis=-1))


def _manhattan(db, q):
    return np.sum(np.abs(db - q), axis=-1)


def _canberra(db, q):
    return np.sum(_ratio(np.abs(db - q), np.abs(db + q)), axis=-1)


def _chi_square(db, q):
    return 0.5 * np.sum(_ratio((db - q) ** 2, db + q), axis=-1)


_FUNCS = {
    Metric.D1: _d1,
    Metric.EUCLIDEAN: _euclidean,
    Metric.MANHATTAN: _manhattan,
    Metric.CANBERRA: _canberra,
    Metric.CHI_SQUARE: _chi_square,
}


def _values(v):
    return v.bins if isinstance(v, FeatureVector) else np.asarray(v)


def distances(metric, database, query) -> np.ndarray:
    """Distance from ``query`` to every row of ``database``.

    Parameters
    ----------
    metric : Metric or str
    database : array_like, shape (m, n)
    query : array_like, shape (n,)

    Returns
    -------
    numpy.ndarray
        ``(m,)`` float64 distances.
    """
    db = np.atleast_2d(np.asarray(database, dtype=np.float64))
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1 or db.shape[1] != q.shape[0]:
        raise InvalidInputError(f"feature length mismatch: {db.shape[1]} vs {q.shape}")
    return _FUNCS[Metric.parse(metric)](db, q)


def distance(metric, a, b) -> float:
    """Distance between two feature vectors (or plain count arrays)."""
    if isinstance(a, FeatureVector) and isinstance(b, FeatureVector) and a.kind is not b.kind:
        raise InvalidInputError(f"cannot compare {a.kind.value} with {b.kind.value} features")
    va, vb = _values(a), _values(b)
    if va.shape != vb.shape or va.ndim != 1:
        raise InvalidInputError(f"feature length mismatch: {va.shape} vs {vb.shape}")
    # same code path as the index scan so rankings agree bit for bit
    return float(distances(metric, va[np.newaxis, :], vb)[0])

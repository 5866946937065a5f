"""Feature index construction, persistence and ranked exhaustive queries."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .descriptors import FeatureVector, Kind, extract_feature
from .errors import EmptyDatasetError, InvalidInputError, StoreParseError
from .similarity import Metric, distances

log = logging.getLogger(__name__)

STORE_MAGIC = "LNIPSTORE"
STORE_VERSION = "v1"


@dataclass(frozen=True)
class IndexEntry:
    id: str
    category: str
    feature: FeatureVector


@dataclass(frozen=True)
class FeatureIndex:
    """Ordered, immutable collection of same-kind features."""

    kind: Kind
    entries: tuple[IndexEntry, ...]
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)
    _positions: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kind = Kind.parse(self.kind)
        entries = tuple(self.entries)
        seen = set()
        for e in entries:
            if e.feature.kind is not kind:
                raise InvalidInputError(
                    f"entry {e.id!r} holds {e.feature.kind.value} features, index is {kind.value}"
                )
            if e.id in seen:
                raise InvalidInputError(f"duplicate entry id {e.id!r}")
            seen.add(e.id)
        matrix = np.array([e.feature.bins for e in entries], dtype=np.int64).reshape(len(entries), kind.n_bins)
        matrix.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_matrix", matrix)
        object.__setattr__(self, "_positions", {e.id: pos for pos, e in enumerate(entries)})

    def __len__(self):
        return len(self.entries)

    @property
    def matrix(self) -> np.ndarray:
        """``(len, n_bins)`` read-only array of raw counts."""
        return self._matrix

    def position(self, entry_id: str) -> int | None:
        return self._positions.get(entry_id)

    def category_sizes(self) -> dict[str, int]:
        sizes: dict[str, int] = {}
        for e in self.entries:
            sizes[e.category] = sizes.get(e.category, 0) + 1
        return sizes


class Hit(NamedTuple):
    id: str
    category: str
    distance: float


@dataclass(frozen=True)
class RetrievalResult:
    query_id: str | None
    ranked: tuple[Hit, ...]


def build_index(items, kind=Kind.LNIP, threads: int | None = None) -> FeatureIndex:
    """Extract one feature per dataset item, keeping input order."""
    kind = Kind.parse(kind)
    items = list(items)
    if not items:
        raise EmptyDatasetError("cannot build an index from an empty item list")

    def featurize(item):
        try:
            return extract_feature(item.image, kind)
        except InvalidInputError as exc:
            raise InvalidInputError(f"image {item.id!r}: {exc}") from None

    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        features = list(pool.map(featurize, items))
    log.info("extracted %d %s features in %.3fs", len(items), kind.value, time.perf_counter() - start)
    return FeatureIndex(kind, tuple(
        IndexEntry(item.id, item.category, feat) for item, feat in zip(items, features)
    ))


def _prepare(matrix, query, normalize):
    if not normalize:
        return matrix, query
    halves = matrix.shape[1] // 256
    m = matrix.astype(np.float64).reshape(len(matrix), halves, 256)
    q = query.astype(np.float64).reshape(halves, 256)
    msum = m.sum(axis=2, keepdims=True)
    qsum = q.sum(axis=1, keepdims=True)
    m = np.divide(m, msum, out=np.zeros_like(m), where=msum != 0)
    q = np.divide(q, qsum, out=np.zeros_like(q), where=qsum != 0)
    return m.reshape(matrix.shape), q.reshape(query.shape)


def rank(index: FeatureIndex, q, metric=Metric.D1, *, query_id=None, normalize=False):
    """Full ranking of ``index`` against ``q``.

    Returns ``(order, dists)``: entry positions sorted by ascending
    distance, and the per-entry distances in index order. Ties keep index
    order, except that the entry named ``query_id`` (if any) goes first
    among its equals.
    """
    qbins = q.bins if isinstance(q, FeatureVector) else np.asarray(q)
    if isinstance(q, FeatureVector) and q.kind is not index.kind:
        raise InvalidInputError(f"query is {q.kind.value} but index holds {index.kind.value}")
    if qbins.shape != (index.kind.n_bins,):
        raise InvalidInputError(f"query has {qbins.shape} bins, index expects {index.kind.n_bins}")
    db, qv = _prepare(index.matrix, qbins, normalize)
    dists = distances(metric, db, qv)
    if query_id is not None:
        self_pos = index.position(query_id)
        if self_pos is not None:
            not_self = np.ones(len(dists), dtype=np.int8)
            not_self[self_pos] = 0
            return np.lexsort((not_self, dists)), dists
    return np.argsort(dists, kind="stable"), dists


def query(index: FeatureIndex, q, metric=Metric.D1, top_n: int = 10, *,
          query_id=None, normalize=False) -> RetrievalResult:
    """Return the ``top_n`` closest entries by exhaustive scan."""
    if top_n < 1:
        raise InvalidInputError(f"top_n must be >= 1, got {top_n}")
    order, dists = rank(index, q, metric, query_id=query_id, normalize=normalize)
    hits = tuple(
        Hit(index.entries[p].id, index.entries[p].category, float(dists[p]))
        for p in order[:top_n]
    )
    return RetrievalResult(query_id, hits)


def save_index(index: FeatureIndex, path) -> None:
    """Write ``index`` as a line-oriented UTF-8 text store."""
    lines = [f"{STORE_MAGIC} {STORE_VERSION} {index.kind.value} {index.kind.n_bins}"]
    for e in index.entries:
        for text in (e.id, e.category):
            if not text or any(c in text for c in "\t\r\n"):
                raise InvalidInputError(f"id/category {text!r} cannot be stored (empty or has tab/newline)")
        lines.append(f"{e.id}\t{e.category}\t{','.join(map(str, e.feature.bins.tolist()))}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_index(path) -> FeatureIndex:
    """Parse a store written by :func:`save_index`."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise StoreParseError("missing header", 1, path)

    header = lines[0].split(" ")
    if len(header) != 4 or header[0] != STORE_MAGIC or header[1] != STORE_VERSION:
        raise StoreParseError(f"bad header {lines[0]!r}", 1, path)
    try:
        kind = Kind(header[2])
        n_bins = int(header[3])
    except (InvalidInputError, ValueError):
        raise StoreParseError(f"bad header {lines[0]!r}", 1, path) from None
    if n_bins != kind.n_bins:
        raise StoreParseError(f"{kind.value} stores have {kind.n_bins} bins, header says {n_bins}", 1, path)

    entries = []
    seen = set()
    for lineno, line in enumerate(lines[1:], 2):
        fields = line.split("\t")
        if len(fields) != 3 or not fields[0] or not fields[1]:
            raise StoreParseError("expected '<id>\\t<category>\\t<bins>'", lineno, path)
        entry_id, category, raw = fields
        if entry_id in seen:
            raise StoreParseError(f"duplicate id {entry_id!r}", lineno, path)
        seen.add(entry_id)
        parts = raw.split(",")
        if len(parts) != n_bins:
            raise StoreParseError(f"record has {len(parts)} bins, header declares {n_bins}", lineno, path)
        if not all(p.isdigit() and p.isascii() for p in parts):
            raise StoreParseError("bins must be unsigned decimal integers", lineno, path)
        entries.append(IndexEntry(entry_id, category, FeatureVector(kind, [int(p) for p in parts])))
    return FeatureIndex(kind, tuple(entries))

"""3x3 neighborhood pattern kernels: LBP and the LNIP sign/magnitude pair.

Neighbor ``i`` (1-based) of the center pixel sits at a fixed offset::

    I8 I1 I2
    I7 Ic I3
    I6 I5 I4

Odd neighbors (edge-adjacent to the center) have four ring-adjacent
neighbors, even ones (corners) have two.

Each kernel exists twice: a scalar function over a :class:`Window3x3`,
useful for inspection, and a vectorized sweep used by :func:`pattern_map`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError
from .imaging import MIN_SIDE, as_gray

# (row, col) offset of neighbor i, stored at index i - 1
OFFSETS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
N_BINS = 256


class Kind(str, enum.Enum):
    LBP = "LBP"
    LNIP_S = "LNIP_S"
    LNIP_M = "LNIP_M"
    LNIP = "LNIP"

    @property
    def n_bins(self) -> int:
        return 2 * N_BINS if self is Kind.LNIP else N_BINS

    @classmethod
    def parse(cls, value) -> "Kind":
        """Accept ``Kind`` members and names such as ``"lnip-s"``."""
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise InvalidInputError(f"unknown descriptor kind {value!r} (choose from {choices})") from None


def _wrap8(x: int) -> int:
    # mod results of 0 denote neighbor 8
    return x % 8 or 8


def adjacency_set(i: int) -> tuple[int, ...]:
    """Indices of the ring neighbors adjacent to neighbor ``i``.

    >>> adjacency_set(1)
    (7, 8, 2, 3)
    >>> adjacency_set(8)
    (7, 1)
    """
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= 8:
        raise InvalidInputError(f"neighbor index must be in 1..8, got {i!r}")
    i = int(i)
    if i % 2:
        return (1 + (i + 5) % 7, 1 + (i + 6) % 9, i + 1, _wrap8(i + 2))
    return (i - 1, _wrap8(i + 1))


ADJACENCY = {i: adjacency_set(i) for i in range(1, 9)}


@dataclass(frozen=True)
class Window3x3:
    """Center intensity plus neighbors ``I_1..I_8`` in the module layout."""

    center: int
    neighbors: tuple[int, ...] = field()

    def __post_init__(self):
        if len(self.neighbors) != 8:
            raise InvalidInputError(f"a window has 8 neighbors, got {len(self.neighbors)}")
        values = (self.center, *self.neighbors)
        if any(not 0 <= int(v) <= 255 for v in values):
            raise InvalidInputError("window intensities must lie in 0..255")
        object.__setattr__(self, "center", int(self.center))
        object.__setattr__(self, "neighbors", tuple(int(v) for v in self.neighbors))

    @classmethod
    def from_array(cls, block) -> "Window3x3":
        block = np.asarray(block)
        if block.shape != (3, 3):
            raise InvalidInputError(f"expected a 3x3 block, got shape {block.shape}")
        return cls(int(block[1, 1]), tuple(int(block[1 + dr, 1 + dc]) for dr, dc in OFFSETS))

    def to_array(self) -> np.ndarray:
        block = np.empty((3, 3), dtype=np.uint8)
        block[1, 1] = self.center
        for (dr, dc), v in zip(OFFSETS, self.neighbors):
            block[1 + dr, 1 + dc] = v
        return block

    def __getitem__(self, i: int) -> int:
        """1-based neighbor access, ``w[1]`` is ``I_1``."""
        if not 1 <= i <= 8:
            raise IndexError(i)
        return self.neighbors[i - 1]


def _pack(bits) -> int:
    return sum(int(b) << k for k, b in enumerate(bits))


def lbp_code(w: Window3x3) -> int:
    return _pack(w[i] >= w.center for i in range(1, 9))


def sign_bit(w: Window3x3, i: int) -> int:
    """LNIP sign bit for neighbor ``i``.

    Compares the adjacent set against ``I_i`` and against the center, XORs
    the two bit strings and fires when at least half the positions differ.
    """
    adj = ADJACENCY[i]
    own = [w[k] >= w[i] for k in adj]
    ctr = [w[k] >= w.center for k in adj]
    changes = sum(a != b for a, b in zip(own, ctr))
    return int(2 * changes >= len(adj))


def lnip_s_code(w: Window3x3) -> int:
    return _pack(sign_bit(w, i) for i in range(1, 9))


def mean_deviation(w: Window3x3, i: int) -> Fraction:
    """Mean absolute deviation of neighbor ``i``'s adjacent set about ``I_i``."""
    adj = ADJACENCY[i]
    return Fraction(sum(abs(w[k] - w[i]) for k in adj), len(adj))


def center_threshold(w: Window3x3) -> Fraction:
    """Mean absolute deviation of the eight neighbors about the center."""
    return Fraction(sum(abs(v - w.center) for v in w.neighbors), 8)


def magnitude_bit(w: Window3x3, i: int) -> int:
    return int(mean_deviation(w, i) >= center_threshold(w))


def lnip_m_code(w: Window3x3) -> int:
    return _pack(magnitude_bit(w, i) for i in range(1, 9))


# ---------------------------------------------------------------------------
# vectorized sweeps
# ---------------------------------------------------------------------------

def _planes(img: np.ndarray):
    """Center plane and neighbor planes ``{i: I_i}`` over interior pixels."""
    h, w = img.shape
    src = img.astype(np.int32)
    center = src[1:h - 1, 1:w - 1]
    nb = {i: src[1 + dr:h - 1 + dr, 1 + dc:w - 1 + dc] for i, (dr, dc) in enumerate(OFFSETS, 1)}
    return center, nb


def _lbp_map(center, nb):
    code = np.zeros(center.shape, dtype=np.int32)
    for i in range(1, 9):
        code |= (nb[i] >= center).astype(np.int32) << (i - 1)
    return code


def _lnip_s_map(center, nb):
    code = np.zeros(center.shape, dtype=np.int32)
    ge_center = {k: nb[k] >= center for k in nb}
    for i in range(1, 9):
        adj = ADJACENCY[i]
        changes = sum(((nb[k] >= nb[i]) != ge_center[k]).astype(np.int32) for k in adj)
        code |= (2 * changes >= len(adj)).astype(np.int32) << (i - 1)
    return code


def _lnip_m_map(center, nb):
    # M_i >= T_c  <=>  8 * sum|S_i - I_i| >= M * sum|I_j - I_c|, all in integers
    code = np.zeros(center.shape, dtype=np.int32)
    spread = sum(np.abs(nb[i] - center) for i in range(1, 9))
    for i in range(1, 9):
        adj = ADJACENCY[i]
        dev = sum(np.abs(nb[k] - nb[i]) for k in adj)
        code |= (8 * dev >= len(adj) * spread).astype(np.int32) << (i - 1)
    return code


_SWEEPS = {
    Kind.LBP: _lbp_map,
    Kind.LNIP_S: _lnip_s_map,
    Kind.LNIP_M: _lnip_m_map,
}
_SCALAR = {lbp_code: Kind.LBP, lnip_s_code: Kind.LNIP_S, lnip_m_code: Kind.LNIP_M}


def pattern_map(image, kernel) -> np.ndarray:
    """Per-pixel codes of ``kernel`` over the interior of ``image``.

    Parameters
    ----------
    image : array_like
        Gray image, at least 3x3.
    kernel : Kind, str or callable
        ``Kind.LBP``, ``Kind.LNIP_S``, ``Kind.LNIP_M`` (or their names), or
        one of the scalar functions :func:`lbp_code`, :func:`lnip_s_code`,
        :func:`lnip_m_code`.

    Returns
    -------
    numpy.ndarray
        ``(H - 2, W - 2)`` uint8 array. Border pixels have no full window
        and get no code.
    """
    kind = _SCALAR.get(kernel) if callable(kernel) else Kind.parse(kernel)
    if kind not in _SWEEPS:
        raise InvalidInputError(f"pattern_map needs a single-pattern kernel, got {kernel!r}")
    img = as_gray(image)
    if img.shape[0] < MIN_SIDE or img.shape[1] < MIN_SIDE:
        raise InvalidInputError(f"image must be at least 3x3, got {img.shape[1]}x{img.shape[0]}")
    center, nb = _planes(img)
    return _SWEEPS[kind](center, nb).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Histogram feature of one image.

    ``bins`` holds raw counts (int64); LNIP vectors are the sign histogram
    followed by the magnitude histogram.
    """

    kind: Kind
    bins: np.ndarray

    def __post_init__(self):
        kind = Kind.parse(self.kind)
        bins = np.array(self.bins, dtype=np.int64)
        if bins.ndim != 1 or len(bins) != kind.n_bins:
            raise InvalidInputError(f"{kind.value} features have {kind.n_bins} bins, got shape {bins.shape}")
        if (bins < 0).any():
            raise InvalidInputError("histogram counts must be non-negative")
        bins.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "bins", bins)

    def __len__(self):
        return len(self.bins)

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.kind is other.kind and np.array_equal(self.bins, other.bins)

    __hash__ = None

    def normalized(self) -> np.ndarray:
        """L1-normalized bins as float64 (each histogram half sums to 1)."""
        parts = np.split(self.bins.astype(np.float64), len(self.bins) // N_BINS)
        return np.concatenate([p / p.sum() if p.sum() else p for p in parts])


def histogram(codes) -> np.ndarray:
    """256-bin count of the codes in a pattern map."""
    codes = np.asarray(codes)
    if codes.size == 0:
        raise InvalidInputError("cannot histogram an empty pattern map")
    return np.bincount(codes.ravel().astype(np.intp), minlength=N_BINS).astype(np.int64)


def extract_feature(image, kind=Kind.LNIP) -> FeatureVector:
    """Histogram feature of ``image`` for the given descriptor kind."""
    kind = Kind.parse(kind)
    if kind is Kind.LNIP:
        bins = np.concatenate([
            histogram(pattern_map(image, Kind.LNIP_S)),
            histogram(pattern_map(image, Kind.LNIP_M)),
        ])
    else:
        bins = histogram(pattern_map(image, kind))
    return FeatureVector(kind, bins)

"""Image decoding, grayscale conversion and dataset preparation.

Gray images are plain 2-D ``uint8`` numpy arrays indexed ``[row, col]``.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import EmptyDatasetError, InvalidInputError

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = frozenset(
    {".png", ".jpg", ".jpeg", ".pgm", ".ppm", ".pbm", ".pnm",
     ".bmp", ".gif", ".tif", ".tiff"}
)
MANIFEST_NAME = "manifest.tsv"
MIN_SIDE = 3


@dataclass(frozen=True)
class DatasetItem:
    """A labeled gray image; ``id`` is ``<category>/<filename>[#tile]``."""

    id: str
    category: str
    image: np.ndarray


def as_gray(image) -> np.ndarray:
    """Validate and return ``image`` as a 2-D uint8 array.

    Integer arrays in 0..255 are accepted and cast; anything else raises
    :class:`InvalidInputError`.
    """
    arr = np.asarray(image)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInputError(f"expected a non-empty 2-D gray image, got shape {arr.shape}")
    if arr.dtype == np.uint8:
        return arr
    if not np.issubdtype(arr.dtype, np.integer):
        raise InvalidInputError(f"gray image must hold integers, got {arr.dtype}")
    if arr.min() < 0 or arr.max() > 255:
        raise InvalidInputError("gray intensities must lie in 0..255")
    return arr.astype(np.uint8)


def to_grayscale(image) -> np.ndarray:
    """Convert an RGB(A) image to 8-bit luminance with BT.601 weights.

    Parameters
    ----------
    image : array_like
        ``(H, W, 3)`` or ``(H, W, 4)`` array of 8-bit channels. Alpha is
        ignored. A 2-D array is taken to be gray already and is returned
        unchanged.

    Returns
    -------
    numpy.ndarray
        ``(H, W)`` uint8 array with
        ``round(0.299 R + 0.587 G + 0.114 B)``, halves rounded up.
    """
    arr = np.asarray(image)
    if arr.size == 0:
        raise InvalidInputError("cannot convert an empty image")
    if arr.ndim == 2:
        return as_gray(arr)
    if arr.ndim != 3 or arr.shape[2] not in (3, 4):
        raise InvalidInputError(f"expected (H, W, 3|4) color image, got shape {arr.shape}")
    rgb = arr[..., :3].astype(np.int64)
    if rgb.min() < 0 or rgb.max() > 255:
        raise InvalidInputError("color channels must lie in 0..255")
    # integer weights in thousandths keep the rounding exact
    luma = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return np.clip(luma, 0, 255).astype(np.uint8)


def read_image(path) -> np.ndarray:
    """Decode an image file into a gray uint8 array."""
    with Image.open(path) as im:
        im.load()
        if im.mode == "L":
            return np.array(im, dtype=np.uint8)
        if im.mode in ("1", "P", "LA", "PA", "CMYK", "YCbCr", "HSV", "LAB"):
            im = im.convert("RGBA" if "A" in im.mode else "RGB")
        if im.mode in ("I;16", "I;16B", "I;16L", "I"):
            raise InvalidInputError(f"{path}: only 8-bit images are supported (mode {im.mode})")
        return to_grayscale(np.array(im))


def write_image(path, image) -> None:
    Image.fromarray(as_gray(image), mode="L").save(path)


def tile(image, tile_w: int, tile_h: int) -> list[np.ndarray]:
    """Cut ``image`` into non-overlapping ``tile_w`` x ``tile_h`` tiles.

    Tiles come back in row-major order. Columns and rows left over when
    the image size is not a multiple of the tile size are dropped.
    """
    img = as_gray(image)
    height, width = img.shape
    if tile_w < MIN_SIDE or tile_h < MIN_SIDE:
        raise InvalidInputError(f"tile sides must be >= {MIN_SIDE}, got {tile_w}x{tile_h}")
    if tile_w > width or tile_h > height:
        raise InvalidInputError(
            f"tile {tile_w}x{tile_h} is larger than image {width}x{height}"
        )
    tiles = []
    for r in range(height // tile_h):
        for c in range(width // tile_w):
            block = img[r * tile_h:(r + 1) * tile_h, c * tile_w:(c + 1) * tile_w]
            tiles.append(block.copy())
    return tiles


def untile(tiles, cols: int) -> np.ndarray:
    """Reassemble equally sized row-major tiles into one image."""
    if not tiles or len(tiles) % cols:
        raise InvalidInputError("tile count must be a positive multiple of cols")
    rows = [np.hstack(tiles[i:i + cols]) for i in range(0, len(tiles), cols)]
    return np.vstack(rows)


def parse_tile_dims(text: str) -> tuple[int, int]:
    """Parse ``"128x128"`` (or a bare ``"128"``) into ``(width, height)``."""
    parts = text.lower().replace("*", "x").split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise InvalidInputError(f"bad tile size {text!r}; expected WxH") from None
    if len(dims) == 1:
        dims = dims * 2
    if len(dims) != 2 or min(dims) < MIN_SIDE:
        raise InvalidInputError(f"bad tile size {text!r}; expected WxH with sides >= {MIN_SIDE}")
    return dims[0], dims[1]


def _read_manifest(root: Path, manifest: Path) -> list[tuple[str, Path]]:
    entries = []
    for lineno, line in enumerate(manifest.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0] or not fields[1].strip():
            raise InvalidInputError(f"{manifest}:{lineno}: expected '<path>\\t<category>'")
        entries.append((fields[1].strip(), root / fields[0]))
    return entries


def _scan_categories(root: Path) -> list[tuple[str, Path]]:
    entries = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(sub.iterdir()):
            if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES:
                entries.append((sub.name, f))
    return entries


def _load_one(category: str, path: Path, tiling):
    try:
        img = read_image(path)
    except (OSError, UnidentifiedImageError, InvalidInputError) as exc:
        warnings.warn(f"skipping unreadable image {path}: {exc}", stacklevel=3)
        return []
    base = f"{category}/{path.name}"
    if tiling is None:
        return [DatasetItem(base, category, img)]
    try:
        tiles = tile(img, *tiling)
    except InvalidInputError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None
    return [DatasetItem(f"{base}#{k}", category, t) for k, t in enumerate(tiles)]


def load_dataset(root, tiling: tuple[int, int] | None = None,
                 threads: int | None = None) -> list[DatasetItem]:
    """Load a labeled image collection.

    Categories come from ``manifest.tsv`` in ``root`` when present
    (``<relative-path>\\t<category>`` per line), otherwise from the names
    of ``root``'s subdirectories. Items are ordered by file path, then by
    tile index. Unreadable files are skipped with a warning.

    Parameters
    ----------
    root : path-like
        Dataset directory.
    tiling : (int, int), optional
        ``(tile_w, tile_h)``; when given each image is split by :func:`tile`.
    threads : int, optional
        Decoder threads. The result order does not depend on it.
    """
    root = Path(root)
    if not root.is_dir():
        raise InvalidInputError(f"dataset root {root} is not a directory")
    manifest = root / MANIFEST_NAME
    if manifest.is_file():
        entries = _read_manifest(root, manifest)
    else:
        entries = _scan_categories(root)
    entries.sort(key=lambda e: (e[1].relative_to(root).as_posix(), e[0]))

    with ThreadPoolExecutor(max_workers=threads) as pool:
        loaded = list(pool.map(lambda e: _load_one(e[0], e[1], tiling), entries))
    items = [item for group in loaded for item in group]
    if not items:
        raise EmptyDatasetError(f"no images found under {root}")

    seen = set()
    for item in items:
        if item.id in seen:
            raise InvalidInputError(f"duplicate image id {item.id!r}")
        seen.add(item.id)
    log.info("loaded %d items from %s", len(items), root)
    return items

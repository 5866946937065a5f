"""Command-line interface: ``lnip {tile,index,query,evaluate}``.

Settings resolve as command-line flag, then ``--config`` JSON file, then
built-in default. ``LNIP_THREADS`` stands in for ``--threads`` when
neither flag nor config sets it.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .descriptors import Kind, extract_feature
from .errors import InvalidInputError, StoreParseError
from .evaluation import emit_curves, emit_report, evaluate
from .imaging import (IMAGE_SUFFIXES, MANIFEST_NAME, load_dataset, parse_tile_dims, read_image,
                      tile, write_image)
from .retrieval import build_index, load_index, query, save_index
from .similarity import Metric

log = logging.getLogger("lnip")

KIND_CHOICES = ("lbp", "lnip-s", "lnip-m", "lnip")
METRIC_CHOICES = tuple(m.cli_name for m in Metric)


@dataclass
class RunConfig:
    command: str
    dataset_root: Path | None = None
    store_paths: list[Path] = field(default_factory=list)
    kind: Kind = Kind.LNIP
    kind_given: bool = False
    metrics: list[Metric] = field(default_factory=lambda: [Metric.D1])
    n_list: list[int] | None = None
    tile_dims: tuple[int, int] | None = None
    normalize: bool = False
    output_path: Path | None = None
    curves_path: Path | None = None
    threads: int | None = None
    top_n: int = 10
    query_image: Path | None = None

    @property
    def store_path(self) -> Path | None:
        return self.store_paths[0] if self.store_paths else None


class UsageError(Exception):
    """Bad or missing command-line settings."""


def parse_n_list(text) -> list[int]:
    """Parse ``"25,30"``, ``"25:70:5"`` (inclusive) or a JSON list of ints."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ":" in part:
                bits = [int(b) for b in part.split(":")]
                if len(bits) not in (2, 3) or (len(bits) == 3 and bits[2] < 1):
                    raise ValueError
                step = bits[2] if len(bits) == 3 else 1
                out.extend(range(bits[0], bits[1] + 1, step))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"bad retrieval count list {text!r}; use e.g. 25,30 or 25:70:5") from None
    if not out or min(out) < 1:
        raise UsageError(f"retrieval counts must be positive, got {text!r}")
    return out


def _metric_list(text) -> list[Metric]:
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    try:
        return [Metric.parse(m) for m in items if str(m).strip()]
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None


def _positive_int(text) -> int:
    try:
        value = int(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with default settings (flags override it)")
    common.add_argument("--threads", type=_positive_int,
                        help="worker threads (default: $LNIP_THREADS or machine parallelism)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress and timings")

    parser = argparse.ArgumentParser(
        prog="lnip", description="LNIP / LBP texture descriptors and retrieval evaluation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("tile", parents=[common], help="cut source images into non-overlapping tiles",
                       description="Cut every source image into WxH tiles written as PNG under --out, "
                                   "one subdirectory per category. Images directly in the dataset "
                                   "root each form their own category named after the file.")
    p.add_argument("--dataset", type=Path, help="source directory")
    p.add_argument("--tile", help="tile size WxH, e.g. 128x128")
    p.add_argument("--out", type=Path, help="output directory")

    p = sub.add_parser("index", parents=[common], help="extract features into a store file",
                       description="Extract one feature per dataset image and write a feature store.")
    p.add_argument("--dataset", type=Path, help="dataset directory (category subfolders or manifest.tsv)")
    p.add_argument("--store", type=Path, help="feature store to write")
    p.add_argument("--kind", choices=KIND_CHOICES, help="descriptor (default: lnip)")
    p.add_argument("--tile", help="tile images to WxH before extraction")

    p = sub.add_parser("query", parents=[common], help="rank a store against one image",
                       description="Print the closest store entries to a query image.")
    p.add_argument("image", type=Path, help="query image file")
    p.add_argument("--store", type=Path, help="feature store to search")
    p.add_argument("--kind", choices=KIND_CHOICES, help="expected descriptor; must match the store")
    p.add_argument("--metric", choices=METRIC_CHOICES, help="distance (default: d1)")
    p.add_argument("--top", type=_positive_int, help="number of results (default: 10)")
    p.add_argument("--normalize", action="store_true", default=None,
                   help="L1-normalize histograms before comparing")

    p = sub.add_parser("evaluate", parents=[common], help="precision/recall over a whole store",
                       description="Use every store entry as a query and report precision, recall "
                                   "and ARR per category and in total.")
    p.add_argument("--store", type=Path, action="append",
                   help="feature store; repeat to compare descriptors")
    p.add_argument("--metric", help="distance or comma list, e.g. d1,euclidean (default: d1)")
    p.add_argument("--n", help="retrieval counts, e.g. 25:70:5 or 16,32 (default: largest category size)")
    p.add_argument("--out", type=Path, help="CSV report path")
    p.add_argument("--curves", type=Path, help="optional CSV of (n, P_total, R_total) points")
    p.add_argument("--normalize", action="store_true", default=None,
                   help="L1-normalize histograms before comparing")
    return parser


_CONFIG_KEYS = {"dataset", "store", "kind", "metric", "n", "tile", "out", "curves",
                "threads", "normalize", "top"}


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys in {path}: {', '.join(sorted(unknown))}")
    return data


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    """Merge parsed flags with the config file and defaults."""
    file_cfg = _load_config(args.config)

    def pick(name, key=None):
        value = getattr(args, name, None)
        if value is not None:
            return value
        key = key or name
        if key in file_cfg and hasattr(args, name):
            return file_cfg[key]
        return None

    cfg = RunConfig(command=args.command)
    if (v := pick("dataset")) is not None:
        cfg.dataset_root = Path(v)
    if (v := pick("store")) is not None:
        cfg.store_paths = [Path(p) for p in (v if isinstance(v, list) else [v])]
    if (v := pick("kind")) is not None:
        try:
            cfg.kind = Kind.parse(v)
        except InvalidInputError as exc:
            raise UsageError(str(exc)) from None
        cfg.kind_given = True
    if (v := pick("metric")) is not None:
        cfg.metrics = _metric_list(v)
        if args.command != "evaluate" and len(cfg.metrics) != 1:
            raise UsageError("query takes a single --metric")
    if (v := pick("n")) is not None:
        cfg.n_list = parse_n_list(v)
    if (v := pick("tile")) is not None:
        try:
            cfg.tile_dims = parse_tile_dims(str(v))
        except InvalidInputError as exc:
            raise UsageError(str(exc)) from None
    if (v := pick("out")) is not None:
        cfg.output_path = Path(v)
    if (v := pick("curves")) is not None:
        cfg.curves_path = Path(v)
    if (v := pick("normalize")) is not None:
        cfg.normalize = bool(v)
    if (v := pick("top")) is not None:
        cfg.top_n = int(v)
    if (v := pick("image")) is not None:
        cfg.query_image = Path(v)

    threads = pick("threads")
    if threads is None and environ.get("LNIP_THREADS"):
        threads = environ["LNIP_THREADS"]
    if threads is not None:
        try:
            cfg.threads = _positive_int(threads)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"threads: {exc}") from None
    return cfg


def _require(value, flag, command):
    if value is None or value == []:
        raise UsageError(f"{command} needs {flag}")
    return value


def _tile_sources(root: Path):
    """``(category, path)`` pairs: category subfolders plus loose root files."""
    manifest = root / MANIFEST_NAME
    if manifest.is_file():
        pairs = []
        for line in manifest.read_text(encoding="utf-8").splitlines():
            if line.strip() and not line.startswith("#"):
                rel, cat = line.split("\t", 1)
                pairs.append((cat.strip(), root / rel))
        return sorted(pairs, key=lambda e: e[1].relative_to(root).as_posix())
    pairs = []
    for entry in sorted(root.iterdir()):
        if entry.is_dir():
            pairs.extend((entry.name, f) for f in sorted(entry.iterdir())
                         if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES)
        elif entry.suffix.lower() in IMAGE_SUFFIXES:
            pairs.append((entry.stem, entry))
    return pairs


def cmd_tile(cfg: RunConfig) -> int:
    root = _require(cfg.dataset_root, "--dataset", "tile")
    dims = _require(cfg.tile_dims, "--tile WxH", "tile")
    out = _require(cfg.output_path, "--out", "tile")
    if not root.is_dir():
        raise InvalidInputError(f"dataset root {root} is not a directory")
    sources = _tile_sources(root)
    if not sources:
        raise InvalidInputError(f"no images found under {root}")
    written = 0
    for category, path in sources:
        tiles = tile(read_image(path), *dims)
        dest = out / category
        dest.mkdir(parents=True, exist_ok=True)
        width = max(2, len(str(len(tiles) - 1)))
        for k, t in enumerate(tiles):
            write_image(dest / f"{path.stem}_{k:0{width}d}.png", t)
        written += len(tiles)
    print(f"wrote {written} tiles from {len(sources)} images to {out}")
    return 0


def cmd_index(cfg: RunConfig) -> int:
    root = _require(cfg.dataset_root, "--dataset", "index")
    store = _require(cfg.store_path, "--store", "index")
    items = load_dataset(root, cfg.tile_dims, threads=cfg.threads)
    index = build_index(items, cfg.kind, threads=cfg.threads)
    save_index(index, store)
    print(f"indexed {len(index)} images, {index.kind.value} features of length {index.kind.n_bins} -> {store}")
    return 0


def cmd_query(cfg: RunConfig) -> int:
    store = _require(cfg.store_path, "--store", "query")
    index = load_index(store)
    if cfg.kind_given and cfg.kind is not index.kind:
        raise InvalidInputError(f"store {store} holds {index.kind.value} features, --kind asked for {cfg.kind.value}")
    feature = extract_feature(read_image(cfg.query_image), index.kind)
    metric = cfg.metrics[0]
    result = query(index, feature, metric, min(cfg.top_n, len(index)), normalize=cfg.normalize)
    print("rank\tid\tcategory\tdistance")
    for r, hit in enumerate(result.ranked, 1):
        print(f"{r}\t{hit.id}\t{hit.category}\t{hit.distance:.6f}")
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    stores = _require(cfg.store_paths, "--store", "evaluate")
    indexes = [load_index(p) for p in stores]
    reports = []
    for index in indexes:
        n_list = cfg.n_list or [max(index.category_sizes().values(), default=1)]
        for metric in cfg.metrics:
            reports.extend(evaluate(index, metric, n_list, normalize=cfg.normalize, threads=cfg.threads))
    if cfg.output_path is not None:
        emit_report(reports, cfg.output_path)
    if cfg.curves_path is not None:
        emit_curves(reports, cfg.curves_path)
    print(f"{'kind':<8}{'metric':<12}{'n':>5}{'P_total':>10}{'R_total':>10}")
    for r in reports:
        print(f"{r.kind.value:<8}{r.metric.cli_name:<12}{r.n_retrieved:>5}{r.p_total:>10.4f}{r.r_total:>10.4f}")
    if cfg.output_path is not None:
        print(f"report written to {cfg.output_path}")
    return 0


COMMANDS = {"tile": cmd_tile, "index": cmd_index, "query": cmd_query, "evaluate": cmd_evaluate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        parser.exit(2, f"lnip {args.command}: error: {exc}\n")
    except (InvalidInputError, StoreParseError, OSError) as exc:
        print(f"lnip {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Stage one of the pipeline: windowing, hooks, caching, and table assembly.

Per-score work (parse or cache load, hooks, harmony pairing, feature
modules) fans out over a thread pool; rows are assembled in input order so
parallel and serial runs produce the same table.
"""

from __future__ import annotations

import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import cache as score_cache
from . import features as stock  # noqa: F401  (imports register the stock modules)
from . import midi as midi_importer
from . import musicxml as musicxml_parser
from .features import FEATURE_ALIASES, STOCK_FEATURES
from .harmony import HarmonyError, attach_annotations, parse_harmony_file
from .model import Score, slice_window
from .registry import (
    RegistryError,
    feature_modules,
    get_hook,
    resolve_feature_order,
)
from .table import IDENTITY_COLUMNS, FeatureTable

log = logging.getLogger(__name__)

SCORE_EXTENSIONS = (".musicxml", ".xml", ".mxl", ".mid", ".midi")
HARMONY_SUFFIX = ".harmony.tsv"

_SCOPED_PREFIXES = ("Part", "Sound", "Family", "Texture_", "Score_")


class ConfigError(ValueError):
    """Invalid extractor configuration."""


@dataclass
class ExtractorConfig:
    """Declarative settings for the extraction stage."""

    xml_dir: Optional[Path] = None
    harmony_dir: Optional[Path] = None
    features: list[str] = field(default_factory=lambda: list(STOCK_FEATURES))
    basic_modules: list[str] = field(default_factory=lambda: ["scoring"])
    window_size: Optional[int] = None
    window_overlap: int = 0
    cache_dir: Optional[Path] = None
    hooks: list[str] = field(default_factory=list)
    parallelism: int = 0  # 0 -> cpu count

    def __post_init__(self):
        if self.xml_dir is not None:
            self.xml_dir = Path(self.xml_dir)
        if self.harmony_dir is not None:
            self.harmony_dir = Path(self.harmony_dir)
        if self.cache_dir is not None:
            self.cache_dir = Path(self.cache_dir)

    def requested_modules(self) -> list[str]:
        names = list(self.basic_modules) + list(self.features)
        seen: dict[str, None] = {}
        for name in names:
            seen.setdefault(FEATURE_ALIASES.get(name, name))
        return list(seen)

    def validate(self) -> None:
        if self.window_size is not None:
            if self.window_size < 1:
                raise ConfigError("window_size must be >= 1")
            if not 0 <= self.window_overlap < self.window_size:
                raise ConfigError("window_overlap must satisfy 0 <= overlap < window_size")
        elif self.window_overlap:
            raise ConfigError("window_overlap requires window_size")
        registry = feature_modules()
        for name in self.requested_modules():
            if name not in registry:
                raise ConfigError(f"unknown feature module {name!r}")
        for hook in self.hooks:
            try:
                get_hook(hook)
            except RegistryError as exc:
                raise ConfigError(str(exc)) from exc

    @property
    def jobs(self) -> int:
        return self.parallelism if self.parallelism > 0 else (os.cpu_count() or 1)


@dataclass
class RunReport:
    """Per-run outcome ledger: failures, warnings, and cache statistics."""

    failures: list[dict] = field(default_factory=list)
    warnings: list[dict] = field(default_factory=list)
    parsed: int = 0
    cache_hits: int = 0
    cache_writes: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add_failure(self, path, stage: str, error: Exception | str) -> None:
        with self._lock:
            self.failures.append({"path": str(path), "stage": stage, "error": str(error)})

    def add_warning(self, path, message: str) -> None:
        with self._lock:
            self.warnings.append({"path": str(path), "message": message})

    def count(self, counter: str, n: int = 1) -> None:
        with self._lock:
            setattr(self, counter, getattr(self, counter) + n)

    def to_json_lines(self) -> str:
        import json

        lines = [json.dumps({"kind": "failure", **f}) for f in self.failures]
        lines += [json.dumps({"kind": "warning", **w}) for w in self.warnings]
        lines.append(
            json.dumps(
                {
                    "kind": "summary",
                    "parsed": self.parsed,
                    "cache_hits": self.cache_hits,
                    "cache_writes": self.cache_writes,
                    "failures": len(self.failures),
                }
            )
        )
        return "\n".join(lines) + "\n"


def plan_windows(num_measures: int, size: int, overlap: int) -> list[tuple[int, int]]:
    """(start, length) covering every measure; stride is size - overlap and
    the final window may be clipped but always adds a new measure."""
    if num_measures < 1:
        raise ConfigError("num_measures must be >= 1")
    if size < 1:
        raise ConfigError("window size must be >= 1")
    if not 0 <= overlap < size:
        raise ConfigError("overlap must satisfy 0 <= overlap < size")
    stride = size - overlap
    starts = [1]
    while starts[-1] + stride <= num_measures - overlap:
        starts.append(starts[-1] + stride)
    return [(s, min(size, num_measures - s + 1)) for s in starts]


def run_hooks(score: Score, hooks: Sequence[Callable[[Score], Score]]) -> Score:
    """Apply post-parse hooks in registration order (composition f, then g)."""
    for hook in hooks:
        score = hook(score)
    return score


def _parse_bytes(path: Path, data: bytes):
    suffix = path.suffix.lower()
    stem = path.name[: -len(path.suffix)] if path.suffix else path.name
    if suffix in (".xml", ".musicxml", ".mxl"):
        return (
            musicxml_parser.parse_musicxml(data, source_id=stem),
            musicxml_parser.PARSER_ID,
            musicxml_parser.PARSER_VERSION,
        )
    if suffix in (".mid", ".midi"):
        return (
            midi_importer.import_midi(data, source_id=stem),
            midi_importer.PARSER_ID,
            midi_importer.PARSER_VERSION,
        )
    raise ConfigError(f"unsupported score file extension {suffix!r}")


def _parser_identity(path: Path) -> tuple[str, str]:
    if path.suffix.lower() in (".mid", ".midi"):
        return midi_importer.PARSER_ID, midi_importer.PARSER_VERSION
    return musicxml_parser.PARSER_ID, musicxml_parser.PARSER_VERSION


def load_or_parse(
    path, config: ExtractorConfig, report: Optional[RunReport] = None
) -> Score:
    """Cache-aware parse. Cached entries already carry hook effects, so hooks
    are only run on a fresh parse; cache corruption falls back to reparsing."""
    path = Path(path)
    data = path.read_bytes()
    parser_id, parser_version = _parser_identity(path)
    key = score_cache.cache_key(data, parser_id, parser_version)

    if config.cache_dir is not None:
        cached = score_cache.load_score(config.cache_dir, key)
        if cached is not None:
            if report:
                report.count("cache_hits")
            return cached

    (score, diags), _pid, _pver = _parse_bytes(path, data)
    if report:
        report.count("parsed")
        for location, message in diags.warnings:
            report.add_warning(path, f"{location}: {message}")

    hooks = [get_hook(name) for name in config.hooks]
    score = run_hooks(score, hooks)

    if config.cache_dir is not None:
        score_cache.store_score(config.cache_dir, key, score)
        if report:
            report.count("cache_writes")
    return score


def _find_harmony_file(path: Path, config: ExtractorConfig) -> Optional[Path]:
    stem = path.name[: -len(path.suffix)] if path.suffix else path.name
    directory = config.harmony_dir if config.harmony_dir is not None else path.parent
    candidate = directory / f"{stem}{HARMONY_SUFFIX}"
    return candidate if candidate.is_file() else None


def _scoped_name(name: str) -> str:
    if name in IDENTITY_COLUMNS or name.startswith(_SCOPED_PREFIXES):
        return name
    return f"Score_{name}"


def extract_unit(score: Score, order: Sequence[str], registry) -> dict:
    """Run feature modules over one score or window; returns the row cells
    (identity columns excluded)."""
    row: dict = {}
    score_values: dict = {}
    part_values: dict[str, dict] = {p.part_id: {} for p in score.parts}
    for name in order:
        descriptor = registry[name]
        if descriptor.part_fn is not None:
            for part in score.parts:
                upstream = {**score_values, **part_values[part.part_id]}
                values = descriptor.part_fn(part, score, upstream) or {}
                for key, value in values.items():
                    if value is None:
                        continue
                    part_values[part.part_id][key] = value
                    row[f"Part{part.part_id}_{key}"] = value
        if descriptor.score_fn is not None:
            values = descriptor.score_fn(score, part_values, score_values) or {}
            for key, value in values.items():
                if value is None:
                    continue
                score_values[key] = value
                row[_scoped_name(key)] = value
    return row


def _score_units(score: Score, config: ExtractorConfig):
    if config.window_size is None:
        yield score, None
        return
    for start, length in plan_windows(score.num_measures, config.window_size, config.window_overlap):
        yield slice_window(score, start, length), (start, start + length - 1)


def _process_path(path: Path, config, order, registry, report: RunReport):
    try:
        score = load_or_parse(path, config, report)
    except Exception as exc:  # parse or hook failures stay per-file
        report.add_failure(path, "parse", exc)
        return []

    harmony_path = _find_harmony_file(path, config)
    if harmony_path is not None:
        try:
            annotations = parse_harmony_file(harmony_path.read_text("utf-8"))
            score = attach_annotations(score, annotations)
        except (HarmonyError, OSError) as exc:
            # keep the score, lose the annotations: harmony is a sidecar
            report.add_failure(harmony_path, "harmony", exc)

    rows = []
    try:
        for unit, window in _score_units(score, config):
            identity: dict = {"FileName": score.source_id}
            if window is not None:
                identity["WindowStart"], identity["WindowEnd"] = window
            rows.append({**identity, **extract_unit(unit, order, registry)})
    except Exception as exc:  # a feature crash must not kill the whole run
        report.add_failure(path, "features", exc)
        return []
    return rows


def extract(
    config: ExtractorConfig,
    paths: Sequence,
    report: Optional[RunReport] = None,
) -> FeatureTable:
    """Extract one row per score (or per window) across all input paths.

    Failures are collected into the report and the run continues; row order
    is (input order, window start) regardless of parallelism.
    """
    config.validate()
    report = report if report is not None else RunReport()
    registry = feature_modules()
    try:
        order = resolve_feature_order(registry, config.requested_modules())
    except RegistryError as exc:
        raise ConfigError(str(exc)) from exc

    paths = [Path(p) for p in paths]
    results: list[list[dict]] = [[] for _ in paths]
    jobs = min(config.jobs, max(len(paths), 1))
    if jobs <= 1:
        for i, path in enumerate(paths):
            results[i] = _process_path(path, config, order, registry, report)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(_process_path, path, config, order, registry, report): i
                for i, path in enumerate(paths)
            }
            for future, i in futures.items():
                results[i] = future.result()

    table = FeatureTable()
    for rows in results:
        for row in rows:
            table.append_row(row)
    return table

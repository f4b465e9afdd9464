"""Command-line front end: YAML config plus flag overrides, corpus walking,
table serialization, and the run report.

Exit codes: 0 full success, 1 configuration or fatal error, 2 partial
success (some scores failed; see the report).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .engine import (
    SCORE_EXTENSIONS,
    ConfigError,
    ExtractorConfig,
    RunReport,
    extract,
)
from .postprocess import MergeGroup, ProcessorConfig, process
from .table import FeatureTable

log = logging.getLogger(__name__)

OUTPUT_FORMATS = ("csv", "jsonl")

_EXTRACT_KEYS = {
    "xml_dir", "harmony_dir", "features", "basic_modules", "window_size",
    "window_overlap", "cache_dir", "hooks", "parallelism",
}
_PROCESS_KEYS = {
    "replace_missing_with_zero", "drop_columns", "merge_groups", "keep_raw_after_merge",
}
_TOP_KEYS = {"extract", "process", "output", "format", "report", "log_level"}


@dataclass
class RunConfig:
    extractor: ExtractorConfig = field(default_factory=ExtractorConfig)
    processor: ProcessorConfig = field(default_factory=ProcessorConfig)
    output_path: Optional[Path] = None
    output_format: str = "csv"
    report_path: Optional[Path] = None
    log_level: str = "WARNING"


def _expect(value, kinds, keypath: str):
    if not isinstance(value, kinds):
        names = "/".join(k.__name__ for k in (kinds if isinstance(kinds, tuple) else (kinds,)))
        raise ConfigError(f"{keypath}: expected {names}, got {type(value).__name__} ({value!r})")
    return value


def _as_int(value, keypath: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{keypath}: expected integer, got {value!r}")
    return value


def _as_name_list(value, keypath: str) -> list[str]:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    _expect(value, list, keypath)
    return [str(_expect(v, str, f"{keypath}[{i}]")) for i, v in enumerate(value)]


def _merge_groups(value, keypath: str) -> list[MergeGroup]:
    _expect(value, list, keypath)
    groups = []
    for i, item in enumerate(value):
        _expect(item, dict, f"{keypath}[{i}]")
        pattern = _expect(item.get("pattern", ""), str, f"{keypath}[{i}].pattern")
        target = item.get("target", item.get("target_prefix"))
        if not pattern or not isinstance(target, str) or not target:
            raise ConfigError(f"{keypath}[{i}]: needs 'pattern' and 'target'")
        stats = item.get("stats", ["mean"])
        groups.append(MergeGroup(pattern=pattern, target=target,
                                 stats=tuple(_as_name_list(stats, f"{keypath}[{i}].stats"))))
    return groups


def load_config(yaml_path: Optional[Path], overrides: Optional[dict] = None) -> RunConfig:
    """defaults <- YAML <- flag overrides, later layers winning per key."""
    config = RunConfig()
    if yaml_path is not None:
        try:
            raw = yaml.safe_load(Path(yaml_path).read_text("utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"bad YAML in {yaml_path}: {exc}") from exc
        if raw is None:
            raw = {}
        _expect(raw, dict, "config root")
        for key in raw:
            if key not in _TOP_KEYS:
                log.warning("unknown config key %r ignored", key)
        _apply_extract(config.extractor, raw.get("extract") or {}, "extract")
        _apply_process(config.processor, raw.get("process") or {}, "process")
        if "output" in raw:
            config.output_path = Path(_expect(raw["output"], str, "output"))
        if "format" in raw:
            config.output_format = _expect(raw["format"], str, "format")
        if "report" in raw:
            config.report_path = Path(_expect(raw["report"], str, "report"))
        if "log_level" in raw:
            config.log_level = _expect(raw["log_level"], str, "log_level")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in ("xml_dir", "harmony_dir", "cache_dir"):
            setattr(config.extractor, key, Path(value))
        elif key == "features":
            config.extractor.features = _as_name_list(value, "--features")
        elif key == "basic_modules":
            config.extractor.basic_modules = _as_name_list(value, "--basic-modules")
        elif key == "window_size":
            config.extractor.window_size = value
        elif key == "window_overlap":
            config.extractor.window_overlap = value
        elif key == "parallelism":
            config.extractor.parallelism = value
        elif key == "output":
            config.output_path = Path(value)
        elif key == "format":
            config.output_format = value
        elif key == "report":
            config.report_path = Path(value)
        elif key == "log_level":
            config.log_level = value
        else:
            raise ConfigError(f"unknown override {key!r}")

    if config.output_format not in OUTPUT_FORMATS:
        raise ConfigError(f"format must be one of {OUTPUT_FORMATS}, got {config.output_format!r}")
    return config


def _apply_extract(extractor: ExtractorConfig, section, keypath: str) -> None:
    _expect(section, dict, keypath)
    for key, value in section.items():
        path = f"{keypath}.{key}"
        if key not in _EXTRACT_KEYS:
            log.warning("unknown config key %r ignored", path)
            continue
        if key in ("xml_dir", "harmony_dir", "cache_dir"):
            setattr(extractor, key, Path(_expect(value, str, path)))
        elif key in ("features", "basic_modules", "hooks"):
            setattr(extractor, key, _as_name_list(value, path))
        elif key in ("window_size", "window_overlap", "parallelism"):
            setattr(extractor, key, _as_int(value, path))


def _apply_process(processor: ProcessorConfig, section, keypath: str) -> None:
    _expect(section, dict, keypath)
    for key, value in section.items():
        path = f"{keypath}.{key}"
        if key not in _PROCESS_KEYS:
            log.warning("unknown config key %r ignored", path)
            continue
        if key in ("replace_missing_with_zero", "drop_columns"):
            setattr(processor, key, _as_name_list(value, path))
        elif key == "merge_groups":
            processor.merge_groups = _merge_groups(value, path)
        elif key == "keep_raw_after_merge":
            processor.keep_raw_after_merge = bool(_expect(value, bool, path))


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # config errors exit 1, not argparse's 2
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="scorefeat",
        description="Extract musicological features from MusicXML/MIDI scores "
        "into a CSV or JSONL table.",
    )
    parser.add_argument("--config", type=Path, default=None, help="YAML config file")
    parser.add_argument("--xml-dir", dest="xml_dir", default=None,
                        help="directory holding the score files")
    parser.add_argument("--harmony-dir", dest="harmony_dir", default=None,
                        help="directory holding <stem>.harmony.tsv annotation files")
    parser.add_argument("--features", default=None,
                        help="comma-separated feature modules (default: all stock modules)")
    parser.add_argument("--window-size", dest="window_size", type=int, default=None,
                        help="measure-window length; omit for one row per score")
    parser.add_argument("--window-overlap", dest="window_overlap", type=int, default=None,
                        help="measures shared by consecutive windows (default 0)")
    parser.add_argument("--cache-dir", dest="cache_dir", default=None,
                        help="cache directory for parsed scores")
    parser.add_argument("--jobs", dest="parallelism", type=int, default=None,
                        help="parallel workers (default: cpu count)")
    parser.add_argument("--output", default=None, help="output file (default: stdout)")
    parser.add_argument("--format", default=None, choices=OUTPUT_FORMATS,
                        help="output format (default csv)")
    parser.add_argument("--report", default=None, help="write the JSON-lines run report here")
    parser.add_argument("--log-level", dest="log_level", default=None,
                        help="logging level (default WARNING)")
    return parser


def collect_score_paths(xml_dir: Path) -> list[Path]:
    paths = [
        p
        for p in xml_dir.rglob("*")
        if p.is_file() and p.suffix.lower() in SCORE_EXTENSIONS
    ]
    return sorted(paths, key=lambda p: p.as_posix())


def _serialize(table: FeatureTable, config: RunConfig) -> str:
    return table.to_csv() if config.output_format == "csv" else table.to_jsonl()


def run(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        overrides = {
            k: v for k, v in vars(args).items() if k != "config" and v is not None
        }
        config = load_config(args.config, overrides)
        logging.basicConfig(level=getattr(logging, config.log_level.upper(), logging.WARNING))

        if config.extractor.xml_dir is None:
            raise ConfigError("no input directory: pass --xml-dir or set extract.xml_dir")
        xml_dir = Path(config.extractor.xml_dir)
        if not xml_dir.is_dir():
            raise ConfigError(f"input directory {xml_dir} does not exist")
        paths = collect_score_paths(xml_dir)
        if not paths:
            raise ConfigError(f"no score files found under {xml_dir}")

        report = RunReport()
        table = extract(config.extractor, paths, report=report)
        table = process(table, config.processor)

        payload = _serialize(table, config)
        if config.output_path is not None:
            config.output_path.parent.mkdir(parents=True, exist_ok=True)
            config.output_path.write_text(payload, encoding="utf-8")
        else:
            sys.stdout.write(payload)

        report_text = report.to_json_lines()
        if config.report_path is not None:
            config.report_path.parent.mkdir(parents=True, exist_ok=True)
            config.report_path.write_text(report_text, encoding="utf-8")
        else:
            sys.stderr.write(report_text)

        return 2 if report.failures else 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # fatal, non-config
        log.exception("fatal error")
        print(f"fatal: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(run())

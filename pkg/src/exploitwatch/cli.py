"""Command-line driver: ingest -> ground truth -> features -> experiments.

Every command reads a TOML config (see ``docs/config.md``) and accepts a few
overrides. Exit codes: 0 success, 2 input or config error, 3 pipeline error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import learn
from .balance import SamplerConfig
from .evaluation import (
    cross_validate,
    derive_seed,
    paired_ttest,
    temporal_experiment,
    write_json,
    write_pr_csv,
)
from .features import build_matrix, default_keywords, load_keywords, write_feature_csv
from .groundtruth import (
    REPORT_GROUPS,
    LabelSet,
    coverage_by_year,
    group_cves,
    intersection_report,
    merge_ground_truth,
    source_cves,
    write_coverage_reports,
)
from .ingest import (
    Diagnostics,
    FeedParseError,
    Source,
    load_poc_listing,
    load_tweets,
    parse_nvd_feed,
    parse_vendor_signatures,
    poc_from_dict,
    poc_to_dict,
    read_jsonl,
    record_from_dict,
    record_to_dict,
    signature_from_dict,
    signature_to_dict,
    tweet_from_dict,
    tweet_to_dict,
    write_jsonl,
)
from .model import assemble_dataset

log = logging.getLogger("exploitwatch")

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"stage {stage!r} failed: {exc}")
        self.stage = stage


def _take(table: dict, allowed: set, where: str) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")
    return table


@dataclass
class ExperimentConfig:
    base_dir: Path
    nvd: list = field(default_factory=list)
    tweets: Optional[Path] = None
    vendors: dict = field(default_factory=dict)
    poc_listing: Optional[Path] = None
    poc_map: Optional[Path] = None
    keywords: Optional[Path] = None
    sources: tuple = tuple(Source)
    label: str = "RW"
    classifiers: list = field(default_factory=lambda: [learn.ClassifierSpec("GBDT")])
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    kind: str = "CV"
    k: int = 10
    seed: int = 0
    year_range: tuple = (2015, 2018)
    train_years: tuple = ()
    test_year: Optional[int] = None
    output_dir: Path = Path("out")

    @property
    def corpus_dir(self) -> Path:
        return self.output_dir / "corpus"

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path) -> "ExperimentConfig":
        _take(doc, {"data", "ground_truth", "classifiers", "sampler", "experiment"}, "top level")
        cfg = cls(base_dir=base_dir)

        def path(p):
            if not isinstance(p, str):
                raise ConfigError(f"expected a path string, got {p!r}")
            return (base_dir / p).resolve()

        data = _take(doc.get("data", {}), {"nvd", "tweets", "vendors", "poc_listing", "poc_map", "keywords"}, "data")
        nvd = data.get("nvd", [])
        cfg.nvd = [path(p) for p in ([nvd] if isinstance(nvd, str) else nvd)]
        for key in ("tweets", "poc_listing", "poc_map", "keywords"):
            if key in data:
                setattr(cfg, key, path(data[key]))
        vendors = _take(data.get("vendors", {}), {s.value for s in Source if s is not Source.EDB}, "data.vendors")
        cfg.vendors = {Source(k): path(v) for k, v in sorted(vendors.items())}

        gt = _take(doc.get("ground_truth", {}), {"sources", "label"}, "ground_truth")
        if "sources" in gt:
            try:
                cfg.sources = tuple(Source(s) for s in gt["sources"])
            except ValueError as exc:
                raise ConfigError(f"ground_truth.sources: {exc}") from None
        cfg.label = str(gt.get("label", cfg.label)).upper()
        if cfg.label not in ("RW", "POC"):
            raise ConfigError(f"ground_truth.label must be RW or POC, got {cfg.label!r}")

        if "classifiers" in doc:
            specs = []
            for i, c in enumerate(doc["classifiers"]):
                c = _take(c, {"kind", "hyperparameters", "seed"}, f"classifiers[{i}]")
                try:
                    specs.append(learn.ClassifierSpec(c.get("kind", "GBDT"), c.get("hyperparameters", {}),
                                                      int(c.get("seed", 0))))
                except ValueError as exc:
                    raise ConfigError(f"classifiers[{i}]: {exc}") from None
            if not specs:
                raise ConfigError("at least one classifier is required")
            cfg.classifiers = specs

        if "sampler" in doc:
            s = _take(doc["sampler"], {"name", "params"}, "sampler")
            try:
                cfg.sampler = SamplerConfig(s.get("name", "none"), dict(s.get("params", {})))
            except ValueError as exc:
                raise ConfigError(f"sampler: {exc}") from None

        exp = _take(doc.get("experiment", {}), {"kind", "k", "seed", "year_range", "train_years", "test_year",
                                                 "output_dir"}, "experiment")
        cfg.kind = str(exp.get("kind", cfg.kind)).upper()
        cfg.k = int(exp.get("k", cfg.k))
        cfg.seed = int(exp.get("seed", cfg.seed))
        if "year_range" in exp:
            cfg.year_range = tuple(int(y) for y in exp["year_range"])
        cfg.train_years = tuple(int(y) for y in exp.get("train_years", ()))
        if "test_year" in exp:
            cfg.test_year = int(exp["test_year"])
        cfg.output_dir = path(exp.get("output_dir", "out"))
        cfg.validate()
        return cfg

    def validate(self):
        if self.kind not in ("CV", "TEMPORAL", "COVERAGE"):
            raise ConfigError(f"experiment.kind must be CV, TEMPORAL or COVERAGE, got {self.kind!r}")
        if self.k < 2:
            raise ConfigError("experiment.k must be at least 2")
        if len(self.year_range) != 2 or self.year_range[0] > self.year_range[1]:
            raise ConfigError(f"experiment.year_range must be [first, last], got {list(self.year_range)}")
        if self.kind == "TEMPORAL" and (not self.train_years or self.test_year is None):
            raise ConfigError("TEMPORAL experiments need experiment.train_years and experiment.test_year")


def load_config(path, overrides: Optional[argparse.Namespace] = None) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = ExperimentConfig.from_dict(doc, path.resolve().parent)
    if overrides is not None:
        if getattr(overrides, "output_dir", None):
            cfg.output_dir = Path(overrides.output_dir).resolve()
        for key in ("seed", "k", "label", "kind", "test_year"):
            value = getattr(overrides, key, None)
            if value is not None:
                setattr(cfg, key, value.upper() if isinstance(value, str) else value)
        if getattr(overrides, "train_years", None):
            cfg.train_years = tuple(overrides.train_years)
        if getattr(overrides, "sources", None):
            cfg.sources = tuple(Source(s) for s in overrides.sources)
        if getattr(overrides, "sampler", None):
            cfg.sampler = SamplerConfig(overrides.sampler)
        cfg.validate()
    return cfg


# --- stages ----------------------------------------------------------------------------

def _require(p: Optional[Path], what: str) -> Path:
    if p is None:
        raise ConfigError(f"config does not name {what}")
    if not p.exists():
        raise ConfigError(f"{what} not found: {p}")
    return p


def cmd_ingest(cfg: ExperimentConfig) -> dict:
    """Parse all raw sources and write the normalized corpus plus a diagnostics summary."""
    for p in cfg.nvd:
        _require(p, "NVD feed")
    _require(cfg.tweets, "tweet corpus")
    for vendor, p in cfg.vendors.items():
        _require(p, f"{vendor.value} signature directory")
    if cfg.poc_listing is not None or cfg.poc_map is not None:
        _require(cfg.poc_listing, "PoC listing")
        _require(cfg.poc_map, "PoC CVE map")

    diag = Diagnostics()
    records = {}
    for p in cfg.nvd:
        for rec in parse_nvd_feed(p, diag):
            if rec.id in records:
                diag.add("nvd", str(rec.id), "duplicate entry; first occurrence kept")
                continue
            records[rec.id] = rec
    tweets = load_tweets(cfg.tweets, diag)
    signatures = []
    for vendor, p in cfg.vendors.items():
        signatures += parse_vendor_signatures(vendor, p, diag)
    pocs = load_poc_listing(cfg.poc_listing, cfg.poc_map, diag) if cfg.poc_listing else []

    out = cfg.corpus_dir
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl((record_to_dict(records[c]) for c in sorted(records)), out / "cves.jsonl")
    write_jsonl((tweet_to_dict(t) for t in sorted(tweets, key=lambda t: t.tweet_id)), out / "tweets.jsonl")
    write_jsonl((signature_to_dict(s) for s in signatures), out / "signatures.jsonl")
    write_jsonl((poc_to_dict(p) for p in sorted(pocs, key=lambda p: p.edb_id)), out / "poc.jsonl")
    summary = {
        "counts": {"cves": len(records), "tweets": len(tweets), "signatures": len(signatures), "poc": len(pocs)},
        "signatures_by_vendor": {v.value: sum(s.vendor is v for s in signatures) for v in cfg.vendors},
        "diagnostics": diag.summary(),
        "diagnostic_entries": [list(e) for e in diag.entries],
    }
    write_json(summary, cfg.output_dir / "ingest_summary.json")
    return summary


def _load_corpus(cfg):
    d = cfg.corpus_dir
    for name in ("cves", "tweets", "signatures", "poc"):
        if not (d / f"{name}.jsonl").is_file():
            raise ConfigError(f"normalized corpus missing {d / (name + '.jsonl')}; run `ingest` first")
    records = [record_from_dict(o) for o in read_jsonl(d / "cves.jsonl")]
    tweets = [tweet_from_dict(o) for o in read_jsonl(d / "tweets.jsonl")]
    signatures = [signature_from_dict(o) for o in read_jsonl(d / "signatures.jsonl")]
    pocs = [poc_from_dict(o) for o in read_jsonl(d / "poc.jsonl")]
    return records, tweets, signatures, pocs


def _labels(cfg, signatures, pocs) -> LabelSet:
    if not cfg.sources:
        raise ConfigError("ground_truth.sources is empty")
    return merge_ground_truth(pocs, signatures, cfg.sources)


def cmd_coverage(cfg: ExperimentConfig) -> dict:
    """Per-source, per-year coverage table and the three-way overlap of exploited CVE lists."""
    records, tweets, signatures, pocs = _load_corpus(cfg)
    years = list(range(cfg.year_range[0], cfg.year_range[1] + 1))
    grouped = group_cves(source_cves(pocs, signatures))
    tweeted = set().union(*(t.mentioned_cves for t in tweets)) if tweets else set()
    cells = coverage_by_year(grouped, tweeted, years)
    in_range = {name: {c for c in cves if c.year in years} for name, cves in grouped.items()}
    overlap = intersection_report(in_range["SYMANTEC"], in_range["AVAST"] | in_range["OTHER"], in_range["POC"])
    write_coverage_reports(cells, overlap, cfg.output_dir)
    return {"cells": len(cells), "intersection": overlap, "groups": {k: [s.value for s in v]
                                                                      for k, v in REPORT_GROUPS.items()}}


def cmd_ground_truth(cfg: ExperimentConfig) -> dict:
    """Merge the selected sources into labels and write them with the coverage reports."""
    _, _, signatures, pocs = _load_corpus(cfg)
    labels = _labels(cfg, signatures, pocs)
    write_json({"sources": sorted(s.value for s in cfg.sources), "labels": labels.to_json()},
               cfg.output_dir / "labels.json")
    report = cmd_coverage(cfg)
    return {"labels": len(labels), "rw": len(labels.rw_cves()), "poc": len(labels.poc_cves()), **report}


def _dataset(cfg):
    records, tweets, signatures, pocs = _load_corpus(cfg)
    labels = _labels(cfg, signatures, pocs)
    keywords = load_keywords(cfg.keywords) if cfg.keywords else default_keywords()
    diag = Diagnostics()
    ds = assemble_dataset(records, tweets, labels, cfg.year_range, keywords, diag)
    return ds, diag


def cmd_features(cfg: ExperimentConfig) -> dict:
    ds, diag = _dataset(cfg)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_feature_csv(ds, cfg.output_dir / "features.csv")
    summary = {"instances": len(ds), "rw": int(ds.labels("RW").sum()), "poc": int(ds.labels("POC").sum()),
               "diagnostics": diag.summary()}
    write_json(summary, cfg.output_dir / "features_summary.json")
    return summary


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ConfigError, FeedParseError):
        raise
    except Exception as exc:  # noqa: BLE001 - reported with the stage name, exit code 3
        raise StageError(name, exc) from exc


def cmd_experiment(cfg: ExperimentConfig) -> dict:
    """Run a CV or TEMPORAL experiment for every configured classifier and write the report."""
    if cfg.kind == "COVERAGE":
        return cmd_coverage(cfg)
    ds, diag = _stage("dataset", _dataset, cfg)
    X, _, _ = _stage("features", build_matrix, ds)
    y = ds.labels(cfg.label)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    report = {"kind": cfg.kind, "label": cfg.label, "seed": cfg.seed, "k": cfg.k,
              "year_range": list(cfg.year_range), "instances": len(ds), "positives": int(y.sum()),
              "dataset_diagnostics": diag.summary(), "results": {}}
    cv_results = {}
    for i, spec in enumerate(cfg.classifiers):
        key = f"{i}_{spec.name}"
        if cfg.kind == "CV":
            res = _stage(f"cross-validation ({spec.name})", cross_validate, spec, cfg.sampler, X, y, cfg.k,
                         derive_seed(cfg.seed, "experiment"))
            cv_results[key] = res
            report["results"][key] = res.to_json()
            write_pr_csv(res.pr, cfg.output_dir / f"pr_curve_{key}.csv")
        else:
            res = _stage(f"temporal ({spec.name})", temporal_experiment, ds, cfg.train_years, cfg.test_year,
                         spec, cfg.sampler, cfg.label, cfg.k, derive_seed(cfg.seed, "experiment"))
            report["results"][key] = res.to_json()
            write_pr_csv(res.pr, cfg.output_dir / f"pr_curve_{key}.csv")
    if len(cv_results) >= 2:
        (ka, a), (kb, b) = list(cv_results.items())[:2]
        t = _stage("t-test", paired_ttest, a.fscores, b.fscores)
        report["ttest"] = {"a": ka, "b": kb, "t_statistic": t.t_statistic, "p_value": t.p_value,
                           "dof": t.dof, "degenerate": t.degenerate, "significant_at_0.05": t.p_value <= 0.05}
    write_json(report, cfg.output_dir / "report.json")
    return report


COMMANDS = {
    "ingest": cmd_ingest,
    "ground-truth": cmd_ground_truth,
    "features": cmd_features,
    "experiment": cmd_experiment,
    "coverage": cmd_coverage,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exploitwatch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--output-dir")
        p.add_argument("--seed", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--label", choices=["RW", "POC", "rw", "poc"])
        p.add_argument("--kind", choices=["CV", "TEMPORAL", "COVERAGE", "cv", "temporal", "coverage"])
        p.add_argument("--train-years", type=int, nargs="+")
        p.add_argument("--test-year", type=int)
        p.add_argument("--sources", nargs="+", choices=[s.value for s in Source])
        p.add_argument("--sampler", choices=["none", "rus", "smote", "adasyn", "allknn"])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args)
        result = COMMANDS[args.command](cfg)
    except (ConfigError, FeedParseError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except StageError as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    brief = result.get("counts") or {k: v for k, v in result.items() if not isinstance(v, (dict, list))}
    log.info("%s finished: %s", args.command, brief)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

import json
import shutil

import pytest

from exploitwatch.cli import ConfigError, load_config, main
from exploitwatch.ingest import Source


@pytest.fixture
def corpus(tmp_path, fixture_corpus):
    dst = tmp_path / "corpus"
    shutil.copytree(fixture_corpus, dst, ignore=shutil.ignore_patterns("out"))
    return dst


def write_config(dir_, text):
    p = dir_ / "c.toml"
    p.write_text(text)
    return p


def test_config_parsing(corpus):
    cfg = load_config(corpus / "config.toml")
    assert cfg.kind == "CV" and cfg.k == 10 and cfg.seed == 7
    assert [s.name for s in cfg.classifiers] == ["GBDT", "LOGISTIC"]
    assert cfg.sampler.name == "allknn" and cfg.sampler.params == {"k_max": 3}
    assert set(cfg.vendors) == {Source.SYMANTEC_IPS, Source.AVAST, Source.ESET}
    assert all(p.is_file() for p in cfg.nvd)
    assert cfg.output_dir == (corpus / "out").resolve()


@pytest.mark.parametrize("text, match", [
    ("[data]\nnvdd = []\n", "nvdd"),
    ("[bogus]\n", "bogus"),
    ("[experiment]\nkind = 'ROC'\n", "kind"),
    ("[experiment]\nk = 1\n", "k must"),
    ("[experiment]\nkind = 'TEMPORAL'\n", "train_years"),
    ("[[classifiers]]\nkind = 'GBDT'\nhyperparameters = {depth = 3}\n", "depth"),
    ("[sampler]\nname = 'tomek'\n", "tomek"),
    ("[ground_truth]\nlabel = 'X'\n", "label"),
    ("[ground_truth]\nsources = ['MCAFEE']\n", "MCAFEE"),
    ("not = = toml", "c.toml"),
])
def test_config_errors(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write_config(tmp_path, text))


def test_missing_path_exit_2(tmp_path, caplog):
    cfg = write_config(tmp_path, "[data]\nnvd = ['missing.json']\ntweets = 't.jsonl'\n")
    assert main(["ingest", "--config", str(cfg)]) == 2
    assert "missing.json" in caplog.text


def test_missing_config_exit_2(tmp_path):
    assert main(["ingest", "--config", str(tmp_path / "nope.toml")]) == 2


def test_ingest_outputs_and_idempotence(corpus):
    assert main(["ingest", "--config", str(corpus / "config.toml")]) == 0
    out = corpus / "out"
    names = sorted(p.name for p in (out / "corpus").iterdir())
    assert names == ["cves.jsonl", "poc.jsonl", "signatures.jsonl", "tweets.jsonl"]
    summary = json.loads((out / "ingest_summary.json").read_text())
    assert summary["counts"]["cves"] > 150 and summary["counts"]["tweets"] > 700
    assert summary["diagnostics"]["tweets"] == 1
    assert summary["diagnostics"]["nvd"] == 4
    assert summary["diagnostics"]["vendor:SYMANTEC_IPS"] == 1
    before = {p.name: p.read_bytes() for p in (out / "corpus").iterdir()}
    assert main(["ingest", "--config", str(corpus / "config.toml")]) == 0
    assert before == {p.name: p.read_bytes() for p in (out / "corpus").iterdir()}


def test_commands_need_ingest_first(corpus):
    assert main(["ground-truth", "--config", str(corpus / "config.toml")]) == 2


def test_ground_truth_and_features(corpus):
    cfg = str(corpus / "config.toml")
    assert main(["ingest", "--config", cfg]) == 0
    assert main(["ground-truth", "--config", cfg]) == 0
    out = corpus / "out"
    labels = json.loads((out / "labels.json").read_text())
    assert labels["sources"] == ["AVAST", "EDB", "ESET", "SYMANTEC_IPS"]
    assert any(v["rw"] and v["poc"] for v in labels["labels"].values())
    coverage = json.loads((out / "coverage.json").read_text())
    assert all(c["tweeted_count"] <= c["total_count"] for c in coverage["cells"])
    assert (out / "intersection.json").is_file()
    assert main(["features", "--config", cfg]) == 0
    header = (out / "features.csv").read_text().splitlines()[0].split(",")
    assert len(header) == 1 + 79 + 2


def test_empty_sources_exit_2(corpus):
    cfg = corpus / "config.toml"
    cfg.write_text(cfg.read_text().replace('sources = ["SYMANTEC_IPS", "AVAST", "ESET", "EDB"]', "sources = []"))
    assert main(["ingest", "--config", str(cfg)]) == 0
    assert main(["ground-truth", "--config", str(cfg)]) == 2


def test_source_override(corpus):
    cfg = str(corpus / "config.toml")
    main(["ingest", "--config", cfg])
    assert main(["ground-truth", "--config", cfg, "--sources", "AVAST"]) == 0
    labels = json.loads((corpus / "out" / "labels.json").read_text())
    assert labels["sources"] == ["AVAST"]
    assert all(v["sources"] == ["AVAST"] for v in labels["labels"].values())


def test_cv_experiment_with_ttest(corpus):
    cfg = str(corpus / "config.toml")
    main(["ingest", "--config", cfg])
    assert main(["experiment", "--config", cfg, "--k", "5"]) == 0
    report = json.loads((corpus / "out" / "report.json").read_text())
    assert set(report["results"]) == {"0_GBDT", "1_LOGISTIC"}
    assert report["ttest"]["dof"] == 4
    assert 0 <= report["ttest"]["p_value"] <= 1
    assert (corpus / "out" / "pr_curve_0_GBDT.csv").is_file()


def test_temporal_experiment(corpus):
    cfg = str(corpus / "config.toml")
    main(["ingest", "--config", cfg])
    assert main(["experiment", "--config", cfg, "--kind", "temporal", "--train-years", "2015", "2016", "2017",
                 "--test-year", "2018"]) == 0
    report = json.loads((corpus / "out" / "report.json").read_text())
    block = report["results"]["0_GBDT"]
    assert block["mode"] == "disjoint" and block["train_years"] == [2015, 2016, 2017] and block["test_year"] == 2018
    assert "ttest" not in report


def test_pipeline_failure_exit_3(corpus, caplog):
    cfg = str(corpus / "config.toml")
    main(["ingest", "--config", cfg])
    assert main(["experiment", "--config", cfg, "--k", "50"]) == 3
    assert "cross-validation" in caplog.text


def test_coverage_command(corpus):
    cfg = str(corpus / "config.toml")
    main(["ingest", "--config", cfg])
    assert main(["coverage", "--config", cfg]) == 0
    assert (corpus / "out" / "coverage.csv").is_file()

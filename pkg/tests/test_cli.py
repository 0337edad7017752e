import json
import os

import pytest

from cocite.cli import main
from cocite.synth import write_demo

STAGES = ["stats", "simall", "label", "partition", "sample", "eval"]


@pytest.fixture(scope="module")
def demo(tmp_path_factory):
    d = tmp_path_factory.mktemp("demo")
    write_demo(d, n_cases=60, n_clusters=3, seed=1)
    cfg = json.loads((d / "config.json").read_text())
    cfg["partition"]["sizes"] = [20, 5, 35]
    cfg["sampler"]["total_case_pairs"] = 50
    cfg["figures"] = False
    (d / "config.json").write_text(json.dumps(cfg))
    return d


def run(demo, out, *stages, extra=()):
    codes = []
    for s in stages:
        codes.append(main([s, "--config", str(demo / "config.json"), "--out", str(out), *extra]))
    return codes


def test_pipeline_and_idempotence(demo, tmp_path):
    out = tmp_path / "out"
    assert run(demo, out, *STAGES) == [0] * 6
    outputs = ["corpus_stats.json", "pairs.tsv", "histogram.json", "labels.tsv", "partition.json",
               "trainset.jsonl", "valset.jsonl", "sample_report.json", "eval_report.json"]
    first = {n: (out / n).read_bytes() for n in outputs}
    manifests = {s: json.loads((out / f"{s}.manifest.json").read_text()) for s in STAGES}
    assert run(demo, out, *STAGES) == [0] * 6
    assert {n: (out / n).read_bytes() for n in outputs} == first
    for s in STAGES:
        again = json.loads((out / f"{s}.manifest.json").read_text())
        again.pop("wall_time_s")
        manifests[s].pop("wall_time_s")
        assert again == manifests[s]
        assert again["inputs"] and again["outputs"]
        assert all(len(h) == 64 for h in again["inputs"].values())


def test_eval_before_label(demo, tmp_path, capsys):
    assert run(demo, tmp_path / "o", "eval") == [1]
    assert "labels.tsv missing; run `label` first" in capsys.readouterr().err


def test_label_before_simall(demo, tmp_path, capsys):
    assert run(demo, tmp_path / "o", "label") == [1]
    assert "run `simall` first" in capsys.readouterr().err


def test_validation_exit_code(demo, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"paths": {"cases": "nope.jsonl"}}))
    assert main(["stats", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "does not exist" in capsys.readouterr().err


def test_bad_seed_type_is_argparse_error(demo):
    with pytest.raises(SystemExit) as e:
        main(["stats", "--config", str(demo / "config.json"), "--seed", "x"])
    assert e.value.code == 2


def test_seed_override_changes_partition(demo, tmp_path):
    run(demo, tmp_path / "a", "partition", extra=("--seed", "1"))
    run(demo, tmp_path / "b", "partition", extra=("--seed", "2"))
    assert (tmp_path / "a" / "partition.json").read_bytes() != (tmp_path / "b" / "partition.json").read_bytes()


def test_threads_do_not_change_pairs(demo, tmp_path):
    run(demo, tmp_path / "a", "simall", extra=("--threads", "1"))
    run(demo, tmp_path / "b", "simall", extra=("--threads", "4"))
    assert (tmp_path / "a" / "pairs.tsv").read_bytes() == (tmp_path / "b" / "pairs.tsv").read_bytes()


def test_external_scores(demo, tmp_path):
    out = tmp_path / "out"
    run(demo, out, "simall", "label", "partition")
    pool = json.loads((out / "partition.json").read_text())["eval"]
    clusters = json.loads((demo / "clusters.json").read_text())
    scores = tmp_path / "scores.tsv"
    with open(scores, "w") as fh:
        fh.write("query_id\tcandidate_id\tscore\n")
        for q in pool:
            for c in pool:
                if q != c:
                    fh.write(f"{q}\t{c}\t{1.0 if clusters[q] == clusters[c] else 0.0}\n")
    assert main(["eval", "--config", str(demo / "config.json"), "--out", str(out), "--scorer", str(scores)]) == 0
    rep = json.loads((out / "eval_report.json").read_text())
    assert rep["orientation"] == "score-descending"
    assert rep["rows"][0]["precision"] == 1.0
    assert len(rep["rows"]) == 6


def test_figures_rendered(demo, tmp_path):
    out = tmp_path / "out"
    cfg = json.loads((demo / "config.json").read_text())
    cfg["figures"] = True
    (tmp_path / "cfg.json").write_text(json.dumps({**cfg, "paths": {
        k: str(demo / v) for k, v in cfg["paths"].items() if k != "out_dir"}}))
    assert main(["stats", "--config", str(tmp_path / "cfg.json"), "--out", str(out)]) == 0
    assert main(["simall", "--config", str(tmp_path / "cfg.json"), "--out", str(out)]) == 0
    for name in ("articles_per_case.png", "codes_per_case.png", "score_histogram.png"):
        assert (out / name).read_bytes()[:4] == b"\x89PNG"

import json

import pytest

from chaincheck import prompts
from chaincheck.cli import main
from chaincheck.fixtures import generate_synthetic_suite

GOLDEN = dict(n_cases=20, hop_distribution={2: 0.5, 3: 0.3, 4: 0.2}, edit_distribution={1: 0.5, 2: 0.3, 3: 0.2}, seed=7)


@pytest.fixture
def golden_files(tmp_path):
    return generate_synthetic_suite(**GOLDEN).write(tmp_path / "suite")


def mock_flags(files):
    return ["--scripts", str(files["scripts"]), "--aliases", str(files["aliases"]), "--templates", str(files["templates"])]


@pytest.fixture
def linux_world(tmp_path):
    q = "Who was the creator of Linux?"
    (tmp_path / "edits.tsv").write_text("Linux\tcreator of\tX\n", encoding="utf-8")
    (tmp_path / "aliases.tsv").write_text("Linux\tLinux\t0\n", encoding="utf-8")
    scripts = [
        {"prompt": prompts.extract_chain(q), "response": " | creator of |"},
        {"prompt": prompts.entity_type("Linux"), "response": " thing", "temperature": 0.0},
    ]
    (tmp_path / "scripts.json").write_text(json.dumps({"entries": scripts}), encoding="utf-8")
    return q, tmp_path


def test_answer_prints_edited_object(linux_world, capsys):
    q, d = linux_world
    code = main([
        "answer", q, "--edits", str(d / "edits.tsv"), "--scripts", str(d / "scripts.json"),
        "--aliases", str(d / "aliases.tsv"), "--out", str(d / "out"),
    ])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert out[0] == "X"
    assert "hop 1: (Linux, creator of) -> X  [edit 1.000]" in out[1]
    trace = json.loads((d / "out" / "trace.jsonl").read_text())
    assert trace["answer"] == "X" and trace["hops"][0]["source"] == "edit"


def test_answer_from_ingested_store(linux_world, capsys):
    q, d = linux_world
    flags = ["--scripts", str(d / "scripts.json"), "--aliases", str(d / "aliases.tsv")]
    assert main(["ingest-edits", str(d / "edits.tsv"), "--out", str(d / "store.json")] + flags) == 0
    assert main(["answer", q, "--store", str(d / "store.json"), "--trace", str(d / "t.jsonl")] + flags) == 0
    assert capsys.readouterr().out.splitlines()[-2] == "X"


def test_missing_edits_file(tmp_path, capsys):
    code = main(["answer", "Who?", "--edits", str(tmp_path / "nope.tsv")])
    assert code == 1
    assert "not found" in capsys.readouterr().err


def test_bad_tau_rejected_before_backends(tmp_path, capsys):
    (tmp_path / "cfg.json").write_text(json.dumps({"tau": 1.5, "metric": "cosine"}))
    # a remote endpoint that does not exist; validation must fail first
    code = main(["answer", "Who?", "--edits", str(tmp_path / "nope.tsv"), "--config", str(tmp_path / "cfg.json"),
                 "--backend", "remote", "--endpoint", "http://127.0.0.1:9", "--model", "m"])
    assert code == 2
    assert "tau" in capsys.readouterr().err


def test_evaluate_golden(golden_files, tmp_path, capsys):
    code = main(["evaluate", str(golden_files["dataset"]), "--out", str(tmp_path / "run"), "--workers", "2"] + mock_flags(golden_files))
    assert code == 0
    assert capsys.readouterr().out.strip() == "per-case 1.000 / per-question 1.000"
    assert {p.name for p in (tmp_path / "run").iterdir()} == {"report.json", "table.txt", "traces.jsonl"}


def test_evaluate_without_edits(golden_files, tmp_path, capsys):
    main(["evaluate", str(golden_files["dataset"]), "--no-edits", "--out", str(tmp_path / "run")] + mock_flags(golden_files))
    assert capsys.readouterr().out.strip() == "per-case 0.000 / per-question 0.000"


def test_evaluate_malformed_case(golden_files, tmp_path, capsys):
    records = json.loads(golden_files["dataset"].read_text())
    del records[3]["questions"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(records))
    assert main(["evaluate", str(bad)] + mock_flags(golden_files)) == 1
    assert "case 3" in capsys.readouterr().err


def test_evaluate_thresholds_delegates_to_ablation(golden_files, tmp_path, capsys):
    code = main(["evaluate", str(golden_files["dataset"]), "--thresholds", "0.5,0.8,1.0", "--out", str(tmp_path / "abl")] + mock_flags(golden_files))
    assert code == 0
    table = (tmp_path / "abl" / "ablation_cosine.tsv").read_text().splitlines()
    assert table[1:] == ["0.50\t1.000000\tcosine", "0.80\t1.000000\tcosine", "1.00\t0.000000\tcosine"]


def test_ablate_default_grid(golden_files, tmp_path, capsys):
    assert main(["ablate", str(golden_files["dataset"]), "--out", str(tmp_path / "abl")] + mock_flags(golden_files)) == 0
    assert "21 rows" in capsys.readouterr().out


def test_separation_study(tmp_path, capsys):
    assert main(["separation-study", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("500 pairs") and "overlapping bins: 0" in out
    assert (tmp_path / "separation_sr_cosine.tsv").exists()


def test_build_typelib(tmp_path, capsys):
    assert main(["build-typelib", "--out", str(tmp_path / "lib.json")]) == 0
    assert (tmp_path / "lib.json").exists()
    assert "templates (dim 64)" in capsys.readouterr().out


def test_generate_suite_matches_library_call(tmp_path, capsys):
    assert main(["generate-suite", "--edit-counts", "1:0.5,2:0.3,3:0.2", "--out", str(tmp_path / "g")]) == 0
    direct = generate_synthetic_suite(**GOLDEN).write(tmp_path / "direct")
    assert (tmp_path / "g" / "dataset.json").read_bytes() == direct["dataset"].read_bytes()


def test_env_overrides_config_and_flag_overrides_env(tmp_path, monkeypatch):
    from chaincheck.config import load_config

    (tmp_path / "cfg.json").write_text(json.dumps({"endpoint": "http://file", "tau": 0.5}))
    monkeypatch.setenv("CHAINCHECK_ENDPOINT", "http://env")
    cfg = load_config(tmp_path / "cfg.json")
    assert (cfg.endpoint, cfg.tau) == ("http://env", 0.5)
    cfg = load_config(tmp_path / "cfg.json", {"endpoint": "http://flag", "tau": None})
    assert (cfg.endpoint, cfg.tau) == ("http://flag", 0.5)


@pytest.mark.parametrize(
    "values",
    [{"tau": 0.0}, {"tau": 1.5}, {"metric": "dot", "tau": -1}, {"workers": 0}, {"max_chain_length": 9}, {"colour": "red"}, {"backend": "remote"}],
)
def test_config_validation(tmp_path, values):
    from chaincheck.config import load_config
    from chaincheck.errors import ConfigError

    (tmp_path / "cfg.json").write_text(json.dumps(values))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "cfg.json", environ={})

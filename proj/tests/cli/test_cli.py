import json
import time
from collections import Counter

import pytest


def valid_records(path):
    out = []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        r = json.loads(line)
        s, e, w = r["trigger_start"], r["trigger_end"], r["words"]
        if 0 <= s < e <= len(w) and " ".join(w[s:e]).lower() == r["trigger"].lower():
            out.append(r)
    return out


def write_counts_corpus(path, counts):
    with path.open("w") as f:
        for label, n in counts.items():
            for i in range(n):
                words = ["someone", f"trig{label}{i % 3}", "here", "."]
                f.write(json.dumps({"id": f"{label}-{i}", "words": words, "trigger_start": 1,
                                    "trigger_end": 2, "trigger": words[1], "label": label}) + "\n")


def test_stats_matches_fixture_census(cli, tiny_corpus, tmp_path):
    cli("stats", tiny_corpus, "-o", tmp_path / "s")
    stats = json.loads((tmp_path / "s" / "stats.json").read_text())
    recs = valid_records(tiny_corpus)
    per_type = Counter(r["label"] for r in recs)
    assert stats["n_mentions"] == len(recs) == 17
    assert stats["n_types"] == len(per_type) == 7
    assert stats["per_type_counts"] == dict(per_type)
    assert stats["mean_mentions_per_type"] == pytest.approx(len(recs) / len(per_type), abs=1e-12)
    assert stats["mean_mention_length"] == pytest.approx(sum(len(r["words"]) for r in recs) / len(recs), abs=1e-12)
    trig = sum(r["trigger_end"] - r["trigger_start"] for r in recs) / len(recs)
    assert stats["mean_trigger_length"] == pytest.approx(trig, abs=1e-12)
    manifest = json.loads((tmp_path / "s" / "manifest.json").read_text())
    assert manifest["dropped"] == 3


def test_stats_twice_is_byte_identical(cli, tiny_corpus, tmp_path):
    cli("stats", tiny_corpus, "-o", tmp_path / "a")
    cli("stats", tiny_corpus, "-o", tmp_path / "b")
    for name in ("stats.json", "bias.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_stats_on_empty_path_fails_without_output(cli, tmp_path):
    out = tmp_path / "out"
    proc = cli("stats", "", "-o", out, check=False)
    assert proc.returncode == 2
    assert json.loads(proc.stderr.strip().splitlines()[-1])["error"]["kind"] == "data"
    assert not out.exists()
    assert list(tmp_path.iterdir()) == []


def test_split_counts(cli, tmp_path):
    corpus = tmp_path / "abc.jsonl"
    write_counts_corpus(corpus, {"A": 10, "B": 9, "C": 5})
    proc = cli("split", corpus, "-k", 4, "--seed", 42, "-o", tmp_path / "split.json")
    assert json.loads(proc.stdout) == {"types": 2, "train": 8, "valid": 8, "test": 3}
    split = json.loads((tmp_path / "split.json").read_text())
    assert split["K"] == 4
    assert len(set(split["train"]) | set(split["valid"]) | set(split["test"])) == 19


def test_split_with_zero_shots_is_usage_error(cli, tiny_corpus, tmp_path):
    proc = cli("split", tiny_corpus, "-k", 0, "-o", tmp_path / "s.json", check=False)
    assert proc.returncode == 1
    assert json.loads(proc.stderr)["error"]["kind"] == "usage"
    assert not (tmp_path / "s.json").exists()


def test_unknown_config_key_is_usage_error(cli, keyword_corpus, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"corpus": str(keyword_corpus), "epochz": 3}))
    proc = cli("train", "-c", cfg, "-o", tmp_path / "runs", check=False)
    assert proc.returncode == 1
    assert not (tmp_path / "runs").exists() or list((tmp_path / "runs").iterdir()) == []


def test_ablate_sequence_reports_every_order(cli, keyword_corpus, tmp_path):
    proc = cli("ablate", "--sequence", "--corpus", keyword_corpus, "-o", tmp_path, "--seeds", 1,
               "--set", "train.epochs=2")
    run = tmp_path / proc.stdout.strip().splitlines()[-1].split("/")[-1]
    rows = json.loads((run / "ablate.json").read_text())
    assert [r["variant"] for r in rows] == ["M+O", "O+M", "M+O+T", "M+T+O", "O+M+T", "O+T+M", "T+M+O", "T+O+M"]
    assert all(r["result"]["complete"] and len(r["result"]["per_seed"]) == 1 for r in rows)


def test_pipeline_and_noop_ablation(cli, keyword_corpus, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"corpus": str(keyword_corpus), "k": 4, "seeds": [3],
                               "train": {"epochs": 60, "dim": 16}, "output_dir": str(tmp_path / "runs")}))
    start = time.monotonic()
    cli("stats", keyword_corpus, "-o", tmp_path / "stats")
    cli("split", keyword_corpus, "-k", 4, "-o", tmp_path / "split.json")
    run = tmp_path / "runs" / cli("train", "-c", cfg).stdout.strip().split("/")[-1]
    assert (run / "checkpoint" / "manifest.json").exists()
    recorded = json.loads((run / "config.json").read_text())
    assert recorded["seed"] == 3 and recorded["train"]["epochs"] == 60
    assert json.loads((run / "split.json").read_text()) == json.loads((tmp_path / "split.json").read_text())
    cli("eval", run / "checkpoint")
    cli("debias", run / "checkpoint")
    elapsed = time.monotonic() - start
    assert elapsed < 300

    report = json.loads((run / "eval-test.json").read_text())["report"]
    debias = json.loads((run / "debias-k4-seed42.json").read_text())["methods"]
    assert list(debias) == ["Full-Test", "IUS", "TUS", "COS"]
    assert debias["Full-Test"]["report"] == report

    out = cli("ablate", "-c", cfg).stdout.strip().splitlines()[-1]
    rows = json.loads((tmp_path / "runs" / out.split("/")[-1] / "ablate.json").read_text())
    assert len(rows) == 1 and rows[0]["variant"] == "base"
    assert rows[0]["result"]["per_seed"][0] == report


def test_train_is_reproducible_and_config_hash_names_runs(cli, keyword_corpus, tmp_path):
    args = ["--corpus", keyword_corpus, "--seeds", 5, "--set", "train.epochs=3"]
    a = cli("train", *args, "-o", tmp_path / "a").stdout.strip().split("/")[-1]
    b = cli("train", *args, "-o", tmp_path / "b").stdout.strip().split("/")[-1]
    c = cli("train", *args[:-1], "train.epochs=4", "-o", tmp_path / "a").stdout.strip().split("/")[-1]
    assert a == b and a.endswith("-seed5") and c != a
    for rel in ("train_log.jsonl", "checkpoint/params.bin", "split.json"):
        assert (tmp_path / "a" / a / rel).read_bytes() == (tmp_path / "b" / b / rel).read_bytes()


def test_pretrained_backend_is_runtime_error(cli, keyword_corpus, tmp_path):
    proc = cli("train", "--corpus", keyword_corpus, "--set", "encoder.kind=pretrained", "-o", tmp_path / "r",
               check=False)
    assert proc.returncode == 3
    assert json.loads(proc.stderr.strip().splitlines()[-1])["error"]["kind"] == "runtime"
    assert list((tmp_path / "r").iterdir()) == []

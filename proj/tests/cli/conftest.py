import json
import os
import random
import subprocess
from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"
FILLER = ("the a of in on at by with from after before during city people group report officials "
          "yesterday today morning evening week year local several many two three new old").split()
KEYWORDS = ["attacked", "married", "died", "elected", "arrested", "sued", "met", "traveled"]


def cli_path():
    path = os.environ.get("FSED_CLI")
    if not path:
        pytest.skip("FSED_CLI is not set")
    return path


def run_cli(*args, check=True):
    proc = subprocess.run([cli_path(), *map(str, args)], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"fsed {' '.join(map(str, args))} exited {proc.returncode}: {proc.stderr}")
    return proc


@pytest.fixture
def cli():
    return run_cli


@pytest.fixture(scope="session")
def keyword_corpus(tmp_path_factory):
    """Eight types, each always triggered by its own keyword."""
    rng = random.Random(3)
    path = tmp_path_factory.mktemp("corpus") / "keywords.jsonl"
    with path.open("w") as out:
        for t, kw in enumerate(KEYWORDS):
            for i in range(16):
                words = [rng.choice(FILLER) for _ in range(rng.randint(5, 12))]
                pos = rng.randrange(len(words) + 1)
                words.insert(pos, kw)
                words.append(".")
                rec = {"id": f"k{t}-{i}", "words": words, "trigger_start": pos,
                       "trigger_end": pos + 1, "trigger": kw, "label": f"Type.{chr(65 + t)}"}
                out.write(json.dumps(rec) + "\n")
    return path


@pytest.fixture
def tiny_corpus():
    return FIXTURES / "corpus_tiny.jsonl"

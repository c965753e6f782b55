import numpy as np
import pytest

from urdufake.cli import main
from urdufake.corpus import generate_synthetic, save_corpus

from conftest import FAKE_POOL, REAL_POOL

GRID_CONFIG = """
seed = 7
classifier = svm
k_best = 300

[experiment]
name = words-only
word_orders = 1,2
char_orders = -

[experiment]
name = words-and-chars
word_orders = 1,2
char_orders = 2,3
"""


@pytest.fixture()
def data_dir(tmp_path):
    train = generate_synthetic(7, 40, (FAKE_POOL, REAL_POOL), (5, 10), split="train")
    test = generate_synthetic(8, 15, (FAKE_POOL, REAL_POOL), (5, 10), split="test")
    save_corpus(train, tmp_path / "train.tsv")
    save_corpus(test, tmp_path / "test.tsv")
    (tmp_path / "grid.cfg").write_text(GRID_CONFIG, encoding="utf-8")
    return tmp_path


def run(args):
    return main([str(a) for a in args])


def test_preprocess_command(data_dir, capsys):
    out = data_dir / "out"
    rc = run(["--out-dir", out, "preprocess", "--input", data_dir / "train.tsv",
              "--split", "train", "--expect-total", "80",
              "--expect-fake", "40", "--expect-real", "40"])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "split check [train]: pass" in printed
    lines = (out / "preprocessed.tsv").read_text(encoding="utf-8").strip().split("\n")
    assert len(lines) == 80


def test_preprocess_kv_report(data_dir, capsys):
    rc = run(["--out-dir", data_dir / "o2", "preprocess", "--input", data_dir / "train.tsv",
              "--expect-total", "81", "--expect-fake", "40", "--expect-real", "41", "--kv"])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "status=warn" in printed


def test_featurize_command(data_dir, capsys):
    rc = run(["--out-dir", data_dir / "feat", "featurize", "--train", data_dir / "train.tsv"])
    assert rc == 0
    vocab_lines = (data_dir / "feat" / "vocab.tsv").read_text(encoding="utf-8").strip().split("\n")
    first = vocab_lines[0].split("\t")
    assert len(first) == 3 and first[1] == "0"


def test_train_predict_evaluate_round_trip(data_dir, capsys):
    out = data_dir / "run"
    assert run(["--out-dir", out, "--config", data_dir / "grid.cfg",
                "train", "--train", data_dir / "train.tsv"]) == 0
    model = out / "model.ufnd"
    assert model.exists()

    assert run(["--out-dir", out, "predict", "--model", model,
                "--input", data_dir / "test.tsv", "--split", "test"]) == 0
    preds = (out / "predictions.tsv").read_text(encoding="utf-8").strip().split("\n")
    assert len(preds) == 30
    assert all(p.split("\t")[1] in ("Fake", "Real") for p in preds)

    assert run(["--out-dir", out, "evaluate", "--gold", data_dir / "test.tsv",
                "--pred", out / "predictions.tsv"]) == 0
    printed = capsys.readouterr().out
    assert "f1_macro" in printed
    assert (out / "report.tsv").exists()


def test_experiment_command_outputs(data_dir, capsys):
    out = data_dir / "exp"
    rc = run(["--out-dir", out, "--config", data_dir / "grid.cfg",
              "experiment", "--train", data_dir / "train.tsv",
              "--test", data_dir / "test.tsv"])
    assert rc == 0
    tsv = (out / "results.tsv").read_text(encoding="utf-8")
    assert tsv.startswith("sn\t")
    assert len(tsv.strip().split("\n")) == 3
    assert (out / "results.md").exists()


def test_experiment_determinism_byte_identical(data_dir):
    out1, out2 = data_dir / "e1", data_dir / "e2"
    for out in (out1, out2):
        rc = run(["--out-dir", out, "--config", data_dir / "grid.cfg",
                  "experiment", "--train", data_dir / "train.tsv",
                  "--test", data_dir / "test.tsv", "--save-models"])
        assert rc == 0
    assert (out1 / "results.tsv").read_bytes() == (out2 / "results.tsv").read_bytes()
    m1 = sorted((out1 / "models").glob("*.ufnd"))
    m2 = sorted((out2 / "models").glob("*.ufnd"))
    assert len(m1) == 2
    for a, b in zip(m1, m2):
        assert a.read_bytes() == b.read_bytes()


def test_train_cnn_writes_history(data_dir, tmp_path):
    cfg = tmp_path / "cnn.cfg"
    cfg.write_text(
        "[experiment]\nname = tiny-cnn\nclassifier = cnn\ncnn_epochs = 2\n"
        "cnn_channels = 1,2\nseed = 3\n",
        encoding="utf-8",
    )
    out = data_dir / "cnn"
    rc = run(["--out-dir", out, "--config", cfg, "train", "--train", data_dir / "train.tsv"])
    assert rc == 0
    lines = (out / "history.tsv").read_text(encoding="utf-8").strip().split("\n")
    assert lines[0] == "epoch\tloss\taccuracy"
    assert len(lines) == 3


def test_inspect_command(data_dir, capsys):
    out = data_dir / "insp"
    rc = run(["--out-dir", out, "--config", data_dir / "grid.cfg",
              "inspect", "--train", data_dir / "train.tsv", "--top", "10"])
    assert rc == 0
    lines = (out / "top_features.tsv").read_text(encoding="utf-8").strip().split("\n")
    assert len(lines) == 10
    rank, term, score = lines[0].split("\t")
    assert rank == "1" and float(score) >= float(lines[-1].split("\t")[2])


def test_seed_flag_overrides_config(data_dir):
    out = data_dir / "seeded"
    rc = run(["--out-dir", out, "--config", data_dir / "grid.cfg", "--seed", "99",
              "experiment", "--train", data_dir / "train.tsv",
              "--test", data_dir / "test.tsv"])
    assert rc == 0


def test_custom_resources_flags(data_dir, tmp_path):
    sw = tmp_path / "sw.txt"
    sw.write_text("xshared0\nxshared1\n", encoding="utf-8")
    out = data_dir / "res"
    rc = run(["--out-dir", out, "--stopwords", sw, "preprocess",
              "--input", data_dir / "train.tsv"])
    assert rc == 0
    text = (out / "preprocessed.tsv").read_text(encoding="utf-8")
    assert "xshared0" not in text.split("\t", 2)[-1]

import numpy as np
import pytest

from urdufake.corpus import Corpus, Document, Label, generate_synthetic
from urdufake.persistence import MAGIC, ModelFormatError
from urdufake.preprocess import PreprocessConfig
from urdufake.runner import (
    ConfigError,
    ExperimentConfig,
    PipelineError,
    fit_pipeline,
    load_model,
    parse_config_text,
    render_results_md,
    render_results_tsv,
    run_config,
    run_grid,
    save_model,
    serialize_configs,
)

from conftest import FAKE_POOL, REAL_POOL


# --- config file format --------------------------------------------------------

CONFIG_TEXT = """
# grid defaults
seed = 7
classifier = svm
remove_stopwords = true

[experiment]
name = a
word_orders = 1,2
char_orders = 2,3,4
k_best = 100

[experiment]
name = b
word_orders = 1
char_orders = -
k_best = 50
svm_gamma = 0.25
"""


def test_parse_config_blocks_inherit_defaults():
    configs = parse_config_text(CONFIG_TEXT)
    assert [c.name for c in configs] == ["a", "b"]
    assert all(c.seed == 7 for c in configs)
    assert configs[0].word_orders == (1, 2)
    assert configs[1].char_orders == ()
    assert configs[1].svm_gamma == 0.25
    assert configs[0].svm_gamma is None


def test_config_round_trip_lossless():
    configs = parse_config_text(CONFIG_TEXT)
    text = serialize_configs(configs)
    assert parse_config_text(text) == configs


def test_config_round_trip_covers_cnn_fields():
    cfg = ExperimentConfig(
        name="cnn-run", classifier="cnn", cnn_unit="char", cnn_channels=(1, 2, 3, 4, 5, 6),
        cnn_epochs=3, cnn_max_len=400, cnn_embedding_dropout=0.1,
        preprocess=PreprocessConfig(remove_diacritics=False),
    )
    assert parse_config_text(serialize_configs([cfg])) == [cfg]


def test_config_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config_text("bogus = 1\n[experiment]\n")


def test_config_bad_bool_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("lemmatize = maybe\n[experiment]\n")


def test_config_digest_stable():
    cfg = ExperimentConfig(name="x")
    assert cfg.digest() == cfg.digest()
    assert cfg.digest() != ExperimentConfig(name="y").digest()


# --- pipeline ------------------------------------------------------------------

def test_run_config_synthetic_svm(synthetic_train, synthetic_test, resources):
    cfg = ExperimentConfig(name="syn", k_best=5000)
    row = run_config(synthetic_train, synthetic_test, cfg, resources)
    assert row.ok
    assert row.report.f1_macro >= 0.95
    assert row.v_total > 0 and row.k_selected <= 5000


def test_run_config_k_larger_than_v_clamps(small_train, small_test, resources):
    cfg = ExperimentConfig(name="clamp", k_best=10**7, word_orders=(1,), char_orders=())
    with pytest.warns(UserWarning, match="exceeds feature count"):
        row = run_config(small_train, small_test, cfg, resources)
    assert row.k_selected == row.v_total


def test_run_config_deterministic(small_train, small_test, resources):
    cfg = ExperimentConfig(name="det", k_best=300, seed=5)
    r1 = run_config(small_train, small_test, cfg, resources)
    r2 = run_config(small_train, small_test, cfg, resources)
    assert r1.report == r2.report
    assert r1.digest == r2.digest


def test_no_leakage_test_split_does_not_affect_fit(small_train, resources):
    cfg = ExperimentConfig(name="leak", k_best=200)
    other_test = generate_synthetic(999, 10, (FAKE_POOL, REAL_POOL), (5, 10), split="test")
    f1 = fit_pipeline(small_train, cfg, resources)
    f2 = fit_pipeline(small_train, cfg, resources)
    # fitting never sees a test corpus at all; two fits agree exactly
    assert f1.vocabulary.term_to_index == f2.vocabulary.term_to_index
    np.testing.assert_array_equal(f1.tfidf.idf, f2.tfidf.idf)
    np.testing.assert_array_equal(f1.mask.kept, f2.mask.kept)
    # and predictions on different test sets come from the same artifacts
    p1 = f1.predict(other_test, resources)
    p2 = f2.predict(other_test, resources)
    assert p1 == p2


def test_pipeline_error_names_stage(resources):
    empty_after_preproc = Corpus(
        documents=(Document("a", "کا", Label.FAKE), Document("b", "کی", Label.REAL)),
        split="train",
    )
    cfg = ExperimentConfig(name="bad", word_orders=(1,), char_orders=())
    with pytest.raises(PipelineError, match="build_vocabulary"):
        fit_pipeline(empty_after_preproc, cfg, resources)


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_run_grid_continues_after_row_failure(small_train, small_test, resources):
    good = ExperimentConfig(name="good", k_best=100, word_orders=(1,), char_orders=())
    # k_best = 0 fails inside the selection stage
    bad = ExperimentConfig(name="bad", k_best=0, word_orders=(1,), char_orders=())
    rows = run_grid(small_train, small_test, [good, bad, good], resources)
    assert [r.ok for r in rows] == [True, False, True]
    assert "select_k_best" in rows[1].error
    assert rows[1].sn == 2


def test_run_grid_single_config(small_train, small_test, resources):
    rows = run_grid(small_train, small_test,
                    [ExperimentConfig(name="solo", k_best=100)], resources)
    assert len(rows) == 1 and rows[0].sn == 1


def test_run_grid_empty_rejected(small_train, small_test, resources):
    with pytest.raises(ConfigError):
        run_grid(small_train, small_test, [], resources)


def test_cnn_pipeline_through_runner(small_train, small_test, resources):
    cfg = ExperimentConfig(name="cnn", classifier="cnn", cnn_epochs=3, seed=3,
                           cnn_channels=(1, 2))
    row = run_config(small_train, small_test, cfg, resources)
    assert row.ok
    assert 0.0 <= row.report.f1_macro <= 1.0
    assert row.k_best == 0


# --- rendering -----------------------------------------------------------------

def grid_rows(small_train, small_test, resources):
    configs = [
        ExperimentConfig(name="r1", k_best=50, word_orders=(1,), char_orders=()),
        ExperimentConfig(name="r2", k_best=150, word_orders=(1, 2), char_orders=(2,)),
        ExperimentConfig(name="r3", k_best=0, word_orders=(1,), char_orders=()),
    ]
    return run_grid(small_train, small_test, configs, resources)


def test_results_tsv_shape_and_rounding(small_train, small_test, resources):
    rows = grid_rows(small_train, small_test, resources)
    text = render_results_tsv(rows)
    lines = text.strip().split("\n")
    assert len(lines) == 4  # header + 3 rows
    header = lines[0].split("\t")
    assert header[0] == "sn" and "f1_macro" in header
    ok_cells = lines[1].split("\t")
    f1_macro = ok_cells[header.index("f1_macro")]
    assert len(f1_macro.split(".")[1]) == 4  # 4-dp presentation
    err_cells = lines[3].split("\t")
    assert err_cells[header.index("status")] == "error"


def test_results_md_flags_best(small_train, small_test, resources):
    rows = grid_rows(small_train, small_test, resources)
    md = render_results_md(rows)
    assert "**" in md       # best score flagged
    assert "ERROR" in md


def test_results_tsv_deterministic(small_train, small_test, resources):
    a = render_results_tsv(grid_rows(small_train, small_test, resources))
    b = render_results_tsv(grid_rows(small_train, small_test, resources))
    assert a == b


# --- persistence ---------------------------------------------------------------

def test_save_load_round_trip_svm(small_train, small_test, resources, tmp_path):
    cfg = ExperimentConfig(name="persist", k_best=200)
    fitted = fit_pipeline(small_train, cfg, resources)
    path = tmp_path / "m.ufnd"
    save_model(path, fitted)
    loaded = load_model(path)
    np.testing.assert_array_equal(
        fitted.decision_values(small_test, resources),
        loaded.decision_values(small_test, resources),
    )
    assert fitted.predict(small_test, resources) == loaded.predict(small_test, resources)
    assert loaded.config == cfg


def test_save_load_round_trip_cnn(small_train, small_test, resources, tmp_path):
    cfg = ExperimentConfig(name="persist-cnn", classifier="cnn", cnn_epochs=2,
                           cnn_channels=(1, 2), seed=1)
    fitted = fit_pipeline(small_train, cfg, resources)
    path = tmp_path / "m.ufnd"
    save_model(path, fitted)
    loaded = load_model(path)
    np.testing.assert_array_equal(
        fitted.decision_values(small_test, resources),
        loaded.decision_values(small_test, resources),
    )
    assert fitted.predict(small_test, resources) == loaded.predict(small_test, resources)


def test_save_is_byte_deterministic(small_train, resources, tmp_path):
    cfg = ExperimentConfig(name="det", k_best=100)
    a, b = tmp_path / "a.ufnd", tmp_path / "b.ufnd"
    save_model(a, fit_pipeline(small_train, cfg, resources))
    save_model(b, fit_pipeline(small_train, cfg, resources))
    assert a.read_bytes() == b.read_bytes()


def test_load_empty_file_names_magic_check(tmp_path):
    p = tmp_path / "empty.ufnd"
    p.write_bytes(b"")
    with pytest.raises(ModelFormatError, match="magic-byte"):
        load_model(p)


def test_load_wrong_magic(tmp_path):
    p = tmp_path / "bad.ufnd"
    p.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(ModelFormatError, match="magic-byte"):
        load_model(p)


def test_load_newer_major_version_refused(small_train, resources, tmp_path):
    cfg = ExperimentConfig(name="v", k_best=100)
    p = tmp_path / "m.ufnd"
    save_model(p, fit_pipeline(small_train, cfg, resources))
    blob = bytearray(p.read_bytes())
    blob[4:8] = (99).to_bytes(4, "little")
    p.write_bytes(bytes(blob))
    with pytest.raises(ModelFormatError, match="newer than supported"):
        load_model(p)


def test_load_truncated_file(small_train, resources, tmp_path):
    cfg = ExperimentConfig(name="t", k_best=100)
    p = tmp_path / "m.ufnd"
    save_model(p, fit_pipeline(small_train, cfg, resources))
    blob = p.read_bytes()
    p.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(ModelFormatError, match="truncated"):
        load_model(p)

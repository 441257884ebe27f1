import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from gatedfusion.dataio import load_dataset
from gatedfusion.disfluency import tag_rates
from gatedfusion.errors import ConfigError
from gatedfusion.pipeline import prepare_session
from gatedfusion.synth import SyntheticSpec, embedding_vector, generate_dataset, synthetic_table


def small_spec(**kw):
    base = dict(
        n_sessions=10, ad_fraction=0.5, seed=1, signal_strength=1.5,
        mean_segments=4.0, frame_rate_hz=20.0,
    )
    base.update(kw)
    return SyntheticSpec(**base)


def dir_digest(root):
    digest = hashlib.sha256()
    for path in sorted(Path(root).rglob("*")):
        if path.is_file():
            digest.update(path.relative_to(root).as_posix().encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


def test_session_and_class_counts(tmp_path):
    manifest = generate_dataset(small_spec(n_sessions=108), tmp_path / "d")
    assert manifest["n_sessions"] == 108
    assert manifest["n_ad"] == 54
    assert len(list((tmp_path / "d" / "features").glob("*.csv"))) == 108


def test_same_seed_byte_identical(tmp_path):
    generate_dataset(small_spec(), tmp_path / "a")
    generate_dataset(small_spec(), tmp_path / "b")
    assert dir_digest(tmp_path / "a") == dir_digest(tmp_path / "b")
    generate_dataset(small_spec(seed=2), tmp_path / "c")
    assert dir_digest(tmp_path / "a") != dir_digest(tmp_path / "c")


def test_dataset_roundtrips_through_loaders(tmp_path):
    generate_dataset(small_spec(), tmp_path / "d")
    records, skipped = load_dataset(
        tmp_path / "d" / "features",
        tmp_path / "d" / "transcripts.jsonl",
        tmp_path / "d" / "labels.csv",
    )
    assert not skipped
    assert len(records) == 10
    for record in records:
        assert record.frames.base_features == 79
        assert record.utterances
        assert any(u.is_participant for u in record.utterances)


def test_mmse_respects_label_bands(tmp_path):
    generate_dataset(small_spec(n_sessions=40), tmp_path / "d")
    records, _ = load_dataset(
        tmp_path / "d" / "features",
        tmp_path / "d" / "transcripts.jsonl",
        tmp_path / "d" / "labels.csv",
    )
    for record in records:
        if record.label == 0:
            assert 25 <= record.mmse <= 30
        else:
            assert 0 <= record.mmse <= 24


def test_signal_plants_disfluency_gap(tmp_path):
    generate_dataset(small_spec(n_sessions=40, signal_strength=2.0), tmp_path / "d")
    records, _ = load_dataset(
        tmp_path / "d" / "features",
        tmp_path / "d" / "transcripts.jsonl",
        tmp_path / "d" / "labels.csv",
    )
    rates = {0: [], 1: []}
    for record in records:
        prepared = prepare_session(record)
        rates[record.label].append(tag_rates(prepared.tags)["edit_rate"])
    assert np.mean(rates[1]) > np.mean(rates[0])


def test_interviewer_utterances_present_but_excluded(tmp_path):
    generate_dataset(small_spec(n_sessions=20), tmp_path / "d")
    records, _ = load_dataset(
        tmp_path / "d" / "features",
        tmp_path / "d" / "transcripts.jsonl",
        tmp_path / "d" / "labels.csv",
    )
    speakers = {u.speaker for r in records for u in r.utterances}
    assert speakers == {"PAR", "INV"}
    prepared = prepare_session(records[0])
    n_par = len(records[0].participant_utterances())
    assert prepared.raw_audio.shape[0] == n_par


def test_embedding_vector_is_seed_and_word_deterministic():
    assert np.array_equal(embedding_vector("cookie", 7), embedding_vector("cookie", 7))
    assert not np.array_equal(embedding_vector("cookie", 7), embedding_vector("cookie", 8))
    assert not np.array_equal(embedding_vector("cookie", 7), embedding_vector("jar", 7))


def test_synthetic_table_matches_written_file(tmp_path):
    generate_dataset(small_spec(), tmp_path / "d")
    from gatedfusion.featurize import EmbeddingTable

    table_file = EmbeddingTable.load(tmp_path / "d" / "embeddings.txt")
    table_hash = synthetic_table(sorted(table_file.entries), seed=1)
    for word in table_file.entries:
        np.testing.assert_allclose(
            table_file.entries[word], table_hash.entries[word], atol=1e-6
        )


def test_invalid_spec_rejected():
    with pytest.raises(ConfigError):
        SyntheticSpec(n_sessions=1).validate()
    with pytest.raises(ConfigError):
        SyntheticSpec(ad_fraction=0.0).validate()
    with pytest.raises(ConfigError):
        SyntheticSpec(signal_strength=-1.0).validate()

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gatedfusion.disfluency import (
    EDIT_WORDS,
    encode_and_concat,
    normalize_tokens,
    tag_incremental,
    tag_one_hot,
    tag_rates,
)
from gatedfusion.errors import DataError
from gatedfusion.numcore import make_rng


class TestTagger:
    def test_repair_after_filled_pause(self):
        # classic reparandum + interregnum + repair
        assert tag_incremental("john likes uh loves mary".split()) == [
            "F", "F", "E", "RPS", "F",
        ]

    def test_isolated_filled_pause(self):
        assert tag_incremental(["um"]) == ["E"]

    def test_immediate_repetition(self):
        assert tag_incremental("the the cat".split()) == ["F", "RPS", "F"]

    def test_repetition_across_edit(self):
        assert tag_incremental("the uh the cat".split()) == ["F", "E", "RPS", "F"]

    def test_phrase_restart(self):
        # second "i" restarts the two-word phrase "i like"
        assert tag_incremental("i like i love mary".split()) == [
            "F", "F", "RPS", "F", "F",
        ]

    def test_phrasal_edit_terms(self):
        # multi-word fillers: the completing word is tagged E (tags never
        # change retroactively, so "i"/"you" keep their earlier tag)
        assert tag_incremental("i mean the cat".split()) == ["F", "E", "F", "F"]
        assert tag_incremental("you know the cat".split()) == ["F", "E", "F", "F"]

    def test_utterance_initial_filler_does_not_create_repair(self):
        assert tag_incremental("um the cat".split()) == ["E", "F", "F"]

    def test_empty_input(self):
        assert tag_incremental([]) == []

    def test_edit_words_always_edit(self):
        rng = make_rng(0)
        vocab = ["cat", "dog", "runs", "fast"] + sorted(EDIT_WORDS)
        for _ in range(50):
            tokens = [vocab[rng.integers(len(vocab))] for _ in range(12)]
            tags = tag_incremental(tokens)
            for tok, tag in zip(tokens, tags):
                if tok in EDIT_WORDS:
                    assert tag == "E"

    def test_distinct_fluent_sequence_all_fluent(self):
        tokens = "one thing leads onward toward another conclusion".split()
        assert tag_incremental(tokens) == ["F"] * len(tokens)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(
            st.sampled_from(["the", "cat", "dog", "uh", "um", "runs", "i", "mean"]),
            max_size=20,
        ),
        st.integers(min_value=0, max_value=20),
    )
    def test_incrementality_prefix_property(self, tokens, cut):
        cut = min(cut, len(tokens))
        full = tag_incremental(tokens)
        assert tag_incremental(tokens[:cut]) == full[:cut]


class TestNormalize:
    def test_lowercase_and_strip(self):
        assert normalize_tokens(["The", "cat,", "sat!"]) == ["the", "cat", "sat"]

    def test_keeps_apostrophes_drops_empty(self):
        assert normalize_tokens(["don't", "...", "(uh)"]) == ["don't", "uh"]


class TestEncode:
    def test_one_hot_order(self):
        assert np.array_equal(
            tag_one_hot(["F", "E", "RPS"]),
            np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]]),
        )

    def test_concat_width(self):
        emb = np.zeros((4, 100))
        out = encode_and_concat(emb, ["F", "E", "RPS", "F"])
        assert out.shape == (4, 103)

    def test_zero_embeddings_leave_pure_one_hot(self):
        out = encode_and_concat(np.zeros((2, 5)), ["F", "RPS"])
        assert np.array_equal(out[:, 5:], np.array([[1.0, 0, 0], [0, 0, 1.0]]))
        assert np.array_equal(out[:, :5], np.zeros((2, 5)))

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            encode_and_concat(np.zeros((3, 5)), ["F", "F"])


def test_tag_rates_add_over_concatenation():
    a = tag_incremental("the the cat uh runs".split())
    b = tag_incremental("um the dog".split())
    ra, rb = tag_rates(a), tag_rates(b)
    rc = tag_rates(a + b)
    assert rc["edits"] == ra["edits"] + rb["edits"]
    assert rc["repairs"] == ra["repairs"] + rb["repairs"]
    assert rc["words"] == ra["words"] + rb["words"]

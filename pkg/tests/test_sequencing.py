import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gatedfusion.errors import DataError
from gatedfusion.numcore import make_rng
from gatedfusion.sequencing import (
    WindowPair,
    WindowSpec,
    align_modalities,
    build_pairs,
    stack_pairs,
    window,
)


def brute_force_window_count(length, timestep, stride):
    count, start = 0, 0
    while start + timestep <= length:
        count += 1
        start += stride
    return count


class TestWindow:
    def test_paper_audio_config(self):
        seq = np.arange(25 * 3, dtype=float).reshape(25, 3)
        windows = window(seq, WindowSpec(20, 1))
        assert len(windows) == 6  # floor((25-20)/1)+1
        assert np.array_equal(windows[0], seq[:20])
        assert np.array_equal(windows[5], seq[5:25])

    def test_exact_fit(self):
        seq = np.arange(10 * 2, dtype=float).reshape(10, 2)
        windows = window(seq, WindowSpec(10, 2))
        assert len(windows) == 1
        assert np.array_equal(windows[0], seq)

    def test_short_sequence_zero_padded(self):
        seq = np.ones((5, 2))
        windows = window(seq, WindowSpec(10, 2))
        assert len(windows) == 1
        assert np.array_equal(windows[0][:5], seq)
        assert np.array_equal(windows[0][5:], np.zeros((5, 2)))

    def test_empty_sequence_yields_one_zero_window(self):
        windows = window(np.zeros((0, 4)), WindowSpec(6, 1))
        assert len(windows) == 1
        assert np.array_equal(windows[0], np.zeros((6, 4)))

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(min_value=1, max_value=60),
        st.integers(min_value=1, max_value=25),
        st.integers(min_value=1, max_value=8),
    )
    def test_count_matches_bruteforce(self, length, timestep, stride):
        seq = np.ones((length, 2))
        got = len(window(seq, WindowSpec(timestep, stride)))
        if length >= timestep:
            assert got == brute_force_window_count(length, timestep, stride)
            assert got == (length - timestep) // stride + 1
        else:
            assert got == 1

    def test_first_rows_reconstruct_strided_sequence(self):
        rng = make_rng(0)
        seq = rng.normal(0, 1, (23, 3))
        spec = WindowSpec(5, 3)
        firsts = np.stack([w[0] for w in window(seq, spec)])
        assert np.array_equal(firsts, seq[0 : len(firsts) * 3 : 3])


class TestAlign:
    def test_six_to_two(self):
        pairs = align_modalities(6, 2)
        assert [t for _, t in pairs] == [0, 0, 0, 1, 1, 1]

    def test_equal_counts_identity(self):
        pairs = align_modalities(4, 4)
        assert pairs == [(0, 0), (1, 1), (2, 2), (3, 3)]

    def test_single_text_window_repeats(self):
        pairs = align_modalities(4, 1)
        assert [t for _, t in pairs] == [0, 0, 0, 0]

    def test_single_audio_window(self):
        assert align_modalities(1, 7) == [(0, 0)]

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 40), st.integers(1, 40))
    def test_length_valid_and_monotone(self, n_audio, n_text):
        pairs = align_modalities(n_audio, n_text)
        assert len(pairs) == n_audio
        text_idx = [t for _, t in pairs]
        assert all(0 <= t < n_text for t in text_idx)
        assert all(a <= b for a, b in zip(text_idx, text_idx[1:]))
        assert text_idx[0] == 0
        if n_audio > 1:
            assert text_idx[-1] == n_text - 1

    def test_missing_modality_rejected(self):
        with pytest.raises(DataError, match="missing modality"):
            align_modalities(0, 3)
        with pytest.raises(DataError, match="missing modality"):
            align_modalities(3, 0)


class TestBuildPairs:
    def _seqs(self):
        rng = make_rng(1)
        return rng.normal(0, 1, (12, 3)), rng.normal(0, 1, (30, 5))

    def test_both_modalities_aligned(self):
        audio, text = self._seqs()
        pairs = build_pairs("s", audio, text, 1, 20, WindowSpec(5, 1), WindowSpec(10, 2))
        assert len(pairs) == 8  # audio window count
        assert all(p.audio.shape == (5, 3) and p.text.shape == (10, 5) for p in pairs)
        assert all(p.label == 1 and p.mmse == 20 for p in pairs)

    def test_unimodal_text_uses_own_windows(self):
        audio, text = self._seqs()
        pairs = build_pairs(
            "s", audio, text, 0, 28, WindowSpec(5, 1), WindowSpec(10, 2), modality="text"
        )
        assert len(pairs) == 11  # floor((30-10)/2)+1
        assert all(p.audio is None for p in pairs)

    def test_stack_pairs(self):
        audio, text = self._seqs()
        pairs = build_pairs("s", audio, text, 1, 20, WindowSpec(5, 1), WindowSpec(10, 2))
        xa, xt, labels, mmse = stack_pairs(pairs, "both")
        assert xa.shape == (8, 5, 3) and xt.shape == (8, 10, 5)
        assert np.all(labels == 1.0) and np.all(mmse == 20.0)

    def test_stack_empty_rejected(self):
        with pytest.raises(DataError):
            stack_pairs([], "both")

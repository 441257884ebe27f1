"""Fixed-shape windowing of per-session sequences and cross-modal alignment.

Each session yields a list of audio windows and a list of text windows; the
smaller text list is stretched to the audio list by proportional
nearest-index mapping so every training instance is an aligned pair from
the same session.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class WindowSpec:
    timestep: int
    stride: int


@dataclass
class WindowPair:
    """One aligned training instance; unused modality windows stay None."""

    session_id: str
    audio: np.ndarray | None
    text: np.ndarray | None
    label: int  # 1 = AD
    mmse: int


def window(seq, spec):
    """Slice seq (L, D) into (T, D) windows at the given stride.

    L >= T gives floor((L-T)/s)+1 windows starting at 0, s, 2s, ...;
    shorter sequences give exactly one window zero-padded at the end, and an
    empty sequence gives one all-zero window.
    """
    seq = np.asarray(seq, dtype=np.float64)
    length, dim = seq.shape
    t, s = spec.timestep, spec.stride
    if length >= t:
        return [seq[start : start + t].copy() for start in range(0, length - t + 1, s)]
    padded = np.zeros((t, dim))
    padded[:length] = seq
    return [padded]


def align_modalities(n_audio, n_text):
    """Pair audio window i with text window round(i*(n_text-1)/(n_audio-1)).

    Rounding is half-to-even. Returns index pairs of length ``n_audio``; the
    mapping is monotone non-decreasing and every text index is valid.
    """
    if n_audio < 1 or n_text < 1:
        raise DataError("session missing modality")
    if n_audio == 1:
        return [(0, 0)]
    scale = (n_text - 1) / (n_audio - 1)
    return [(i, int(np.rint(i * scale))) for i in range(n_audio)]


def build_pairs(session_id, audio_seq, text_seq, label, mmse, audio_spec, text_spec, modality="both"):
    """Window one session's sequences into training pairs for ``modality``.

    Unimodal models train on that modality's own windows; the bimodal model
    trains on aligned (audio, text) pairs, one per audio window.
    """
    if modality in ("audio", "both"):
        audio_windows = window(audio_seq, audio_spec)
    if modality in ("text", "both"):
        text_windows = window(text_seq, text_spec)
    if modality == "audio":
        return [WindowPair(session_id, w, None, label, mmse) for w in audio_windows]
    if modality == "text":
        return [WindowPair(session_id, None, w, label, mmse) for w in text_windows]
    pairs = []
    for ia, it in align_modalities(len(audio_windows), len(text_windows)):
        pairs.append(WindowPair(session_id, audio_windows[ia], text_windows[it], label, mmse))
    return pairs


def stack_pairs(pairs, modality):
    """Stack a batch of pairs into dense arrays (xa, xt, labels, mmse)."""
    if not pairs:
        raise DataError("empty window-pair batch")
    xa = xt = None
    if modality in ("audio", "both"):
        xa = np.stack([p.audio for p in pairs])
    if modality in ("text", "both"):
        xt = np.stack([p.text for p in pairs])
    labels = np.array([p.label for p in pairs], dtype=np.float64)
    mmse = np.array([p.mmse for p in pairs], dtype=np.float64)
    return xa, xt, labels, mmse

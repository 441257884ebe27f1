"""Synthetic dataset generator.

Stands in for the non-redistributable clinical corpus: emits frame-feature
CSVs, a transcript JSONL, a label table, and an embedding table, all
deterministic functions of the seed. Severity drives every planted effect,
scaled by ``signal_strength``:

* a fixed subset of audio features gets severity-proportional mean shifts,
* more utterances lose their audio entirely (zeroed frames),
* word choice drifts from a concrete to a vague vocabulary pool,
* filled pauses and repeated-word repairs become more frequent.

Per-session reliability coins decide whether the audio, lexical, and
disfluency effects are expressed (audio most reliable, lexical least), so
the channels carry complementary rather than redundant signal and fusing
them beats any single one. With ``signal_strength = 0`` the data is
label-independent by construction.
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import (
    INTERVIEWER_SPEAKER,
    PARTICIPANT_SPEAKER,
    Utterance,
    write_frame_csv,
    write_labels,
    write_transcripts,
)
from .errors import ConfigError
from .featurize import EmbeddingTable
from .numcore import make_rng

CONCRETE_WORDS = (
    "boy girl mother cookie jar stool sink water plate window curtain kitchen "
    "reaching taking falling washing drying overflowing standing holding dish "
    "cup counter garden outside little young busy watching laughing handing "
    "stealing climbing tipping spilling apron faucet"
).split()

VAGUE_WORDS = (
    "thing stuff place something someone doing going getting putting looking "
    "being maybe kind sort bit lot really very just there here that this one "
    "two some any other more again also then now okay"
).split()

FILLER_WORDS = ("uh", "um", "er", "eh", "mm")

INTERVIEWER_WORDS = (
    "tell me what you see happening in the picture describe anything else good"
).split()


@dataclass
class SyntheticSpec:
    n_sessions: int = 108
    ad_fraction: float = 0.5
    seed: int = 0
    signal_strength: float = 1.0
    mean_segments: float = 24.86
    n_features: int = 79
    frame_rate_hz: float = 100.0
    embedding_dim: int = 100

    def validate(self):
        if self.n_sessions < 2:
            raise ConfigError("need at least 2 sessions")
        if not 0.0 < self.ad_fraction < 1.0:
            raise ConfigError("ad_fraction must lie in (0, 1)")
        if self.signal_strength < 0.0:
            raise ConfigError("signal_strength must be >= 0")
        if self.mean_segments <= 0 or self.n_features < 1 or self.frame_rate_hz <= 0:
            raise ConfigError("bad synthetic dataset geometry")
        return self


def embedding_vector(word, seed, dim=100):
    """Deterministic per-word vector: any vocabulary, any process, same output.

    The first three components carry a mild pool indicator (concrete, vague,
    filler) so desk-scale models can pick up lexical drift quickly.
    """
    digest = hashlib.sha256(f"{seed}\x00{word}".encode()).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "big")))
    vec = rng.normal(0.0, 0.3, dim)
    if word in CONCRETE_WORDS:
        vec[0] += 1.0
    elif word in VAGUE_WORDS:
        vec[1] += 1.0
    return vec


def synthetic_table(vocab, seed, dim=100):
    return EmbeddingTable(
        dim, {w.lower(): embedding_vector(w.lower(), seed, dim) for w in vocab}
    )


def full_vocabulary():
    return sorted(
        set(CONCRETE_WORDS) | set(VAGUE_WORDS) | set(FILLER_WORDS) | set(INTERVIEWER_WORDS)
    )


def _sample_mmse(rng, label):
    if label == 0:
        return int(rng.integers(25, 31))
    band = rng.choice(3, p=(0.35, 0.45, 0.20))
    if band == 0:
        return int(rng.integers(21, 25))  # mild
    if band == 1:
        return int(rng.integers(10, 21))  # moderate
    return int(rng.integers(0, 10))  # severe


def _participant_tokens(rng, n_words, p_vague, p_edit, p_repeat):
    tokens = []
    for _ in range(n_words):
        pool = VAGUE_WORDS if rng.random() < p_vague else CONCRETE_WORDS
        word = pool[rng.integers(len(pool))]
        if rng.random() < p_repeat:
            tokens.extend([word, word])
        else:
            tokens.append(word)
        if rng.random() < p_edit:
            tokens.append(FILLER_WORDS[rng.integers(len(FILLER_WORDS))])
    return tokens


def generate_dataset(spec, out_dir):
    """Write a complete dataset directory; byte-identical for equal seeds."""
    spec.validate()
    out_dir = Path(out_dir)
    features_dir = out_dir / "features"
    features_dir.mkdir(parents=True, exist_ok=True)
    rng = make_rng(spec.seed)
    s = spec.signal_strength

    n_ad = int(round(spec.n_sessions * spec.ad_fraction))
    labels = np.array([1] * n_ad + [0] * (spec.n_sessions - n_ad))
    rng.shuffle(labels)

    base_mean = rng.normal(0.0, 1.0, spec.n_features)
    shifted = rng.choice(spec.n_features, size=min(12, spec.n_features), replace=False)
    shift_dir = rng.uniform(0.5, 1.5, shifted.size) * rng.choice((-1.0, 1.0), shifted.size)

    label_rows, all_utterances = [], []
    for idx in range(spec.n_sessions):
        sid = f"S{idx:04d}"
        label = int(labels[idx])
        mmse = _sample_mmse(rng, label)
        severity = (30 - mmse) / 30.0
        audio_ok = 1.0 if rng.random() >= 0.2 else 0.0
        text_ok = 1.0 if rng.random() >= 0.5 else 0.0
        dis_ok = 1.0 if rng.random() >= 0.25 else 0.0

        p_vague = min(0.9, 0.08 + 0.60 * s * severity * text_ok)
        p_edit = min(0.5, 0.02 + 0.10 * s * severity * dis_ok)
        p_repeat = min(0.6, 0.015 + 0.30 * s * severity * dis_ok)
        p_missing = min(0.65, 0.04 + 0.22 * s * severity * audio_ok)

        n_utt = max(3, int(rng.poisson(spec.mean_segments)))
        cursor = float(rng.uniform(0.3, 0.8))
        utterances, spans_missing = [], []
        utt_index = 0
        for _ in range(n_utt):
            if rng.random() < 0.12:
                n_iv = int(rng.integers(3, 7))
                iv_tokens = [
                    INTERVIEWER_WORDS[rng.integers(len(INTERVIEWER_WORDS))]
                    for _ in range(n_iv)
                ]
                dur = 0.25 * n_iv + float(rng.uniform(0.1, 0.3))
                utterances.append(
                    Utterance(sid, utt_index, INTERVIEWER_SPEAKER, cursor, cursor + dur, iv_tokens)
                )
                cursor += dur + float(rng.uniform(0.2, 0.6))
                utt_index += 1
            tokens = _participant_tokens(
                rng, int(rng.integers(3, 9)), p_vague, p_edit, p_repeat
            )
            dur = 0.25 * len(tokens) + float(rng.uniform(0.1, 0.3))
            utterances.append(
                Utterance(sid, utt_index, PARTICIPANT_SPEAKER, cursor, cursor + dur, tokens)
            )
            spans_missing.append(
                ((cursor, cursor + dur), rng.random() < p_missing)
            )
            cursor += dur + float(rng.uniform(0.2, 0.6))
            utt_index += 1

        n_frames = int(np.ceil(cursor * spec.frame_rate_hz))
        timestamps = np.arange(n_frames) / spec.frame_rate_hz
        values = base_mean + rng.normal(0.0, 1.0, (n_frames, spec.n_features))
        shift = s * severity * audio_ok
        for (start, end), missing in spans_missing:
            in_span = (timestamps >= start) & (timestamps < end)
            if missing:
                values[in_span] = 0.0
            elif shift > 0.0:
                values[np.ix_(in_span, shifted)] += shift * shift_dir

        write_frame_csv(features_dir / f"{sid}.csv", timestamps, values)
        all_utterances.extend(utterances)
        label_rows.append((sid, label, mmse))

    write_transcripts(out_dir / "transcripts.jsonl", all_utterances)
    write_labels(out_dir / "labels.csv", label_rows)
    synthetic_table(full_vocabulary(), spec.seed, spec.embedding_dim).save(
        out_dir / "embeddings.txt"
    )
    manifest = {
        "n_sessions": spec.n_sessions,
        "n_ad": int(labels.sum()),
        "ad_fraction": spec.ad_fraction,
        "seed": spec.seed,
        "signal_strength": spec.signal_strength,
        "mean_segments": spec.mean_segments,
        "n_features": spec.n_features,
        "frame_rate_hz": spec.frame_rate_hz,
        "embedding_dim": spec.embedding_dim,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest

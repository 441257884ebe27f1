"""Session assembly: raw records -> model-ready window pairs.

Feature selection and normalization are leakage-safe: ``FeaturePipeline.fit``
sees training sessions only and the fitted mask/moments are reapplied
verbatim everywhere else (and stored in checkpoints).
"""

from dataclasses import dataclass

import numpy as np

from .disfluency import encode_and_concat, normalize_tokens, tag_incremental
from .errors import DataError
from .featurize import (
    embed_tokens,
    fixed_chunk_spans,
    segment_spans,
    select_features,
    zscore_apply,
    zscore_fit,
)
from .sequencing import WindowSpec, build_pairs


@dataclass
class PreparedSession:
    """Modality sequences for one session before selection/normalization."""

    session_id: str
    label: int
    mmse: int
    raw_audio: np.ndarray  # (n_segments, base_features * 7)
    words: list  # normalized participant tokens, session order
    tags: list  # disfluency tag per word


def prepare_session(record):
    """Segment audio by participant utterance spans and tag the transcript.

    Sessions without participant utterances fall back to fixed 1-second
    audio chunks and an empty word stream.
    """
    participant = record.participant_utterances()
    spans = [(u.start_time, u.end_time) for u in participant]
    if not spans:
        spans = fixed_chunk_spans(record.frames)
    raw_audio = segment_spans(record.frames, spans)
    words, tags = [], []
    for utt in participant:
        toks = normalize_tokens(utt.tokens)
        words.extend(toks)
        tags.extend(tag_incremental(toks))
    return PreparedSession(
        record.session_id, record.label, record.mmse, raw_audio, words, tags
    )


class FeaturePipeline:
    """Significance-based selection plus z-scoring, fit on training data."""

    def __init__(self, alpha=0.05):
        self.alpha = alpha
        self.keep_mask = None
        self.mu = None
        self.sigma = None

    def fit(self, prepared_train):
        rows = np.vstack([s.raw_audio for s in prepared_train])
        targets = np.concatenate(
            [np.full(s.raw_audio.shape[0], s.label, dtype=np.float64) for s in prepared_train]
        )
        if rows.shape[0] < 2:
            raise DataError("need at least 2 training segments to fit features")
        self.keep_mask = select_features(rows, targets, self.alpha)
        if self.keep_mask.any():
            self.mu, self.sigma = zscore_fit(rows[:, self.keep_mask])
        else:
            self.mu = np.zeros(0)
            self.sigma = np.ones(0)
        return self

    @classmethod
    def from_arrays(cls, keep_mask, mu, sigma, alpha=0.05):
        pipe = cls(alpha)
        pipe.keep_mask = np.asarray(keep_mask, dtype=bool)
        pipe.mu = np.asarray(mu, dtype=np.float64)
        pipe.sigma = np.asarray(sigma, dtype=np.float64)
        return pipe

    @property
    def audio_dim(self):
        return int(self.keep_mask.sum())

    def transform_audio(self, prepared):
        if self.keep_mask is None:
            raise DataError("feature pipeline used before fitting")
        if prepared.raw_audio.shape[1] != self.keep_mask.shape[0]:
            raise DataError(
                f"featurize stage: session {prepared.session_id} has "
                f"{prepared.raw_audio.shape[1]} statistics per segment but the "
                f"selection mask covers {self.keep_mask.shape[0]}"
            )
        if self.audio_dim == 0:
            raise DataError("no audio features survived significance selection")
        return zscore_apply(prepared.raw_audio[:, self.keep_mask], self.mu, self.sigma)


def text_sequence(prepared, table, use_disfluency):
    """(n_words, 100 or 103) tagged word-vector sequence for one session."""
    emb = embed_tokens(prepared.words, table)
    if use_disfluency:
        return encode_and_concat(emb, prepared.tags)
    return emb


def session_pairs(prepared, model_config, pipeline=None, table=None, use_disfluency=True):
    """Window one prepared session into training pairs for the model config."""
    cfg = model_config
    audio_seq = text_seq = None
    if cfg.uses_audio:
        audio_seq = pipeline.transform_audio(prepared)
    if cfg.uses_text:
        text_seq = text_sequence(prepared, table, use_disfluency)
        if text_seq.shape[1] != cfg.text_dim:
            raise DataError(
                f"embed stage: text vectors are {text_seq.shape[1]}-d but the "
                f"model expects {cfg.text_dim}-d"
            )
    if audio_seq is None:
        audio_seq = np.zeros((0, 1))
    if text_seq is None:
        text_seq = np.zeros((0, 1))
    return build_pairs(
        prepared.session_id,
        audio_seq,
        text_seq,
        prepared.label,
        prepared.mmse,
        WindowSpec(cfg.audio.timestep, cfg.audio.stride),
        WindowSpec(cfg.text.timestep, cfg.text.stride),
        modality=cfg.modality,
    )


def build_all_pairs(prepared_sessions, model_config, pipeline=None, table=None, use_disfluency=True):
    pairs = []
    for prepared in prepared_sessions:
        pairs.extend(session_pairs(prepared, model_config, pipeline, table, use_disfluency))
    return pairs

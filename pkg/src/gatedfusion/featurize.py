"""Feature pipeline: segment statistics, normalization, significance-based
selection, and word-embedding lookup.

Audio enters as frame-level feature matrices sampled at a fixed rate; each
utterance span is summarised by seven per-column statistics. Normalization
and feature selection are fit on training data only and reapplied verbatim
to held-out sessions.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .errors import ConfigError, DataError

STAT_NAMES = ("mean", "max", "min", "median", "std", "skew", "kurtosis")
STATS_PER_FEATURE = len(STAT_NAMES)


@dataclass
class FrameMatrix:
    """Frame-level audio features for one session (frames x base features)."""

    session_id: str
    timestamps: np.ndarray
    values: np.ndarray
    frame_rate_hz: float = 100.0

    @property
    def frames(self):
        return self.values.shape[0]

    @property
    def base_features(self):
        return self.values.shape[1]


def segment_stats(segment):
    """Seven statistics per column of segment (n, F), feature-major order.

    Output layout: columns of the segment in order, each contributing
    (mean, max, min, median, std, skew, kurtosis). Std is the sample
    standard deviation (n-1 denominator, 0 for a single frame); skew is the
    third standardized moment and kurtosis is excess kurtosis, both 0 for
    zero-variance columns.
    """
    segment = np.asarray(segment, dtype=np.float64)
    if segment.ndim != 2:
        raise DataError(f"segment must be 2-d, got shape {segment.shape}")
    n = segment.shape[0]
    if n == 0:
        raise DataError("empty segment")
    mean = segment.mean(axis=0)
    mx = segment.max(axis=0)
    mn = segment.min(axis=0)
    med = np.median(segment, axis=0)
    centered = segment - mean
    m2 = np.mean(centered**2, axis=0)
    varying = ~np.all(segment == segment[0], axis=0) & (m2 > 0.0)
    std = segment.std(axis=0, ddof=1) if n > 1 else np.zeros_like(mean)
    std = np.where(varying, std, 0.0)
    safe_m2 = np.where(varying, m2, 1.0)
    skew = np.where(varying, np.mean(centered**3, axis=0) / safe_m2**1.5, 0.0)
    kurt = np.where(varying, np.mean(centered**4, axis=0) / safe_m2**2 - 3.0, 0.0)
    return np.stack([mean, mx, mn, med, std, skew, kurt], axis=1).ravel()


def segment_spans(frame_matrix, spans):
    """Segment a session's frames by (start, end) second spans.

    A span with no frames, or with only zeroed frames, contributes an
    all-zero statistics vector (the missing-audio convention).
    """
    ts = frame_matrix.timestamps
    out = np.zeros((len(spans), frame_matrix.base_features * STATS_PER_FEATURE))
    for k, (start, end) in enumerate(spans):
        rows = frame_matrix.values[(ts >= start) & (ts < end)]
        if rows.shape[0] > 0 and np.any(rows != 0.0):
            out[k] = segment_stats(rows)
    return out


def fixed_chunk_spans(frame_matrix, seconds=1.0):
    """Fallback segmentation: fixed-length chunks covering all frames."""
    if frame_matrix.frames == 0:
        return []
    end = float(frame_matrix.timestamps.max()) + 1.0 / frame_matrix.frame_rate_hz
    edges = np.arange(0.0, end + seconds, seconds)
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1) if edges[i] < end]


def zscore_fit(train):
    """Column means and sample stds from training rows; constants get sigma 1."""
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] < 2:
        raise DataError("z-score fit needs a 2-d matrix with at least 2 rows")
    mu = train.mean(axis=0)
    std = train.std(axis=0, ddof=1)
    constant = np.all(train == train[0], axis=0) | (std == 0.0)
    sigma = np.where(constant, 1.0, std)
    return mu, sigma


def zscore_apply(x, mu, sigma):
    return (np.asarray(x, dtype=np.float64) - mu) / sigma


def zscore_fit_apply(train):
    """Normalize training rows to zero mean / unit sample std per column.

    Returns (normalized, mu, sigma); constant columns map to zero with
    sigma recorded as 1 so the same transform applies to held-out data.
    """
    mu, sigma = zscore_fit(train)
    return zscore_apply(train, mu, sigma), mu, sigma


def select_features(train, targets, alpha=0.05):
    """Keep columns whose Pearson correlation with targets is significant.

    Two-sided t-test with n-2 degrees of freedom; a column is kept iff
    p < alpha. Zero-variance columns are dropped (correlation undefined).
    """
    train = np.asarray(train, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if train.shape[0] != targets.shape[0]:
        raise DataError("row count of the matrix must match the target length")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    keep = np.zeros(train.shape[1], dtype=bool)
    if np.all(targets == targets[0]):
        return keep
    for j in range(train.shape[1]):
        col = train[:, j]
        if np.all(col == col[0]):
            continue
        keep[j] = sps.pearsonr(col, targets).pvalue < alpha
    return keep


class EmbeddingTable:
    """Word -> vector lookup with case-normalized keys and zero-vector OOV."""

    def __init__(self, dim, entries):
        self.dim = dim
        self.entries = entries

    def __len__(self):
        return len(self.entries)

    def __contains__(self, word):
        return word.lower() in self.entries

    def lookup(self, word):
        vec = self.entries.get(word.lower())
        return vec if vec is not None else np.zeros(self.dim)

    @classmethod
    def load(cls, path):
        """Parse the plain-text layout: word then dim whitespace-separated floats."""
        entries = {}
        dim = None
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                parts = line.rstrip("\n").split()
                if not parts:
                    continue
                word, values = parts[0], parts[1:]
                if dim is None:
                    dim = len(values)
                    if dim == 0:
                        raise DataError(f"{path}:{lineno}: no vector values")
                elif len(values) != dim:
                    raise DataError(
                        f"{path}:{lineno}: expected {dim} values, got {len(values)}"
                    )
                entries.setdefault(word.lower(), np.array(values, dtype=np.float64))
        if not entries:
            raise DataError(f"{path}: empty embedding table")
        return cls(dim, entries)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for word in sorted(self.entries):
                vec = " ".join(f"{v:.6f}" for v in self.entries[word])
                fh.write(f"{word} {vec}\n")


def embed_tokens(tokens, table):
    """Stack per-token vectors into (len, dim); OOV tokens map to zeros."""
    out = np.zeros((len(tokens), table.dim))
    for i, tok in enumerate(tokens):
        out[i] = table.lookup(tok)
    return out

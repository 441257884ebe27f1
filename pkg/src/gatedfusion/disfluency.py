"""Rule-based incremental disfluency tagging.

Each word gets exactly one of three tags, decided left to right from the
prefix seen so far (a committed tag never changes):

``E``   edit term: a filled pause or phrasal filler, always tagged E.
``RPS`` repair onset: the first word of a repair phase, detected when a word
        restarts an immediately preceding phrase (up to three words back,
        skipping edit terms) or follows an interregnum of edit terms after
        speech it can substitute for.
``F``   everything else.

The tagger approximates a learned incremental detector with deterministic
rules while keeping the same tag schema and word-by-word contract.
"""

import re

import numpy as np

from .errors import DataError

EDIT_WORDS = frozenset({"uh", "um", "er", "eh", "mm"})
EDIT_BIGRAMS = frozenset({("i", "mean"), ("you", "know")})
REPEAT_WINDOW = 3

TAG_FLUENT = "F"
TAG_EDIT = "E"
TAG_REPAIR_ONSET = "RPS"
TAG_ORDER = (TAG_FLUENT, TAG_EDIT, TAG_REPAIR_ONSET)

_TOKEN_RE = re.compile(r"[^a-z0-9']+")


def normalize_tokens(tokens):
    """Lowercase and strip punctuation; drops tokens that become empty."""
    out = []
    for tok in tokens:
        cleaned = _TOKEN_RE.sub("", tok.lower())
        if cleaned:
            out.append(cleaned)
    return out


def tag_incremental(tokens):
    """Tag a normalized token sequence word by word.

    The tag of word i is a function of words 0..i only, so tagging any
    prefix yields a prefix of the full tagging.
    """
    tags = []
    nonedit = []  # repair-context words (tagged F or RPS), in order
    for i, word in enumerate(tokens):
        if word in EDIT_WORDS:
            tags.append(TAG_EDIT)
            continue
        if i > 0 and (tokens[i - 1], word) in EDIT_BIGRAMS:
            # the phrase is the filler; its first word already got a tag but
            # leaves the repair context
            if nonedit and nonedit[-1] == tokens[i - 1]:
                nonedit.pop()
            tags.append(TAG_EDIT)
            continue
        # count edit terms sitting directly before this word (the interregnum)
        j = i - 1
        while j >= 0 and tags[j] == TAG_EDIT:
            j -= 1
        interregnum = j < i - 1
        restart = any(
            nonedit[-m] == word for m in range(1, min(REPEAT_WINDOW, len(nonedit)) + 1)
        )
        if nonedit and (restart or interregnum):
            tags.append(TAG_REPAIR_ONSET)
        else:
            tags.append(TAG_FLUENT)
        nonedit.append(word)
    return tags


def tag_one_hot(tags):
    """(len, 3) one-hot rows in fixed [F, E, RPS] column order."""
    out = np.zeros((len(tags), len(TAG_ORDER)))
    for i, tag in enumerate(tags):
        out[i, TAG_ORDER.index(tag)] = 1.0
    return out


def encode_and_concat(embeddings, tags):
    """Append the one-hot tag encoding to each word vector row."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.shape[0] != len(tags):
        raise DataError(
            f"{embeddings.shape[0]} embedding rows but {len(tags)} tags"
        )
    return np.concatenate([embeddings, tag_one_hot(tags)], axis=1)


def tag_rates(tags):
    """Edit and repair-onset counts per 100 words; counts add over sessions."""
    n = len(tags)
    if n == 0:
        return {"words": 0, "edits": 0, "repairs": 0, "edit_rate": 0.0, "repair_rate": 0.0}
    edits = sum(1 for t in tags if t == TAG_EDIT)
    repairs = sum(1 for t in tags if t == TAG_REPAIR_ONSET)
    return {
        "words": n,
        "edits": edits,
        "repairs": repairs,
        "edit_rate": 100.0 * edits / n,
        "repair_rate": 100.0 * repairs / n,
    }

"""On-disk dataset formats and loaders.

A dataset directory holds:

* ``features/<session_id>.csv`` -- header row, column 1 the frame timestamp
  in seconds, columns 2..N+1 the N frame-level audio features (79 expected).
* ``transcripts.jsonl`` -- one utterance per line:
  ``{session_id, utterance_index, speaker, start_time, end_time, tokens}``.
  Only participant (speaker ``PAR``) utterances are tagged and modeled.
* ``labels.csv`` -- ``session_id,label,mmse`` with label ``ad`` or ``nonad``.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError
from .featurize import FrameMatrix

PARTICIPANT_SPEAKER = "PAR"
INTERVIEWER_SPEAKER = "INV"
LABEL_NAMES = {0: "nonad", 1: "ad"}
LABEL_CODES = {"nonad": 0, "ad": 1}


@dataclass
class Utterance:
    session_id: str
    utterance_index: int
    speaker: str
    start_time: float
    end_time: float
    tokens: list
    tags: list | None = None

    @property
    def is_participant(self):
        return self.speaker == PARTICIPANT_SPEAKER


@dataclass
class SessionRecord:
    """One subject's session: label, score, frames, and transcript."""

    session_id: str
    label: int
    mmse: int
    frames: FrameMatrix | None = None
    utterances: list = field(default_factory=list)

    def participant_utterances(self):
        return [u for u in self.utterances if u.is_participant]


# -- frame features ----------------------------------------------------------


def write_frame_csv(path, timestamps, values):
    cols = ["time_s"] + [f"feat_{j:02d}" for j in range(values.shape[1])]
    frame = pd.DataFrame(
        np.column_stack([timestamps, values]), columns=cols
    )
    frame.to_csv(path, index=False, float_format="%.4f")


def load_frame_csv(path, frame_rate_hz=100.0):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"frame feature file not found: {path}")
    try:
        frame = pd.read_csv(path)
    except Exception as exc:
        raise DataError(f"cannot parse frame features {path}: {exc}") from exc
    if frame.shape[1] < 2:
        raise DataError(f"{path}: need a timestamp column plus features")
    data = frame.to_numpy(dtype=np.float64)
    return FrameMatrix(
        session_id=path.stem,
        timestamps=data[:, 0],
        values=np.ascontiguousarray(data[:, 1:]),
        frame_rate_hz=frame_rate_hz,
    )


# -- transcripts -------------------------------------------------------------


def read_transcripts(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"transcript file not found: {path}")
    utterances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                utterances.append(
                    Utterance(
                        session_id=rec["session_id"],
                        utterance_index=int(rec["utterance_index"]),
                        speaker=rec["speaker"],
                        start_time=float(rec["start_time"]),
                        end_time=float(rec["end_time"]),
                        tokens=list(rec["tokens"]),
                        tags=rec.get("tags"),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: bad transcript record: {exc}") from exc
    return utterances


def write_transcripts(path, utterances):
    with open(path, "w", encoding="utf-8") as fh:
        for u in utterances:
            rec = {
                "session_id": u.session_id,
                "utterance_index": u.utterance_index,
                "speaker": u.speaker,
                "start_time": round(u.start_time, 3),
                "end_time": round(u.end_time, 3),
                "tokens": u.tokens,
            }
            if u.tags is not None:
                rec["tags"] = u.tags
            fh.write(json.dumps(rec) + "\n")


# -- labels ------------------------------------------------------------------


def read_labels(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"label file not found: {path}")
    labels = {}
    with open(path, encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            try:
                sid = row["session_id"]
                code = LABEL_CODES[row["label"].strip().lower()]
                mmse = int(row["mmse"])
            except (KeyError, AttributeError, ValueError) as exc:
                raise DataError(f"{path}: bad label row {row}: {exc}") from exc
            if not 0 <= mmse <= 30:
                raise DataError(f"{path}: MMSE {mmse} outside [0, 30] for {sid}")
            labels[sid] = (code, mmse)
    if not labels:
        raise DataError(f"{path}: no label rows")
    return labels


def write_labels(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["session_id", "label", "mmse"])
        for sid, code, mmse in rows:
            writer.writerow([sid, LABEL_NAMES[code], mmse])


# -- whole datasets ----------------------------------------------------------


def load_dataset(features_dir, transcripts_path, labels_path, frame_rate_hz=100.0):
    """Assemble session records; sessions missing frame files are skipped
    with a warning entry in the returned skip list."""
    labels = read_labels(labels_path)
    by_session = {}
    if transcripts_path and Path(transcripts_path).is_file():
        for u in read_transcripts(transcripts_path):
            by_session.setdefault(u.session_id, []).append(u)
    features_dir = Path(features_dir)
    records, skipped = [], []
    for sid in sorted(labels):
        code, mmse = labels[sid]
        csv_path = features_dir / f"{sid}.csv"
        if not csv_path.is_file():
            skipped.append((sid, f"no frame features at {csv_path}"))
            continue
        frames = load_frame_csv(csv_path, frame_rate_hz)
        utts = sorted(by_session.get(sid, []), key=lambda u: u.utterance_index)
        records.append(SessionRecord(sid, code, mmse, frames, utts))
    if not records:
        raise DataError("no usable sessions: every session was skipped")
    return records, skipped

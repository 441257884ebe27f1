"""Command-line entry points: synth, featurize, tag, train, eval, predict.

Every command accepts ``--config PATH`` (INI-style ``key = value`` sections)
plus ``--seed N``; explicit flags override config values, which override the
built-in defaults. Exit codes: 0 success, 1 configuration error, 2 data
error, 3 numerical failure.
"""

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .dataio import LABEL_NAMES, SessionRecord, load_dataset, load_frame_csv, read_transcripts, write_transcripts
from .disfluency import normalize_tokens, tag_incremental, tag_rates
from .errors import ConfigError, DataError, NumericalError
from .featurize import EmbeddingTable
from .model import BranchConfig, GatedFusionModel, ModelConfig
from .pipeline import FeaturePipeline, build_all_pairs, prepare_session, session_pairs
from .sequencing import stack_pairs
from .synth import SyntheticSpec, generate_dataset, synthetic_table
from .train_eval import (
    MetricsReport,
    TrainConfig,
    evaluate,
    split_cv,
    train,
    write_history,
    write_metrics_json,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _read_config(path):
    if path is None:
        return None
    if not Path(path).is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return cp


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _pick(cli_value, cfg, section, key, cast, default):
    if cli_value is not None:
        return cli_value
    if cfg is not None and cfg.has_option(section, key):
        raw = cfg.get(section, key).strip()
        if cast is bool:
            if raw.lower() in _TRUE:
                return True
            if raw.lower() in _FALSE:
                return False
            raise ConfigError(f"config [{section}] {key}: not a boolean: {raw!r}")
        try:
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"config [{section}] {key}: {exc}") from exc
    return default


def _require(value, what):
    if value is None:
        raise ConfigError(f"missing required setting: {what}")
    return value


# ---------------------------------------------------------------------------
# shared assembly helpers
# ---------------------------------------------------------------------------


def _branch_configs(args, cfg):
    audio = BranchConfig(
        layers=_pick(args.audio_layers, cfg, "model", "audio_layers", int, 4),
        hidden=_pick(args.audio_hidden, cfg, "model", "audio_hidden", int, 256),
        timestep=_pick(args.audio_timestep, cfg, "model", "audio_timestep", int, 20),
        stride=_pick(args.audio_stride, cfg, "model", "audio_stride", int, 1),
    )
    text = BranchConfig(
        layers=_pick(args.text_layers, cfg, "model", "text_layers", int, 2),
        hidden=_pick(args.text_hidden, cfg, "model", "text_hidden", int, 16),
        timestep=_pick(args.text_timestep, cfg, "model", "text_timestep", int, 10),
        stride=_pick(args.text_stride, cfg, "model", "text_stride", int, 2),
    )
    return audio, text


def _load_records(args, cfg):
    features_dir = _require(
        _pick(args.features_dir, cfg, "paths", "features_dir", str, None), "features_dir"
    )
    transcripts = _pick(args.transcripts, cfg, "paths", "transcripts", str, None)
    labels = _require(_pick(args.labels, cfg, "paths", "labels", str, None), "labels")
    records, skipped = load_dataset(features_dir, transcripts, labels)
    for sid, reason in skipped:
        print(f"warning: skipping session {sid}: {reason}", file=sys.stderr)
    return records


def _embedding_table(path, prepared, seed, dim=100):
    """File-backed table when a path is given, else a hash-based synthetic
    table over the dataset vocabulary (reconstructible from seed alone)."""
    if path:
        table = EmbeddingTable.load(path)
        return table, {"mode": "file", "dim": table.dim}
    vocab = sorted({w for p in prepared for w in p.words})
    return synthetic_table(vocab, seed, dim), {"mode": "hash", "seed": seed, "dim": dim}


def _table_for_checkpoint(ckpt, embeddings_path, prepared):
    meta = ckpt.meta["embeddings"]
    if meta["mode"] == "file":
        if not embeddings_path:
            raise ConfigError(
                "checkpoint was trained with a file-backed embedding table; "
                "pass --embeddings"
            )
        table = EmbeddingTable.load(embeddings_path)
    else:
        vocab = sorted({w for p in prepared for w in p.words})
        table = synthetic_table(vocab, meta["seed"], meta["dim"])
    if table.dim != meta["dim"]:
        raise ConfigError(
            f"embed stage: table dim {table.dim} != checkpoint dim {meta['dim']}"
        )
    return table


def _mean_report(reports, task):
    if task == "reg":
        return MetricsReport(rmse=float(np.mean([r.rmse for r in reports])))
    confusion = {
        key: int(sum(r.confusion[key] for r in reports)) for key in ("tp", "fp", "fn", "tn")
    }
    mean = MetricsReport(confusion=confusion)
    for key in (
        "accuracy",
        "precision_ad",
        "recall_ad",
        "f1_ad",
        "precision_nonad",
        "recall_nonad",
        "f1_nonad",
    ):
        setattr(mean, key, float(np.mean([getattr(r, key) for r in reports])))
    return mean


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_synth(args):
    cfg = _read_config(args.config)
    out_dir = _require(_pick(args.out, cfg, "paths", "output_dir", str, None), "output dir")
    spec = SyntheticSpec(
        n_sessions=_pick(args.sessions, cfg, "synth", "sessions", int, 108),
        ad_fraction=_pick(args.ad_fraction, cfg, "synth", "ad_fraction", float, 0.5),
        seed=_pick(args.seed, cfg, "synth", "seed", int, 0),
        signal_strength=_pick(args.signal, cfg, "synth", "signal", float, 1.0),
        mean_segments=_pick(args.mean_segments, cfg, "synth", "mean_segments", float, 24.86),
        n_features=_pick(args.features, cfg, "synth", "features", int, 79),
        frame_rate_hz=_pick(args.frame_rate, cfg, "synth", "frame_rate", float, 100.0),
    )
    manifest = generate_dataset(spec, out_dir)
    print(json.dumps(manifest, sort_keys=True))
    return 0


def cmd_featurize(args):
    cfg = _read_config(args.config)
    records = _load_records(args, cfg)
    out_path = _require(_pick(args.out, cfg, "paths", "features_out", str, None), "output file")
    prepared = [prepare_session(r) for r in records]
    arrays = {f"audio/{p.session_id}": p.raw_audio for p in prepared}
    summary = {
        p.session_id: {
            "segments": int(p.raw_audio.shape[0]),
            "stats_dim": int(p.raw_audio.shape[1]),
            **tag_rates(p.tags),
        }
        for p in prepared
    }
    arrays["summary"] = np.array(json.dumps(summary, sort_keys=True))
    np.savez(out_path, **arrays)
    print(json.dumps({"sessions": len(prepared), "output": str(out_path)}))
    return 0


def cmd_tag(args):
    cfg = _read_config(args.config)
    in_path = _require(
        _pick(args.transcripts, cfg, "paths", "transcripts", str, None), "transcripts"
    )
    out_path = _require(_pick(args.out, cfg, "paths", "tagged_out", str, None), "output file")
    utterances = read_transcripts(in_path)
    tagged = 0
    for utt in utterances:
        if utt.is_participant:
            utt.tokens = normalize_tokens(utt.tokens)
            utt.tags = tag_incremental(utt.tokens)
            tagged += 1
    write_transcripts(out_path, utterances)
    print(json.dumps({"utterances": len(utterances), "tagged": tagged}))
    return 0


def _train_settings(args, cfg):
    task = _pick(args.task, cfg, "train", "task", str, "cls")
    modality = _pick(args.modality, cfg, "model", "modality", str, "both")
    disfluency = _pick(args.disfluency, cfg, "model", "disfluency", bool, True)
    if modality == "audio" and disfluency:
        raise ConfigError("disfluency tagging applies only when the text modality is active")
    train_cfg = TrainConfig(
        task=task,
        lr=_pick(args.lr, cfg, "train", "lr", float, 1e-4),
        epochs=_pick(args.epochs, cfg, "train", "epochs", int, 200),
        batch_size=_pick(args.batch_size, cfg, "train", "batch_size", int, 16),
        seed=_pick(args.seed, cfg, "train", "seed", int, 0),
        patience=_pick(args.patience, cfg, "train", "patience", int, 20),
        folds=_pick(args.folds, cfg, "train", "folds", int, 5),
    ).validate()
    alpha = _pick(args.alpha, cfg, "train", "alpha", float, 0.05)
    return task, modality, disfluency, train_cfg, alpha


def _fit_fold(prepared_train, modality, disfluency, args, cfg, alpha, table):
    pipe = None
    audio_dim = 1
    if modality in ("audio", "both"):
        pipe = FeaturePipeline(alpha).fit(prepared_train)
        audio_dim = pipe.audio_dim
        if audio_dim == 0:
            raise DataError("no audio features survived significance selection")
    audio_branch, text_branch = _branch_configs(args, cfg)
    text_dim = (table.dim + 3 if disfluency else table.dim) if table else 103
    model_cfg = ModelConfig(
        modality=modality,
        audio=audio_branch,
        text=text_branch,
        audio_dim=audio_dim,
        text_dim=text_dim,
        fusion_dim=_pick(args.fusion_dim, cfg, "model", "fusion_dim", int, 128),
        highway_layers=_pick(args.highway_layers, cfg, "model", "highway_layers", int, 3),
        dropout=_pick(args.dropout, cfg, "model", "dropout", float, 0.0),
    ).validate()
    return pipe, GatedFusionModel(model_cfg)


def _save(path, model, params, pipe, task, seed, embed_meta, disfluency):
    if pipe is not None:
        keep_mask, mu, sigma = pipe.keep_mask, pipe.mu, pipe.sigma
    else:
        keep_mask, mu, sigma = np.zeros(0, dtype=bool), np.zeros(0), np.zeros(0)
    save_checkpoint(
        path, model.config, params, keep_mask, mu, sigma,
        task=task, seed=seed, embeddings_meta=embed_meta, use_disfluency=disfluency,
    )


def cmd_train(args):
    cfg = _read_config(args.config)
    out_dir = Path(
        _require(_pick(args.out, cfg, "paths", "output_dir", str, None), "output dir")
    )
    task, modality, disfluency, train_cfg, alpha = _train_settings(args, cfg)
    records = _load_records(args, cfg)
    prepared = [prepare_session(r) for r in records]
    table, embed_meta = (None, {"mode": "none", "dim": 0})
    if modality in ("text", "both"):
        emb_path = _pick(args.embeddings, cfg, "paths", "embeddings", str, None)
        table, embed_meta = _embedding_table(emb_path, prepared, train_cfg.seed)

    out_dir.mkdir(parents=True, exist_ok=True)
    assignment = split_cv(
        [(p.session_id, p.label) for p in prepared], train_cfg.folds, train_cfg.seed
    )
    reports = []
    for fold in range(train_cfg.folds):
        fold_train = [p for p in prepared if assignment[p.session_id] != fold]
        fold_val = [p for p in prepared if assignment[p.session_id] == fold]
        pipe, model = _fit_fold(fold_train, modality, disfluency, args, cfg, alpha, table)
        pairs_train = build_all_pairs(fold_train, model.config, pipe, table, disfluency)
        pairs_val = build_all_pairs(fold_val, model.config, pipe, table, disfluency)
        fold_cfg = TrainConfig(**{**train_cfg.__dict__, "seed": train_cfg.seed + fold})
        result = train(model, pairs_train, fold_cfg, val_pairs=pairs_val)
        report = evaluate(model, result.params, pairs_val, task)
        reports.append(report)
        fold_dir = out_dir / f"fold{fold}"
        fold_dir.mkdir(exist_ok=True)
        write_history(fold_dir / "history.csv", result.history)
        write_metrics_json(fold_dir / "metrics.json", report)
        _save(fold_dir / "checkpoint.npz", model, result.params, pipe,
              task, fold_cfg.seed, embed_meta, disfluency)

    cv_report = {
        "folds": [r.to_json_dict() for r in reports],
        "mean": _mean_report(reports, task).to_json_dict(),
    }
    with open(out_dir / "cv_report.json", "w", encoding="utf-8") as fh:
        json.dump(cv_report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    # final model on the full training set
    pipe, model = _fit_fold(prepared, modality, disfluency, args, cfg, alpha, table)
    pairs = build_all_pairs(prepared, model.config, pipe, table, disfluency)
    result = train(model, pairs, train_cfg)
    write_history(out_dir / "history.csv", result.history)
    _save(out_dir / "checkpoint.npz", model, result.params, pipe,
          task, train_cfg.seed, embed_meta, disfluency)
    print(json.dumps({"cv_mean": cv_report["mean"]}, sort_keys=True))
    return 0


def _prepare_for_checkpoint(ckpt, records, embeddings_path):
    prepared = [prepare_session(r) for r in records]
    table = None
    if ckpt.config.uses_text:
        table = _table_for_checkpoint(ckpt, embeddings_path, prepared)
        expected = table.dim + (3 if ckpt.use_disfluency else 0)
        if expected != ckpt.config.text_dim:
            raise ConfigError(
                f"embed stage: model expects {ckpt.config.text_dim}-d text vectors, "
                f"table provides {expected}-d"
            )
    pipe = None
    if ckpt.config.uses_audio:
        pipe = FeaturePipeline.from_arrays(ckpt.keep_mask, ckpt.mu, ckpt.sigma)
    return prepared, pipe, table


def cmd_eval(args):
    cfg = _read_config(args.config)
    ckpt = load_checkpoint(
        _require(_pick(args.checkpoint, cfg, "paths", "checkpoint", str, None), "checkpoint")
    )
    records = _load_records(args, cfg)
    emb_path = _pick(args.embeddings, cfg, "paths", "embeddings", str, None)
    prepared, pipe, table = _prepare_for_checkpoint(ckpt, records, emb_path)
    model = ckpt.model()
    pairs = build_all_pairs(prepared, model.config, pipe, table, ckpt.use_disfluency)
    report = evaluate(model, ckpt.params, pairs, ckpt.task)
    payload = report.to_json_dict()
    out_path = _pick(args.out, cfg, "paths", "metrics_out", str, None)
    if out_path:
        write_metrics_json(out_path, report)
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_predict(args):
    cfg = _read_config(args.config)
    ckpt = load_checkpoint(
        _require(_pick(args.checkpoint, cfg, "paths", "checkpoint", str, None), "checkpoint")
    )
    frames_path = _require(
        _pick(args.frames, cfg, "paths", "frames", str, None), "frames CSV"
    )
    frames = load_frame_csv(frames_path)
    session_id = args.session_id or frames.session_id
    utterances = []
    transcript_path = _pick(args.transcript, cfg, "paths", "transcripts", str, None)
    if transcript_path and Path(transcript_path).is_file():
        utterances = [
            u for u in read_transcripts(transcript_path) if u.session_id == session_id
        ]
    record = SessionRecord(session_id, 0, 0, frames, utterances)
    emb_path = _pick(args.embeddings, cfg, "paths", "embeddings", str, None)
    prepared, pipe, table = _prepare_for_checkpoint(ckpt, [record], emb_path)
    model = ckpt.model()
    pairs = session_pairs(prepared[0], model.config, pipe, table, ckpt.use_disfluency)
    xa, xt, _, _ = stack_pairs(pairs, model.config.modality)
    label, probability = model.predict_session(ckpt.params, xa, xt, "cls")
    mmse_estimate = model.predict_session(ckpt.params, xa, xt, "reg")
    print(
        json.dumps(
            {
                "session_id": session_id,
                "trained_task": ckpt.task,
                "label": LABEL_NAMES[label],
                "probability": round(probability, 4),
                "mmse_estimate": round(mmse_estimate, 2),
            },
            sort_keys=True,
        )
    )
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="gatedfusion", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="INI config file")
        p.add_argument("--seed", type=int, help="random seed")
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "generate a synthetic dataset")
    p.add_argument("--out", help="dataset output directory")
    p.add_argument("--sessions", type=int)
    p.add_argument("--ad-fraction", dest="ad_fraction", type=float)
    p.add_argument("--signal", type=float, help="planted signal strength (0 = none)")
    p.add_argument("--mean-segments", dest="mean_segments", type=float)
    p.add_argument("--features", type=int, help="frame-level feature count")
    p.add_argument("--frame-rate", dest="frame_rate", type=float)

    data_flags = {
        "--features-dir": "features_dir",
        "--transcripts": "transcripts",
        "--labels": "labels",
    }

    p = add("featurize", cmd_featurize, "write per-session segment statistics")
    for flag, dest in data_flags.items():
        p.add_argument(flag, dest=dest)
    p.add_argument("--out", help="output .npz path")

    p = add("tag", cmd_tag, "disfluency-tag participant utterances")
    p.add_argument("--transcripts")
    p.add_argument("--out", help="tagged JSONL path")

    p = add("train", cmd_train, "cross-validated training run")
    for flag, dest in data_flags.items():
        p.add_argument(flag, dest=dest)
    p.add_argument("--embeddings", help="pretrained embedding table (text format)")
    p.add_argument("--out", help="run output directory")
    p.add_argument("--task", choices=("cls", "reg"))
    p.add_argument("--modality", choices=("audio", "text", "both"))
    p.add_argument("--disfluency", dest="disfluency", action="store_true", default=None)
    p.add_argument("--no-disfluency", dest="disfluency", action="store_false", default=None)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--alpha", type=float, help="feature-selection significance level")
    p.add_argument("--audio-layers", dest="audio_layers", type=int)
    p.add_argument("--audio-hidden", dest="audio_hidden", type=int)
    p.add_argument("--audio-timestep", dest="audio_timestep", type=int)
    p.add_argument("--audio-stride", dest="audio_stride", type=int)
    p.add_argument("--text-layers", dest="text_layers", type=int)
    p.add_argument("--text-hidden", dest="text_hidden", type=int)
    p.add_argument("--text-timestep", dest="text_timestep", type=int)
    p.add_argument("--text-stride", dest="text_stride", type=int)
    p.add_argument("--fusion-dim", dest="fusion_dim", type=int)
    p.add_argument("--highway-layers", dest="highway_layers", type=int)
    p.add_argument("--dropout", type=float)

    p = add("eval", cmd_eval, "evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint")
    for flag, dest in data_flags.items():
        p.add_argument(flag, dest=dest)
    p.add_argument("--embeddings")
    p.add_argument("--out", help="metrics JSON path")

    p = add("predict", cmd_predict, "single-session prediction")
    p.add_argument("--checkpoint")
    p.add_argument("--frames", help="session frame-feature CSV")
    p.add_argument("--transcript", help="transcript JSONL (filtered by session id)")
    p.add_argument("--embeddings")
    p.add_argument("--session-id", dest="session_id")

    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Versioned checkpoint container.

A checkpoint is one ``.npz`` holding every weight matrix verbatim (float64,
bit-exact round trip), the feature-selection mask and normalization moments,
and a JSON metadata blob with the architecture, task, seed, and embedding
provenance. Loading validates the full dimensionality chain and fails closed
on any inconsistency.
"""

import json

import numpy as np

from .errors import ConfigError
from .model import GatedFusionModel, ModelConfig

FORMAT_VERSION = 1


def save_checkpoint(path, model_config, params, keep_mask, mu, sigma, *,
                    task, seed, embeddings_meta, use_disfluency):
    meta = {
        "format_version": FORMAT_VERSION,
        "model": model_config.to_dict(),
        "task": task,
        "seed": seed,
        "embeddings": embeddings_meta,
        "disfluency": bool(use_disfluency),
    }
    arrays = {f"param/{name}": value for name, value in params.items()}
    arrays["feature/keep_mask"] = np.asarray(keep_mask, dtype=bool)
    arrays["feature/mu"] = np.asarray(mu, dtype=np.float64)
    arrays["feature/sigma"] = np.asarray(sigma, dtype=np.float64)
    arrays["meta"] = np.array(json.dumps(meta, sort_keys=True))
    np.savez(path, **arrays)


class Checkpoint:
    def __init__(self, config, params, keep_mask, mu, sigma, meta):
        self.config = config
        self.params = params
        self.keep_mask = keep_mask
        self.mu = mu
        self.sigma = sigma
        self.meta = meta

    @property
    def task(self):
        return self.meta["task"]

    @property
    def use_disfluency(self):
        return self.meta["disfluency"]

    def model(self):
        return GatedFusionModel(self.config)


def load_checkpoint(path):
    """Load and validate; any corruption raises ConfigError before use."""
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"][()]))
            if meta.get("format_version") != FORMAT_VERSION:
                raise ConfigError(
                    f"unsupported checkpoint format {meta.get('format_version')!r}"
                )
            config = ModelConfig.from_dict(meta["model"])
            params = {
                key[len("param/"):]: data[key]
                for key in data.files
                if key.startswith("param/")
            }
            keep_mask = data["feature/keep_mask"]
            mu = data["feature/mu"]
            sigma = data["feature/sigma"]
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"corrupted checkpoint {path}: {exc}") from exc
    model = GatedFusionModel(config)
    model.validate_params(params)
    if config.uses_audio:
        if int(keep_mask.sum()) != config.audio_dim:
            raise ConfigError(
                "checkpoint selection mask keeps "
                f"{int(keep_mask.sum())} features but the model expects "
                f"{config.audio_dim}"
            )
        if mu.shape[0] != config.audio_dim or sigma.shape[0] != config.audio_dim:
            raise ConfigError("checkpoint normalization moments have wrong length")
    if meta["task"] not in ("cls", "reg"):
        raise ConfigError(f"checkpoint has unknown task {meta['task']!r}")
    return Checkpoint(config, params, keep_mask, mu, sigma, meta)

"""Network architecture: BiLSTM branches, highway gating fusion, output heads.

A model instance owns only configuration; parameters travel separately as a
``{name: ndarray}`` dict so the optimizer, checkpointing, and the gradient
checker can treat them uniformly. Forward passes are deterministic functions
of (inputs, params); training-time dropout draws its mask from an explicit
generator.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .lstm import lstm_layer_backward, lstm_layer_forward
from .numcore import glorot_uniform, relu, sigmoid

FORGET_BIAS_INIT = 1.0
GATE_BIAS_INIT = -1.0  # negative: carry-dominant at the start of training


@dataclass
class BranchConfig:
    """Per-modality sequence branch: stacked bidirectional LSTM layers."""

    layers: int
    hidden: int
    timestep: int
    stride: int
    bidirectional: bool = True

    def validate(self):
        if min(self.layers, self.hidden, self.timestep, self.stride) < 1:
            raise ConfigError(f"branch fields must be >= 1: {self}")
        if not self.bidirectional:
            raise ConfigError("unidirectional branches are not supported")

    @property
    def output_dim(self):
        return 2 * self.hidden


def audio_branch_default():
    return BranchConfig(layers=4, hidden=256, timestep=20, stride=1)


def text_branch_default():
    return BranchConfig(layers=2, hidden=16, timestep=10, stride=2)


@dataclass
class ModelConfig:
    """Architecture description, fully serialisable into checkpoints."""

    modality: str = "both"  # "audio" | "text" | "both"
    audio: BranchConfig = field(default_factory=audio_branch_default)
    text: BranchConfig = field(default_factory=text_branch_default)
    audio_dim: int = 553
    text_dim: int = 103
    fusion_dim: int = 128
    highway_layers: int = 3
    dropout: float = 0.0

    def validate(self):
        if self.modality not in ("audio", "text", "both"):
            raise ConfigError(f"unknown modality {self.modality!r}")
        if self.uses_audio:
            self.audio.validate()
            if self.audio_dim < 1:
                raise ConfigError("audio feature dim must be >= 1")
        if self.uses_text:
            self.text.validate()
            if self.text_dim < 1:
                raise ConfigError("text feature dim must be >= 1")
        if self.modality == "both" and (self.fusion_dim < 1 or self.highway_layers < 0):
            raise ConfigError("fusion dim must be >= 1 and highway depth >= 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")
        return self

    @property
    def uses_audio(self):
        return self.modality in ("audio", "both")

    @property
    def uses_text(self):
        return self.modality in ("text", "both")

    @property
    def head_dim(self):
        """Width of the vector feeding the output heads."""
        if self.modality == "both":
            return self.fusion_dim
        if self.modality == "audio":
            return self.audio.output_dim
        return self.text.output_dim

    def to_dict(self):
        d = {
            "modality": self.modality,
            "audio_dim": self.audio_dim,
            "text_dim": self.text_dim,
            "fusion_dim": self.fusion_dim,
            "highway_layers": self.highway_layers,
            "dropout": self.dropout,
        }
        for name, br in (("audio", self.audio), ("text", self.text)):
            d[name] = {
                "layers": br.layers,
                "hidden": br.hidden,
                "timestep": br.timestep,
                "stride": br.stride,
                "bidirectional": br.bidirectional,
            }
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            modality=d["modality"],
            audio=BranchConfig(**d["audio"]),
            text=BranchConfig(**d["text"]),
            audio_dim=d["audio_dim"],
            text_dim=d["text_dim"],
            fusion_dim=d["fusion_dim"],
            highway_layers=d["highway_layers"],
            dropout=d["dropout"],
        ).validate()


# ---------------------------------------------------------------------------
# highway gating layer
# ---------------------------------------------------------------------------


def highway_forward(x, w_gate, b_gate, w_ff, b_ff):
    """One highway layer on x (B, d): blend a relu transform with the input.

    transform gate  tr = sigmoid(x @ w_gate + b_gate)
    carry gate      cr = 1 - tr
    output          y  = tr * relu(x @ w_ff + b_ff) + cr * x
    """
    tr = sigmoid(x @ w_gate + b_gate)
    a_ff = x @ w_ff + b_ff
    h = relu(a_ff)
    y = tr * h + (1.0 - tr) * x
    return y, (x, tr, h, a_ff)


def highway_gates(x, w_gate, b_gate, w_ff, b_ff):
    """Forward pass exposing (y, tr, cr, h) for gate diagnostics."""
    y, (_, tr, h, _) = highway_forward(x, w_gate, b_gate, w_ff, b_ff)
    return y, tr, 1.0 - tr, h


def highway_backward(cache, d_y, w_gate, w_ff):
    x, tr, h, a_ff = cache
    d_tr = d_y * (h - x)
    d_a_gate = d_tr * tr * (1.0 - tr)
    d_a_ff = d_y * tr * (a_ff > 0.0)
    d_x = d_y * (1.0 - tr) + d_a_gate @ w_gate.T + d_a_ff @ w_ff.T
    grads = (
        x.T @ d_a_gate,
        d_a_gate.sum(axis=0),
        x.T @ d_a_ff,
        d_a_ff.sum(axis=0),
    )
    return d_x, grads


# ---------------------------------------------------------------------------
# bidirectional LSTM branch
# ---------------------------------------------------------------------------


class BiLstmBranch:
    """Stacked bidirectional LSTM; outputs the top layer's final fw/bw states."""

    def __init__(self, name, input_dim, cfg):
        self.name = name
        self.input_dim = input_dim
        self.cfg = cfg

    def _layer_dims(self):
        dims = []
        d = self.input_dim
        for _ in range(self.cfg.layers):
            dims.append(d)
            d = 2 * self.cfg.hidden
        return dims

    def param_specs(self):
        nh = self.cfg.hidden
        specs = {}
        for k, d in enumerate(self._layer_dims()):
            for direction in ("fw", "bw"):
                base = f"{self.name}.l{k}.{direction}"
                specs[f"{base}.w_in"] = (d, 4 * nh)
                specs[f"{base}.w_rec"] = (nh, 4 * nh)
                specs[f"{base}.b"] = (4 * nh,)
        return specs

    def init_params(self, rng, params):
        nh = self.cfg.hidden
        for name, shape in self.param_specs().items():
            if name.endswith(".b"):
                b = np.zeros(shape)
                b[nh : 2 * nh] = FORGET_BIAS_INIT
                params[name] = b
            else:
                params[name] = glorot_uniform(rng, shape)

    def forward(self, params, x):
        if x.ndim != 3 or x.shape[1] != self.cfg.timestep or x.shape[2] != self.input_dim:
            raise ConfigError(
                f"branch {self.name!r} expects windows of shape "
                f"(B, {self.cfg.timestep}, {self.input_dim}), got {x.shape}"
            )
        seq = x
        caches = []
        for k in range(self.cfg.layers):
            p = lambda d, n: params[f"{self.name}.l{k}.{d}.{n}"]
            h_fw, cache_fw = lstm_layer_forward(
                seq, p("fw", "w_in"), p("fw", "w_rec"), p("fw", "b")
            )
            rev = np.ascontiguousarray(seq[:, ::-1, :])
            h_bw, cache_bw = lstm_layer_forward(
                rev, p("bw", "w_in"), p("bw", "w_rec"), p("bw", "b")
            )
            caches.append((cache_fw, cache_bw))
            seq = np.concatenate([h_fw, h_bw[:, ::-1, :]], axis=2)
        # final forward state and final backward state of the top layer
        feat = np.concatenate([h_fw[:, -1, :], h_bw[:, -1, :]], axis=1)
        return feat, caches

    def backward(self, caches, d_feat, grads):
        nh = self.cfg.hidden
        d_seq = None
        for k in reversed(range(self.cfg.layers)):
            cache_fw, cache_bw = caches[k]
            nb, nt, _ = cache_fw[0].shape
            if k == self.cfg.layers - 1:
                d_hf = np.zeros((nb, nt, nh))
                d_hb = np.zeros((nb, nt, nh))
                d_hf[:, -1, :] = d_feat[:, :nh]
                d_hb[:, -1, :] = d_feat[:, nh:]
            else:
                d_hf = d_seq[:, :, :nh]
                d_hb = d_seq[:, ::-1, nh:]
            dx_f, dwi_f, dwr_f, db_f = lstm_layer_backward(cache_fw, d_hf)
            dx_b, dwi_b, dwr_b, db_b = lstm_layer_backward(cache_bw, d_hb)
            base = f"{self.name}.l{k}"
            grads[f"{base}.fw.w_in"] = dwi_f
            grads[f"{base}.fw.w_rec"] = dwr_f
            grads[f"{base}.fw.b"] = db_f
            grads[f"{base}.bw.w_in"] = dwi_b
            grads[f"{base}.bw.w_rec"] = dwr_b
            grads[f"{base}.bw.b"] = db_b
            d_seq = dx_f + dx_b[:, ::-1, :]
        return d_seq


# ---------------------------------------------------------------------------
# full model
# ---------------------------------------------------------------------------


class GatedFusionModel:
    """Branches -> (concat -> projection -> highway block) -> task head.

    With a single modality the branch output feeds the head directly (no
    gating), mirroring the plain-LSTM baselines. Classification and
    regression heads are disjoint parameter sets; the task argument picks
    which one a pass uses.
    """

    def __init__(self, config):
        self.config = config.validate()
        self.branches = {}
        if config.uses_audio:
            self.branches["audio"] = BiLstmBranch("audio", config.audio_dim, config.audio)
        if config.uses_text:
            self.branches["text"] = BiLstmBranch("text", config.text_dim, config.text)

    # -- parameters ---------------------------------------------------------

    def init_params(self, rng):
        cfg = self.config
        params = {}
        for branch in self.branches.values():
            branch.init_params(rng, params)
        if cfg.modality == "both":
            concat_dim = cfg.audio.output_dim + cfg.text.output_dim
            params["proj.w"] = glorot_uniform(rng, (concat_dim, cfg.fusion_dim))
            params["proj.b"] = np.zeros(cfg.fusion_dim)
            for j in range(cfg.highway_layers):
                d = cfg.fusion_dim
                params[f"hw{j}.w_gate"] = glorot_uniform(rng, (d, d))
                params[f"hw{j}.b_gate"] = np.full(d, GATE_BIAS_INIT)
                params[f"hw{j}.w_ff"] = glorot_uniform(rng, (d, d))
                params[f"hw{j}.b_ff"] = np.zeros(d)
        for head in ("cls", "reg"):
            params[f"head.{head}.w"] = glorot_uniform(rng, (cfg.head_dim, 1))
            params[f"head.{head}.b"] = np.zeros(1)
        params["head.reg.b"][0] = 15.0  # midpoint of the 0..30 score range
        return params

    def param_specs(self):
        rng = np.random.Generator(np.random.PCG64(0))
        return {k: v.shape for k, v in self.init_params(rng).items()}

    def validate_params(self, params):
        """Reject any parameter set violating the dimensionality chain."""
        for name, shape in self.param_specs().items():
            if name not in params:
                raise ConfigError(f"missing parameter {name!r}")
            if tuple(params[name].shape) != tuple(shape):
                raise ConfigError(
                    f"parameter {name!r} has shape {params[name].shape}, "
                    f"expected {shape}"
                )

    # -- forward / backward -------------------------------------------------

    def forward_train(self, params, xa, xt, task, dropout_rng=None):
        """Raw head output (logit for cls, score for reg) plus backward cache."""
        if task not in ("cls", "reg"):
            raise ConfigError(f"unknown task {task!r}")
        cfg = self.config
        feats = {}
        caches = {}
        for name, branch in self.branches.items():
            x = xa if name == "audio" else xt
            if x is None:
                raise DataError(f"model requires the {name} modality")
            feats[name], caches[name] = branch.forward(params, np.asarray(x, dtype=np.float64))
        if cfg.modality == "both":
            z = np.concatenate([feats["audio"], feats["text"]], axis=1)
        else:
            z = feats[cfg.modality]
        mask = None
        if cfg.dropout > 0.0 and dropout_rng is not None:
            mask = (dropout_rng.random(z.shape) >= cfg.dropout) / (1.0 - cfg.dropout)
            z = z * mask
        hw_caches = []
        if cfg.modality == "both":
            h = z @ params["proj.w"] + params["proj.b"]
            proj_in = z
            for j in range(cfg.highway_layers):
                h, cache = highway_forward(
                    h,
                    params[f"hw{j}.w_gate"],
                    params[f"hw{j}.b_gate"],
                    params[f"hw{j}.w_ff"],
                    params[f"hw{j}.b_ff"],
                )
                hw_caches.append(cache)
        else:
            h = z
            proj_in = None
        raw = (h @ params[f"head.{task}.w"]).ravel() + params[f"head.{task}.b"][0]
        cache = (task, caches, proj_in, mask, hw_caches, h)
        return raw, cache

    def backward(self, params, cache, d_raw):
        """Gradients of a scalar loss given d(loss)/d(raw head output)."""
        task, br_caches, proj_in, mask, hw_caches, h = cache
        cfg = self.config
        grads = {k: np.zeros_like(v) for k, v in params.items()}
        d_raw = np.asarray(d_raw, dtype=np.float64)
        grads[f"head.{task}.w"] = h.T @ d_raw[:, None]
        grads[f"head.{task}.b"] = np.array([d_raw.sum()])
        d_h = d_raw[:, None] @ params[f"head.{task}.w"].T
        if cfg.modality == "both":
            for j in reversed(range(cfg.highway_layers)):
                d_h, (dwg, dbg, dwf, dbf) = highway_backward(
                    hw_caches[j], d_h, params[f"hw{j}.w_gate"], params[f"hw{j}.w_ff"]
                )
                grads[f"hw{j}.w_gate"] = dwg
                grads[f"hw{j}.b_gate"] = dbg
                grads[f"hw{j}.w_ff"] = dwf
                grads[f"hw{j}.b_ff"] = dbf
            grads["proj.w"] = proj_in.T @ d_h
            grads["proj.b"] = d_h.sum(axis=0)
            d_z = d_h @ params["proj.w"].T
        else:
            d_z = d_h
        if mask is not None:
            d_z = d_z * mask
        if cfg.modality == "both":
            na = cfg.audio.output_dim
            d_feats = {"audio": d_z[:, :na], "text": d_z[:, na:]}
        else:
            d_feats = {cfg.modality: d_z}
        for name, branch in self.branches.items():
            branch.backward(br_caches[name], d_feats[name], grads)
        return grads

    def forward(self, params, xa, xt, task):
        """Inference outputs: probability in (0,1) for cls, raw score for reg."""
        raw, _ = self.forward_train(params, xa, xt, task)
        return sigmoid(raw) if task == "cls" else raw

    # -- session-level aggregation ------------------------------------------

    def predict_session(self, params, xa, xt, task):
        """Aggregate one session's windows into a single decision.

        cls: mean of per-window probabilities, label AD iff mean >= 0.5,
        returns (label, probability). reg: mean estimate clamped to [0, 30].
        """
        n = (xa if xa is not None else xt).shape[0]
        if n == 0:
            raise DataError("cannot predict a session with no windows")
        return aggregate_windows(self.forward(params, xa, xt, task), task)


def aggregate_windows(outputs, task):
    """Session decision from per-window outputs: mean with 0.5 threshold for
    cls (boundary counts as AD), mean clamped to [0, 30] for reg."""
    outputs = np.asarray(outputs, dtype=np.float64)
    if outputs.size == 0:
        raise DataError("cannot aggregate an empty window list")
    mean = float(outputs.mean())
    if task == "cls":
        return (1 if mean >= 0.5 else 0), mean
    return min(30.0, max(0.0, mean))

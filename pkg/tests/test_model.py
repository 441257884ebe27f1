import numpy as np
import pytest

from gatedfusion.errors import ConfigError, DataError
from gatedfusion.model import (
    BiLstmBranch,
    BranchConfig,
    GatedFusionModel,
    ModelConfig,
    aggregate_windows,
    highway_forward,
    highway_gates,
)
from gatedfusion.numcore import make_rng
from gatedfusion.train_eval import loss_and_grads


def tiny_config(modality="both", dropout=0.0):
    return ModelConfig(
        modality=modality,
        audio=BranchConfig(layers=2, hidden=5, timestep=4, stride=1),
        text=BranchConfig(layers=1, hidden=3, timestep=3, stride=1),
        audio_dim=4,
        text_dim=6,
        fusion_dim=7,
        highway_layers=3,
        dropout=dropout,
    )


def tiny_batch(rng, nb=4):
    xa = rng.normal(0, 1, (nb, 4, 4))
    xt = rng.normal(0, 1, (nb, 3, 6))
    return xa, xt


class TestHighway:
    def _random_layer(self, rng, d, b_gate):
        return {
            "w_gate": np.zeros((d, d)),
            "b_gate": np.full(d, b_gate),
            "w_ff": rng.normal(0, 0.5, (d, d)),
            "b_ff": rng.normal(0, 0.5, d),
        }

    def test_carry_saturated_is_identity(self):
        rng = make_rng(0)
        layer = self._random_layer(rng, 6, -50.0)
        x = rng.normal(0, 1, (8, 6))
        y, _ = highway_forward(x, **layer)
        assert np.max(np.abs(y - x)) < 1e-12

    def test_transform_saturated_returns_transform(self):
        rng = make_rng(1)
        layer = self._random_layer(rng, 6, 50.0)
        x = rng.normal(0, 1, (8, 6))
        y, (_, _, h, _) = highway_forward(x, **layer)
        assert np.max(np.abs(y - h)) < 1e-12

    def test_gate_complement_is_exact(self):
        rng = make_rng(2)
        layer = {
            "w_gate": rng.normal(0, 0.5, (5, 5)),
            "b_gate": rng.normal(0, 1.0, 5),
            "w_ff": rng.normal(0, 0.5, (5, 5)),
            "b_ff": np.zeros(5),
        }
        x = rng.normal(0, 1, (64, 5))
        _, tr, cr, _ = highway_gates(x, **layer)
        assert np.all((tr > 0) & (tr < 1))
        assert np.all(tr + cr == 1.0)

    def test_fixed_gate_blend(self):
        # w_gate=0, b_gate=-1, w_ff=0, b_ff=0: y = (1 - sigmoid(-1)) * x
        rng = make_rng(3)
        x = rng.normal(0, 1, (5, 4))
        y, _ = highway_forward(
            x, np.zeros((4, 4)), np.full(4, -1.0), np.zeros((4, 4)), np.zeros(4)
        )
        np.testing.assert_allclose(y, 0.7310585786300049 * x, atol=1e-10, rtol=0)

    def test_negative_bias_init_is_carry_dominant(self):
        rng = make_rng(4)
        d = 16
        layer = {
            "w_gate": rng.normal(0, 0.1, (d, d)),
            "b_gate": np.full(d, -1.0),
            "w_ff": rng.normal(0, 0.1, (d, d)),
            "b_ff": np.zeros(d),
        }
        x = rng.normal(0, 1, (1000, d))
        _, tr, _, _ = highway_gates(x, **layer)
        assert tr.mean() < 0.5


class TestBranch:
    @pytest.mark.parametrize(
        "cfg,expected",
        [
            (BranchConfig(layers=4, hidden=256, timestep=20, stride=1), 512),
            (BranchConfig(layers=2, hidden=16, timestep=10, stride=2), 32),
        ],
    )
    def test_output_width(self, cfg, expected):
        rng = make_rng(0)
        branch = BiLstmBranch("b", 8, cfg)
        params = {}
        branch.init_params(rng, params)
        feat, _ = branch.forward(params, rng.normal(0, 1, (1, cfg.timestep, 8)))
        assert feat.shape == (1, expected)

    def test_zero_input_zero_params_zero_output(self):
        cfg = BranchConfig(layers=2, hidden=4, timestep=5, stride=1)
        branch = BiLstmBranch("b", 3, cfg)
        params = {k: np.zeros(s) for k, s in branch.param_specs().items()}
        feat, _ = branch.forward(params, np.zeros((2, 5, 3)))
        assert np.array_equal(feat, np.zeros((2, 8)))

    def test_shape_mismatch_rejected(self):
        cfg = BranchConfig(layers=1, hidden=4, timestep=5, stride=1)
        branch = BiLstmBranch("b", 3, cfg)
        params = {}
        branch.init_params(make_rng(0), params)
        with pytest.raises(ConfigError):
            branch.forward(params, np.zeros((2, 4, 3)))  # wrong timestep
        with pytest.raises(ConfigError):
            branch.forward(params, np.zeros((2, 5, 2)))  # wrong feature dim


class TestFusedModel:
    def test_cls_output_is_probability(self):
        rng = make_rng(0)
        model = GatedFusionModel(tiny_config())
        params = model.init_params(rng)
        xa, xt = tiny_batch(rng)
        p = model.forward(params, xa, xt, "cls")
        assert p.shape == (4,)
        assert np.all((p > 0) & (p < 1))

    def test_carry_saturated_block_reduces_to_projection_head(self):
        rng = make_rng(1)
        model = GatedFusionModel(tiny_config())
        params = model.init_params(rng)
        for j in range(3):
            params[f"hw{j}.w_gate"] = np.zeros_like(params[f"hw{j}.w_gate"])
            params[f"hw{j}.b_gate"] = np.full_like(params[f"hw{j}.b_gate"], -50.0)
        xa, xt = tiny_batch(rng)
        raw, _ = model.forward_train(params, xa, xt, "reg")
        # ablation identity: projection output feeds the head directly
        feats = [model.branches[n].forward(params, x)[0] for n, x in (("audio", xa), ("text", xt))]
        z = np.concatenate(feats, axis=1)
        proj = z @ params["proj.w"] + params["proj.b"]
        expected = (proj @ params["head.reg.w"]).ravel() + params["head.reg.b"][0]
        np.testing.assert_allclose(raw, expected, atol=1e-10, rtol=0)

    def test_heads_are_disjoint(self):
        rng = make_rng(2)
        model = GatedFusionModel(tiny_config())
        params = model.init_params(rng)
        xa, xt = tiny_batch(rng)
        p_before = model.forward(params, xa, xt, "cls")
        params["head.reg.w"] = params["head.reg.w"] * 100.0
        params["head.reg.b"] = params["head.reg.b"] + 7.0
        assert np.array_equal(p_before, model.forward(params, xa, xt, "cls"))

    def test_forward_bit_identical(self):
        rng = make_rng(3)
        model = GatedFusionModel(tiny_config())
        params = model.init_params(rng)
        xa, xt = tiny_batch(rng)
        assert np.array_equal(
            model.forward(params, xa, xt, "cls"), model.forward(params, xa, xt, "cls")
        )

    def test_validate_params_rejects_broken_chain(self):
        rng = make_rng(4)
        model = GatedFusionModel(tiny_config())
        params = model.init_params(rng)
        params["proj.w"] = np.zeros((3, 3))
        with pytest.raises(ConfigError):
            model.validate_params(params)
        del params["proj.w"]
        with pytest.raises(ConfigError):
            model.validate_params(params)

    def test_missing_modality_raises(self):
        rng = make_rng(5)
        model = GatedFusionModel(tiny_config())
        params = model.init_params(rng)
        _, xt = tiny_batch(rng)
        with pytest.raises(DataError):
            model.forward(params, None, xt, "cls")

    def test_dropout_draws_from_generator_and_backprops(self):
        rng = make_rng(6)
        model = GatedFusionModel(tiny_config(dropout=0.5))
        params = model.init_params(rng)
        xa, xt = tiny_batch(rng)
        y = np.array([1.0, 0.0, 1.0, 0.0])
        l1, _ = loss_and_grads(model, params, xa, xt, y, "cls", dropout_rng=make_rng(7))
        l2, _ = loss_and_grads(model, params, xa, xt, y, "cls", dropout_rng=make_rng(7))
        l3, _ = loss_and_grads(model, params, xa, xt, y, "cls", dropout_rng=make_rng(8))
        assert l1 == l2 and l1 != l3


class TestPredictSession:
    def _model(self):
        return GatedFusionModel(tiny_config("audio"))

    def test_constant_windows(self):
        label, prob = aggregate_windows([0.9, 0.9, 0.9], "cls")
        assert label == 1 and prob == pytest.approx(0.9)

    def test_boundary_mean_is_ad(self):
        label, prob = aggregate_windows([0.4, 0.6], "cls")
        assert label == 1 and prob == pytest.approx(0.5)
        label, _ = aggregate_windows([0.4, 0.59], "cls")
        assert label == 0

    def test_reg_mean_clamped(self):
        assert aggregate_windows([35.0, 25.0], "reg") == 30.0
        assert aggregate_windows([-4.0, 2.0], "reg") == 0.0
        assert aggregate_windows([12.0, 14.0], "reg") == 13.0

    def test_reg_clamped_to_score_range(self):
        model = self._model()
        rng = make_rng(1)
        params = model.init_params(rng)
        params["head.reg.b"][0] = 500.0  # force estimates far above the range
        xa = rng.normal(0, 1, (3, 4, 4))
        assert model.predict_session(params, xa, None, "reg") == 30.0

    def test_empty_session_rejected(self):
        model = self._model()
        params = model.init_params(make_rng(2))
        with pytest.raises(DataError):
            model.predict_session(params, np.zeros((0, 4, 4)), None, "reg")


def test_config_roundtrip():
    cfg = tiny_config()
    again = ModelConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


def test_mean_transform_gate_below_half_at_init():
    rng = make_rng(9)
    model = GatedFusionModel(tiny_config())
    params = model.init_params(rng)
    x = rng.normal(0, 1, (1000, 7))
    from gatedfusion.model import highway_gates

    _, tr, _, _ = highway_gates(
        x, params["hw0.w_gate"], params["hw0.b_gate"], params["hw0.w_ff"], params["hw0.b_ff"]
    )
    assert tr.mean() < 0.5

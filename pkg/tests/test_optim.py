import math

import numpy as np
import pytest

from qfuzzy import circuit as circ
from qfuzzy import models as md
from qfuzzy import optim
from qfuzzy.errors import DatasetError, LengthMismatchError, QFuzzyError
from qfuzzy.harness import gen_synthetic


class TestMse:
    def test_examples(self):
        assert optim.mse_loss([1, 0], [1, 0]) == 0
        assert optim.mse_loss([0.5], [1]) == 0.25
        assert optim.mse_loss([0.8, 0.2, 0.6], [1, 0, 1]) == pytest.approx(0.08, abs=1e-15)

    def test_errors(self):
        with pytest.raises(LengthMismatchError):
            optim.mse_loss([0.1], [0, 1])
        with pytest.raises(LengthMismatchError):
            optim.mse_loss([], [])

    def test_nonnegative_zero_iff_equal(self, rng):
        p = rng.uniform(size=20)
        assert optim.mse_loss(p, p) == 0
        q = p.copy()
        q[3] += 1e-9
        assert optim.mse_loss(q, p) > 0


class TestParameterShift:
    @staticmethod
    def cos_eval(params):
        return math.cos(params[0])

    def test_single_rx(self):
        # generic callable path: shifts the raw parameter
        assert optim.parameter_shift_grad(self.cos_eval, [math.pi / 2], 0) == pytest.approx(-1, abs=1e-15)
        assert optim.parameter_shift_grad(self.cos_eval, [0.0], 0) == pytest.approx(0, abs=1e-15)

    def test_shared_parameter_matches_fd(self, rng):
        c = md.build_qfnn_circuit()
        for _ in range(20):
            f = circ.CircuitExpectation(c, rng.uniform(0, math.pi, 2))
            theta = rng.uniform(-math.pi, math.pi, 8)
            for k in range(8):
                ps = optim.parameter_shift_grad(f, theta, k)
                fd = optim.finite_difference_grad(f, theta, k, 1e-4)
                assert abs(ps - fd) < 1e-6

    def test_non_rotation_parameter(self):
        c = md.build_qfnn_circuit(md.QfnnCircuitSpec(fuzzy_block_count=1))
        f = circ.CircuitExpectation(c, [0.1, 0.2])
        with pytest.raises(QFuzzyError):
            optim.parameter_shift_grad(f, np.zeros(5), 7)

    def test_shift_is_exact_not_approximate(self, rng):
        # a naive single shift of a shared parameter would be wrong; summing occurrences is exact
        c = md.build_qfnn_circuit()
        f = circ.CircuitExpectation(c, [0.4, 1.1])
        theta = rng.uniform(0, math.pi, 8)
        h = 1e-5
        plus, minus = theta.copy(), theta.copy()
        plus[5] += h
        minus[5] -= h
        fd = (f(plus) - f(minus)) / (2 * h)
        assert abs(optim.parameter_shift_grad(f, theta, 5) - fd) < 1e-9


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        state = optim.AdamState.zeros(3, 0.1)
        state, p = optim.adam_step(state, [1.0, 2.0, 3.0], np.zeros(3))
        np.testing.assert_array_equal(p, [1, 2, 3])

    def test_first_step(self):
        state, p = optim.adam_step(optim.AdamState.zeros(1, 0.1), [0.0], [1.0])
        assert p[0] == pytest.approx(-0.1 / (1 + 1e-8), abs=1e-15)
        assert state.step == 1

    def test_v_strictly_increases(self, rng):
        state = optim.AdamState.zeros(4, 0.01)
        params = np.zeros(4)
        g = rng.normal(size=4)
        prev = state.v.copy()
        for _ in range(5):
            state, params = optim.adam_step(state, params, g)
            assert np.all(state.v > prev)
            prev = state.v.copy()

    def test_matches_reference_loop(self, rng):
        # hand-rolled reference with the standard constants
        grads = rng.normal(size=(10, 3))
        m = v = np.zeros(3)
        ref = np.ones(3)
        state, p = optim.AdamState.zeros(3, 0.01), np.ones(3)
        for t, g in enumerate(grads, 1):
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            ref = ref - 0.01 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
            state, p = optim.adam_step(state, p, g)
        np.testing.assert_allclose(p, ref, atol=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            optim.adam_step(optim.AdamState.zeros(2), [0.0, 0.0], [1.0])


class TestTrainConfig:
    def test_defaults(self):
        cfg = optim.TrainConfig()
        assert (cfg.lr, cfg.batch_size, cfg.epochs) == (0.01, 32, 20)

    @pytest.mark.parametrize("kw", [dict(epochs=0), dict(batch_size=0), dict(lr=0.05), dict(lr=-0.1),
                                    dict(gradient_mode="adjoint"), dict(loss="hinge")])
    def test_invalid(self, kw):
        with pytest.raises(QFuzzyError):
            optim.TrainConfig(**kw)

    def test_any_lr_override(self):
        assert optim.TrainConfig(lr=0.05, allow_any_lr=True).lr == 0.05


class TestTrain:
    X, y = gen_synthetic(60, 0.2, 3)

    def test_lr_zero_freezes(self):
        model = md.QfnnModel()
        init = model.init_params(np.random.default_rng(0))
        res = optim.train(model, self.X, self.y, optim.TrainConfig(epochs=3, lr=0, seed=0))
        np.testing.assert_array_equal(res.params, init)
        losses = [row["loss"] for row in res.history]
        full = md.loss_value(md.QfnnModel().scores(init, self.X), self.y)
        np.testing.assert_allclose(losses, full, rtol=1e-14)

    def test_history_length_and_determinism(self):
        cfg = optim.TrainConfig(epochs=4, seed=7)
        a = optim.train(md.QfnnModel(), self.X, self.y, cfg, self.X[:10], self.y[:10])
        b = optim.train(md.QfnnModel(), self.X, self.y, cfg, self.X[:10], self.y[:10])
        assert len(a.history) == 4
        assert a.history == b.history
        np.testing.assert_array_equal(a.params, b.params)

    def test_seed_changes_trajectory(self):
        a = optim.train(md.QfnnModel(), self.X, self.y, optim.TrainConfig(epochs=2, seed=1))
        b = optim.train(md.QfnnModel(), self.X, self.y, optim.TrainConfig(epochs=2, seed=2))
        assert not np.array_equal(a.params, b.params)

    def test_finite_difference_mode_tracks_shift_mode(self):
        a = optim.train(md.QfnnModel(), self.X, self.y, optim.TrainConfig(epochs=2, seed=0))
        b = optim.train(md.QfnnModel(), self.X, self.y,
                        optim.TrainConfig(epochs=2, seed=0, gradient_mode="finite_difference"))
        np.testing.assert_allclose(a.params, b.params, atol=1e-5)

    def test_loss_decreases(self):
        res = optim.train(md.QfnnModel(), self.X, self.y, optim.TrainConfig(epochs=15, seed=0))
        assert res.history[-1]["loss"] < res.history[0]["loss"]

    def test_cross_entropy_runs(self):
        res = optim.train(md.AnnModel(), self.X, self.y, optim.TrainConfig(epochs=2, loss="cross_entropy"))
        assert all(np.isfinite(r["loss"]) for r in res.history)

    def test_cf_single_row(self):
        res = optim.train(md.CfModel(), self.X, self.y, optim.TrainConfig(epochs=5), self.X, self.y)
        assert res.params is None and len(res.history) == 1
        assert res.history[0]["train_acc"] == res.history[0]["test_acc"]

    def test_errors(self):
        with pytest.raises(DatasetError) as exc:
            optim.train(md.QfnnModel(), np.zeros((0, 2)), [], optim.TrainConfig())
        assert exc.value.code == "empty-dataset"
        with pytest.raises(DatasetError) as exc:
            optim.train(md.QfnnModel(), self.X, self.y * 2, optim.TrainConfig())
        assert exc.value.code == "non-binary-labels"
        with pytest.raises(LengthMismatchError):
            optim.train(md.QfnnModel(), self.X, self.y[:-1], optim.TrainConfig())

    def test_hfnn_widths_stay_positive(self):
        X4 = np.tile(self.X, (1, 2))
        res = optim.train(md.HybridModel(fuzzy=True), X4[:16], self.y[:16],
                          optim.TrainConfig(epochs=2, lr=0.1, batch_size=8))
        assert np.all(md.HybridModel(fuzzy=True).unpack(res.params)["fuzzy_widths"] >= md.MIN_WIDTH)

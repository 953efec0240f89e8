"""
Tests for the warmup schedule, gradient clipping and the AdamW update.
"""

import numpy as np
import pytest

from duma_mrc.autograd import Tensor
from duma_mrc.errors import ConfigurationError, NumericError
from duma_mrc.model.mc_model import is_decayed
from duma_mrc.training.optim import AdamMoments, adamw_step, clip_grad_norm, global_grad_norm
from duma_mrc.training.schedule import linear_schedule, total_training_steps, warmup_steps


def param(values, grad=None, name="p"):
    tensor = Tensor(np.asarray(values, dtype=np.float64), requires_grad=True, name=name)
    tensor.grad = None if grad is None else np.asarray(grad, dtype=np.float64)
    return tensor


class TestSchedule:
    def test_warmup_steps(self):
        assert warmup_steps(1000, 0.1) == 100
        assert warmup_steps(3, 0.1) == 1

    def test_total_steps_combine_tasks(self):
        assert total_training_steps([30, 70], batch_size=24, epochs=2) == 10

    def test_shape(self):
        total, warmup, peak = 1000, 100, 1e-5
        assert linear_schedule(0, total, warmup, peak) == 0.0
        assert linear_schedule(warmup, total, warmup, peak) == pytest.approx(peak)
        assert linear_schedule(total, total, warmup, peak) == 0.0
        assert linear_schedule(550, total, warmup, peak) == pytest.approx(5e-6)
        assert linear_schedule(50, total, warmup, peak) == pytest.approx(5e-6)

    def test_single_peak(self):
        rates = [linear_schedule(step, 200, 20, 1.0) for step in range(201)]
        assert int(np.argmax(rates)) == 20
        assert all(a <= b for a, b in zip(rates[:21], rates[1:21]))
        assert all(a >= b for a, b in zip(rates[20:], rates[21:]))

    def test_out_of_range_steps_are_clamped(self):
        assert linear_schedule(-5, 100, 10, 1.0) == 0.0
        assert linear_schedule(150, 100, 10, 1.0) == 0.0


class TestClipping:
    def test_scales_down_large_gradients(self):
        params = [param(np.zeros(2), [2.0, 2.0]), param(np.zeros(2), [2.0, 2.0])]
        result = clip_grad_norm(params, 1.0)
        assert result.norm == pytest.approx(4.0)
        assert result.scale == pytest.approx(0.25)
        assert global_grad_norm(params) == pytest.approx(1.0)

    def test_small_gradients_untouched(self):
        params = [param(np.zeros(2), [0.3, 0.4])]
        result = clip_grad_norm(params, 1.0)
        assert result.scale == 1.0
        np.testing.assert_array_equal(params[0].grad, [0.3, 0.4])

    def test_non_finite_gradient(self):
        with pytest.raises(NumericError):
            clip_grad_norm([param(np.zeros(2), [np.inf, 0.0])], 1.0)

    def test_missing_gradients_are_skipped(self):
        assert global_grad_norm([param(np.zeros(3))]) == 0.0


class TestAdamW:
    def test_first_step_moves_by_learning_rate(self):
        params = {"w": param([1.0, -2.0], [0.5, -3.0], name="w")}
        moments = AdamMoments.zeros_like(params)
        adamw_step(params, moments, step=1, lr=0.01, weight_decay=0.0)
        np.testing.assert_allclose(params["w"].data, [0.99, -1.99], rtol=0, atol=0.01 * 0.05)

    def test_zero_gradient_without_decay_is_a_no_op(self):
        params = {"w": param([1.0, 2.0], [0.0, 0.0], name="w")}
        adamw_step(params, AdamMoments.zeros_like(params), step=1, lr=0.1, weight_decay=0.0)
        np.testing.assert_array_equal(params["w"].data, [1.0, 2.0])

    def test_decoupled_decay_skips_excluded_names(self):
        params = {
            "encoder.block0.ff.w_in": param([1.0, -4.0], [0.0, 0.0]),
            "encoder.block0.ff.in_bias": param([1.0, -4.0], [0.0, 0.0]),
        }
        adamw_step(params, AdamMoments.zeros_like(params), step=1, lr=0.1, weight_decay=0.01, decay_filter=is_decayed)
        np.testing.assert_allclose(params["encoder.block0.ff.w_in"].data, [0.999, -3.996], atol=1e-12)
        np.testing.assert_array_equal(params["encoder.block0.ff.in_bias"].data, [1.0, -4.0])

    def test_step_counts_from_one(self):
        params = {"w": param([1.0], [1.0])}
        with pytest.raises(ConfigurationError):
            adamw_step(params, AdamMoments.zeros_like(params), step=0, lr=0.1, weight_decay=0.0)

    @pytest.mark.parametrize(
        "name, decayed",
        [
            ("encoder.block0.attn.wq", True),
            ("encoder.token_embedding", True),
            ("classifier.weight", True),
            ("classifier.bias", False),
            ("encoder.block0.attn.q_bias", False),
            ("encoder.block0.ln1.gain", False),
            ("encoder.ln_final.gain", False),
            ("duma.layer0.ctx.wo", True),
        ],
    )
    def test_decay_filter(self, name, decayed):
        assert is_decayed(name) is decayed

"""
Finite-difference checks of every differentiable op and of the whole model.
"""

import numpy as np
import pytest

from duma_mrc.autograd import Tensor, check_gradients, grad_check, ops, relative_error
from duma_mrc.errors import NumericError
from duma_mrc.services.gradcheck_runner import run_gradcheck

OP_TOLERANCE = 1e-6


def _param(rng, *shape, name=None):
    return Tensor(rng.normal(size=shape), requires_grad=True, name=name)


def _weighted(out: Tensor, weights: np.ndarray) -> Tensor:
    return ops.reduce_sum(ops.mul(out, Tensor(weights)))


class TestScalarOracles:
    def test_square_at_three(self):
        x = Tensor([3.0], requires_grad=True)
        error = grad_check(lambda: ops.reduce_sum(ops.mul(x, x)), [x], eps=1e-5)
        assert error < 1e-8

    def test_relative_error_floor(self):
        assert relative_error(0.0, 0.0) == 0.0
        assert relative_error(1e-12, 0.0) == pytest.approx(1e-4)

    def test_softmax_classifier_cross_entropy(self):
        rng = np.random.default_rng(7)
        weight = _param(rng, 4, 3, name="w")
        bias = _param(rng, 3, name="b")
        x = Tensor(np.array([[0.5, -1.2, 0.8, 2.0]]))

        def objective():
            logits = ops.add(ops.reshape(ops.matmul(x, weight), (3,)), bias)
            return ops.cross_entropy_logits(logits, 1)

        assert grad_check(objective, [weight, bias], eps=1e-5) < 1e-6

    @pytest.mark.parametrize("stencil", [2, 4])
    def test_ignored_parameter_has_zero_error(self, stencil):
        rng = np.random.default_rng(3)
        used = _param(rng, 5, name="used")
        ignored = _param(rng, 3, name="ignored")
        weights = rng.normal(size=5)

        result = check_gradients(
            lambda: ops.reduce_sum(ops.mul(ops.mul(used, used), Tensor(weights))), [ignored], eps=1e-4, stencil=stencil
        )

        assert result.checked_scalars == 3
        assert result.max_relative_error == 0.0

    def test_non_finite_objective_is_numeric_error(self):
        x = Tensor([1.0], requires_grad=True)
        with pytest.raises(NumericError):
            grad_check(lambda: ops.reduce_sum(ops.scale(x, float("inf"))), [x])

    def test_parameters_return_to_original_dtype(self):
        x = Tensor(np.array([1.0, 2.0], dtype=np.float32), requires_grad=True)
        grad_check(lambda: ops.reduce_sum(ops.mul(x, x)), [x])
        assert x.dtype == np.float32
        assert x.grad is None


class TestOpGradients:
    """Every differentiable op against four-point central differences in float64."""

    @pytest.fixture
    def rng(self):
        return np.random.default_rng(2024)

    def _check(self, objective, params):
        result = check_gradients(objective, params, eps=1e-4, stencil=4)
        assert result.max_relative_error < OP_TOLERANCE, result

    def test_elementwise(self, rng):
        a, b = _param(rng, 3, 4), _param(rng, 4)
        w = rng.normal(size=(3, 4))
        self._check(lambda: _weighted(ops.sub(ops.mul(a, b), ops.add(a, b)), w), [a, b])

    def test_gelu(self, rng):
        a = _param(rng, 2, 5)
        w = rng.normal(size=(2, 5))
        self._check(lambda: _weighted(ops.gelu(a), w), [a])

    def test_matmul_batched(self, rng):
        a, b = _param(rng, 2, 3, 4), _param(rng, 2, 4, 5)
        w = rng.normal(size=(2, 3, 5))
        self._check(lambda: _weighted(ops.matmul(a, b), w), [a, b])

    def test_transpose_reshape(self, rng):
        a = _param(rng, 2, 3, 4)
        w = rng.normal(size=(4, 6))
        self._check(lambda: _weighted(ops.reshape(ops.transpose(a, (2, 0, 1)), (4, 6)), w), [a])

    def test_masked_softmax(self, rng):
        a = _param(rng, 2, 3, 5)
        mask = np.array([1, 1, 0, 1, 0]).reshape(1, 1, 5)
        w = rng.normal(size=(2, 3, 5))
        self._check(lambda: _weighted(ops.masked_softmax(a, mask), w), [a])

    def test_layer_norm(self, rng):
        x, gain, bias = _param(rng, 3, 6), _param(rng, 6), _param(rng, 6)
        w = rng.normal(size=(3, 6))
        self._check(lambda: _weighted(ops.layer_norm(x, gain, bias), w), [x, gain, bias])

    def test_pool_slice_concat_stack(self, rng):
        seq = _param(rng, 5, 3)
        mask = np.array([1, 0, 1, 1, 0])
        w = rng.normal(size=(2, 6))

        def objective():
            pooled = ops.mean_pool(seq, mask)
            head = ops.mean_pool(ops.slice_rows(seq, 1, 4), np.array([1, 1, 1]))
            joined = ops.concat([pooled, ops.scale(head, 2.0)], axis=-1)
            return _weighted(ops.stack([joined, ops.gelu(joined)]), w)

        self._check(objective, [seq])

    def test_embedding(self, rng):
        table = _param(rng, 6, 3)
        ids = np.array([0, 2, 2, 5])
        w = rng.normal(size=(4, 3))
        self._check(lambda: _weighted(ops.embedding(table, ids), w), [table])

    def test_dropout_with_fixed_generator(self, rng):
        a = _param(rng, 4, 4)
        w = rng.normal(size=(4, 4))
        self._check(lambda: _weighted(ops.dropout(a, 0.3, np.random.default_rng(5)), w), [a])

    def test_cross_entropy(self, rng):
        logits = _param(rng, 4)
        self._check(lambda: ops.cross_entropy_logits(logits, 2), [logits])


class TestWholeModel:
    """Encoder + DUMA + classifier on the micro configuration."""

    def test_micro_model_seed_zero(self):
        report = run_gradcheck(seed=0)
        assert report.passed
        assert report.max_relative_error < 1e-4
        assert report.checked_scalars > 100

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", [1, 2, 3, 4])
    def test_micro_model_more_seeds(self, seed):
        assert run_gradcheck(seed=seed).max_relative_error < 1e-4

    @pytest.mark.slow
    def test_micro_model_unshared_layers(self):
        assert run_gradcheck(seed=5, share_layers=False).max_relative_error < 1e-4

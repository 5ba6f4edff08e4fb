import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ddppo.exceptions import ConfigurationError, NumericalError
from ddppo.nn import AdamState, FreezeMask, NetSpec, adam_step, init_params
from ddppo.nn.optim import clip_grad_norm


@pytest.fixture
def spec() -> NetSpec:
    return NetSpec(obs_dim=2, hidden_dims=(3,))


def test_first_step_moves_by_lr(spec: NetSpec):
    params = init_params(spec, np.random.default_rng(0))
    grad = np.random.default_rng(1).normal(size=len(params))
    state = AdamState.zeros(len(params))

    out, state = adam_step(params, grad, state, 1e-3, FreezeMask.none(spec.layout), None)

    # bias-corrected first step is lr * g / (|g| + eps)
    expected = params.values - 1e-3 * grad / (np.abs(grad) + 1e-8)
    assert_allclose(out.values, expected, rtol=1e-10)
    assert_allclose(state.m, 0.1 * grad)
    assert_allclose(state.v, 0.001 * grad**2)
    assert state.step_count == 1


def test_frozen_entries_bit_identical(spec: NetSpec):
    params = init_params(spec, np.random.default_rng(0))
    mask = FreezeMask.for_layers(spec.layout, ["trunk"])
    rng = np.random.default_rng(2)
    state = AdamState.zeros(len(params))
    out = params
    for _ in range(5):
        out, state = adam_step(out, rng.normal(size=len(params)), state, 1e-2, mask, 0.5)
    frozen = mask.frozen
    assert_array_equal(out.values[frozen], params.values[frozen])
    assert_array_equal(state.m[frozen], 0.0)
    assert_array_equal(state.v[frozen], 0.0)
    assert np.all(out.values[~frozen] != params.values[~frozen])


def test_frozen_entries_excluded_from_clip_norm():
    spec = NetSpec(obs_dim=1, hidden_dims=(1,))
    params = init_params(spec, np.random.default_rng(0))
    grad = np.zeros(len(params))
    trunk = spec.layout.mask(["trunk"])
    grad[trunk] = 100.0
    head = np.flatnonzero(~trunk)[:2]
    grad[head] = [3.0, 4.0]
    mask = FreezeMask(trunk)

    _, state = adam_step(params, grad, AdamState.zeros(len(params)), 1e-3, mask, 5.0)
    # norm of the unfrozen part is exactly 5: no clipping
    assert_allclose(state.m[head], [0.3, 0.4])


def test_clip_grad_norm():
    grad = np.array([6.0, 8.0])
    clipped, norm = clip_grad_norm(grad, 1.0)
    assert norm == pytest.approx(10.0)
    assert_allclose(clipped, [0.6, 0.8])
    unclipped, _ = clip_grad_norm(grad, None)
    assert unclipped is grad


def test_non_finite_gradient(spec: NetSpec):
    params = init_params(spec, np.random.default_rng(0))
    grad = np.zeros(len(params))
    grad[3] = np.inf
    with pytest.raises(NumericalError):
        adam_step(
            params, grad, AdamState.zeros(len(params)), 1e-3, FreezeMask.none(spec.layout), 0.5
        )


def test_invalid_learning_rate(spec: NetSpec):
    params = init_params(spec, np.random.default_rng(0))
    with pytest.raises(ConfigurationError):
        adam_step(
            params,
            np.zeros(len(params)),
            AdamState.zeros(len(params)),
            0.0,
            FreezeMask.none(spec.layout),
            0.5,
        )

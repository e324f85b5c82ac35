import math

import numpy as np
import pytest

from ritzlab.geometry import sample_batch, unit_hypercube
from ritzlab.network import (
    NetworkArch,
    NetworkFunction,
    NetworkParams,
    empirical_loss_and_gradient,
    forward,
    forward_with_input_grad,
    init_params,
    load_params,
    loss_param_gradient,
    project_weights,
    save_params,
)
from ritzlab.ritz import EllipticProblem, empirical_loss, robin


def make_problem(d):
    return EllipticProblem(
        domain=unit_hypercube(d),
        w=lambda pts: 1.0 + 0.25 * np.cos(pts.sum(axis=1)),
        f=lambda pts: np.sin(pts.sum(axis=1)) + 0.5,
        g=lambda pts: 0.3 * pts.sum(axis=1) - 0.2,
        bc=robin(alpha=1.5, beta=0.7),
        c_w=0.5,
    )


def fd_input_grad(arch, params, x, h=1e-6):
    g = np.zeros_like(x)
    for p in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[p] += h
        xm[p] -= h
        g[p] = (forward(arch, params, xp) - forward(arch, params, xm)) / (2 * h)
    return g


def test_arch_validation_and_counts():
    arch = NetworkArch(widths=(1, 2, 1))
    assert arch.depth == 2
    assert arch.total_weight_count() == 7
    assert NetworkArch(widths=(1, 1, 1)).total_weight_count() == 4
    assert NetworkArch(widths=(2, 3, 2, 1)).hidden_width_product() == 6
    with pytest.raises(ValueError):
        NetworkArch(widths=(1, 1))  # depth 1
    with pytest.raises(ValueError):
        NetworkArch(widths=(1, 2, 3))  # output width != 1
    with pytest.raises(ValueError):
        NetworkArch(widths=(1, 2, 1), weight_bound=0.5)
    with pytest.raises(ValueError):
        NetworkArch(widths=(1, 2, 1), activation="relu")


def test_zero_params_give_zero_network():
    arch = NetworkArch(widths=(2, 4, 3, 1), weight_bound=2.0)
    params = init_params(arch, "zero")
    xs = np.linspace(0, 1, 10).reshape(5, 2)
    assert np.array_equal(forward(arch, params, xs), np.zeros(5))
    res = forward_with_input_grad(arch, params, xs)
    assert np.array_equal(res.input_gradient, np.zeros((5, 2)))


def test_identity_chain_matches_tanh_oracle():
    # widths (1,1,1) with unit weights and zero biases: u(x) = tanh(x)
    arch = NetworkArch(widths=(1, 1, 1), activation="tanh")
    params = NetworkParams(
        weights=[np.array([[1.0]]), np.array([[1.0]])],
        biases=[np.array([0.0]), np.array([0.0])],
    )
    assert forward(arch, params, np.array([1.0])) == pytest.approx(math.tanh(1.0), abs=1e-15)
    assert forward(arch, params, np.array([0.0])) == 0.0
    res = forward_with_input_grad(arch, params, np.array([0.0]))
    # tanh'(0) = 1 through both unit layers
    assert res.input_gradient[0] == pytest.approx(1.0, abs=1e-15)


def test_logistic_oracle():
    arch = NetworkArch(widths=(1, 1, 1), activation="logistic")
    params = NetworkParams(
        weights=[np.array([[1.0]]), np.array([[1.0]])],
        biases=[np.array([0.0]), np.array([0.0])],
    )
    assert forward(arch, params, np.array([0.0])) == pytest.approx(0.5, abs=1e-15)
    res = forward_with_input_grad(arch, params, np.array([0.0]))
    assert res.input_gradient[0] == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("activation", ["tanh", "logistic"])
@pytest.mark.parametrize("widths", [(1, 3, 1), (2, 4, 3, 1), (3, 5, 1)])
def test_input_grad_matches_finite_differences(activation, widths):
    arch = NetworkArch(widths=widths, activation=activation, weight_bound=2.0)
    params = init_params(arch, seed=41)
    rng = np.random.Generator(np.random.Philox(key=7))
    for _ in range(5):
        x = rng.random(arch.input_dim)
        res = forward_with_input_grad(arch, params, x)
        fd = fd_input_grad(arch, params, x)
        assert np.allclose(res.input_gradient, fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("activation", ["tanh", "logistic"])
def test_loss_param_gradient_matches_finite_differences(activation):
    arch = NetworkArch(widths=(2, 5, 4, 1), activation=activation, weight_bound=2.0)
    params = init_params(arch, seed=3)
    problem = make_problem(2)
    batch = sample_batch(problem.domain, 16, 16, seed=5)
    _, grad = empirical_loss_and_gradient(arch, params, batch, problem)

    theta = params.flatten()
    rng = np.random.Generator(np.random.Philox(key=11))
    coords = rng.choice(len(theta), size=20, replace=False)
    for idx in coords:
        h = 1e-6 * max(1.0, abs(theta[idx]))
        tp, tm = theta.copy(), theta.copy()
        tp[idx] += h
        tm[idx] -= h
        lp = empirical_loss(
            NetworkFunction(arch, NetworkParams.unflatten(arch, tp)), batch, problem
        ).total
        lm = empirical_loss(
            NetworkFunction(arch, NetworkParams.unflatten(arch, tm)), batch, problem
        ).total
        fd = (lp - lm) / (2 * h)
        scale = max(abs(fd), abs(grad[idx]), 1e-8 / 1e-5)
        assert abs(grad[idx] - fd) / scale < 1e-5


def test_loss_gradient_shares_loss_with_field_path():
    arch = NetworkArch(widths=(1, 6, 1), weight_bound=3.0)
    params = init_params(arch, seed=9)
    problem = make_problem(1)
    batch = sample_batch(problem.domain, 32, 16, seed=2)
    breakdown, grad = empirical_loss_and_gradient(arch, params, batch, problem)
    direct = empirical_loss(NetworkFunction(arch, params), batch, problem)
    assert breakdown == direct
    assert grad.shape == (arch.total_weight_count(),)
    assert np.array_equal(grad, loss_param_gradient(arch, params, batch, problem))


def test_loss_gradient_linear_in_source_term():
    # the source coupling is linear in f, so g(2f) - g(f) == g(f) - g(0)
    arch = NetworkArch(widths=(1, 4, 1), weight_bound=2.0)
    params = init_params(arch, seed=1)
    base = make_problem(1)
    batch = sample_batch(base.domain, 16, 8, seed=0)

    def with_f(scale):
        return EllipticProblem(
            domain=base.domain,
            w=base.w,
            f=lambda pts, s=scale: s * (np.sin(pts.sum(axis=1)) + 0.5),
            g=base.g,
            bc=base.bc,
            c_w=base.c_w,
        )

    g0 = loss_param_gradient(arch, params, batch, with_f(0.0))
    g1 = loss_param_gradient(arch, params, batch, with_f(1.0))
    g2 = loss_param_gradient(arch, params, batch, with_f(2.0))
    assert np.allclose(g2 - g1, g1 - g0, rtol=1e-12, atol=1e-14)


def test_zero_network_zero_data_gradient_vanishes():
    arch = NetworkArch(widths=(1, 3, 1))
    params = init_params(arch, "zero")
    problem = EllipticProblem(
        domain=unit_hypercube(1), w=1.0, f=0.0, g=0.0, bc=robin(1.0, 1.0), c_w=1.0
    )
    batch = sample_batch(problem.domain, 8, 8, seed=0)
    grad = loss_param_gradient(arch, params, batch, problem)
    assert np.array_equal(grad, np.zeros_like(grad))


def test_project_weights_clamps_and_is_idempotent():
    arch = NetworkArch(widths=(1, 3, 1), weight_bound=1.0)
    params = init_params(arch, seed=0)
    params.weights[0][0, 0] = 5.0
    params.biases[1][0] = -4.0
    once = project_weights(params, 1.0)
    assert once.inf_norm() <= 1.0
    twice = project_weights(once, 1.0)
    assert all(np.array_equal(a, b) for a, b in zip(once.weights, twice.weights))
    assert all(np.array_equal(a, b) for a, b in zip(once.biases, twice.biases))


def test_flatten_round_trip_exact():
    arch = NetworkArch(widths=(3, 4, 2, 1), weight_bound=2.0)
    params = init_params(arch, seed=13)
    theta = params.flatten()
    assert theta.shape == (arch.total_weight_count(),)
    back = NetworkParams.unflatten(arch, theta)
    assert np.array_equal(back.flatten(), theta)
    with pytest.raises(ValueError):
        NetworkParams.unflatten(arch, theta[:-1])


def test_init_respects_per_layer_scale_and_seed():
    arch = NetworkArch(widths=(1, 2, 1), weight_bound=1.0)
    p1 = init_params(arch, seed=1)
    p2 = init_params(arch, seed=1)
    assert np.array_equal(p1.flatten(), p2.flatten())
    for k, (a, b) in enumerate(zip(p1.weights, p1.biases), start=1):
        s = min(arch.weight_bound, math.sqrt(6.0 / (arch.widths[k - 1] + arch.widths[k])))
        assert np.abs(a).max() <= s
        assert np.abs(b).max() <= s
    assert not np.array_equal(p1.flatten(), init_params(arch, seed=2).flatten())


def test_output_and_gradient_bounds_under_projection():
    # |u| <= (n_{D-1}+1) * bound and |du/dx_p| <= (prod hidden widths) * bound^D
    rng = np.random.Generator(np.random.Philox(key=23))
    for widths in [(1, 2, 1), (2, 3, 2, 1), (3, 4, 1)]:
        bound = 1.5
        arch = NetworkArch(widths=widths, weight_bound=bound)
        theta = rng.uniform(-3, 3, size=arch.total_weight_count())
        params = project_weights(NetworkParams.unflatten(arch, theta), bound)
        xs = rng.random((50, arch.input_dim))
        res = forward_with_input_grad(arch, params, xs)
        out_bound = (arch.widths[-2] + 1) * bound
        grad_bound = arch.hidden_width_product() * bound**arch.depth
        assert np.abs(res.value).max() <= out_bound + 1e-12
        assert np.abs(res.input_gradient).max() <= grad_bound + 1e-12


def test_hidden_activations_bounded_by_one():
    arch = NetworkArch(widths=(2, 8, 1), activation="logistic", weight_bound=4.0)
    params = init_params(arch, seed=5)
    xs = np.random.Generator(np.random.Philox(key=1)).random((20, 2))
    z = xs @ params.weights[0].T + params.biases[0]
    from scipy.special import expit

    assert np.abs(expit(z)).max() <= 1.0
    assert np.abs(np.tanh(z)).max() <= 1.0


def test_save_load_round_trip_bit_exact(tmp_path):
    arch = NetworkArch(widths=(2, 5, 3, 1), activation="logistic", weight_bound=2.5)
    params = init_params(arch, seed=77)
    path = tmp_path / "net.params"
    save_params(path, arch, params)
    arch2, params2 = load_params(path)
    assert arch2 == arch
    assert np.array_equal(params2.flatten(), params.flatten())


def test_forward_rejects_wrong_dimension():
    arch = NetworkArch(widths=(2, 3, 1))
    params = init_params(arch, seed=0)
    with pytest.raises(ValueError):
        forward(arch, params, np.zeros(3))

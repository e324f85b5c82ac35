"""End-to-end acceptance gates.

Each test is one numbered criterion with its tolerance and runtime budget
pinned.  They are slower than the unit suites and deliberately rerun the
full experiments rather than trusting cached artifacts.
"""

import csv
import json
import math
import time

import numpy as np

from ritzlab.analysis import convergence_sweep, h1_error, h1_norm, median_by_plan
from ritzlab.bounds import (
    HyperParamRequest,
    contraction_scaled_set,
    covering_bound_euclidean,
    exact_rademacher,
    greedy_cover_count,
    lipschitz_in_theta_check,
    massart_bound,
    plan_hyperparams,
    statistical_error_bound,
)
from ritzlab.cli import main as cli_main
from ritzlab.geometry import sample_batch, unit_hypercube
from ritzlab.network import (
    NetworkArch,
    NetworkFunction,
    NetworkParams,
    empirical_loss_and_gradient,
    forward,
    forward_with_input_grad,
    init_params,
)
from ritzlab.problems import built_in_problem, fit_loglog_slope, penalty_gap_1d
from ritzlab.ritz import (
    EllipticProblem,
    dirichlet_penalty,
    empirical_loss,
    generalization_gap,
    neumann,
    robin,
)
from ritzlab.train import TrainConfig, train


def _report(k, detail):
    print(f"[acceptance] criterion {k}: PASS - {detail}")


def _close(grad, fd, rel=1e-5, floor=1e-8):
    return abs(grad - fd) <= max(rel * max(abs(grad), abs(fd)), floor)


def _random_problem(rng, d):
    a = float(rng.uniform(0.5, 2.0))
    b = float(rng.uniform(0.5, 3.0))
    c = float(rng.uniform(0.8, 2.0))

    def w(pts):
        return c + 0.3 * np.sin(b * pts.sum(axis=-1))

    def f(pts):
        return a * np.cos(b * pts.sum(axis=-1)) + 0.5

    kind = rng.choice(["robin", "neumann", "penalty"])
    if kind == "robin":
        bc = robin(float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0)))

        def g(pts):
            return a * np.sin(pts.sum(axis=-1))

    elif kind == "neumann":
        bc = neumann()

        def g(pts):
            return np.cos(pts.sum(axis=-1)) - 0.5

    else:
        bc = dirichlet_penalty(float(rng.uniform(0.1, 0.5)))

        def g(pts):
            return np.zeros(pts.shape[:-1])

    return EllipticProblem(domain=unit_hypercube(d), w=w, f=f, g=g, bc=bc)


def test_criterion_1_gradients_match_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(key=101))
    checked_inputs = checked_params = 0
    for cfg_idx in range(100):
        d = int(rng.integers(1, 4))
        depth = int(rng.integers(2, 4))
        hidden = [int(rng.integers(1, 9)) for _ in range(depth - 1)]
        arch = NetworkArch(
            widths=(d, *hidden, 1),
            activation=str(rng.choice(["tanh", "logistic"])),
            weight_bound=float(rng.uniform(1.0, 3.0)),
        )
        problem = _random_problem(rng, d)
        params = init_params(arch, seed=cfg_idx)
        batch = sample_batch(problem.domain, 8, 8, seed=cfg_idx)

        # input gradient of the network at random interior points
        for x in rng.random((3, d)):
            res = forward_with_input_grad(arch, params, x)
            for i in range(d):
                h = 1e-6
                xp, xm = x.copy(), x.copy()
                xp[i] += h
                xm[i] -= h
                fd = (forward(arch, params, xp) - forward(arch, params, xm)) / (2 * h)
                assert _close(res.input_gradient[i], fd), (cfg_idx, "input", i)
                checked_inputs += 1

        # parameter gradient of the sampled energy at random coordinates
        _, grad = empirical_loss_and_gradient(arch, params, batch, problem)
        theta = params.flatten()
        for idx in rng.choice(len(theta), size=min(4, len(theta)), replace=False):
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
            assert _close(grad[idx], fd), (cfg_idx, "theta", int(idx))
            checked_params += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _report(1, f"100 configs, {checked_inputs} input and {checked_params} "
               f"parameter derivatives, {elapsed:.1f}s")


def test_criterion_2_rademacher_enumeration_within_bounds():
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(key=202))
    for trial in range(50):
        k = int(rng.integers(2, 9))
        n = int(rng.integers(2, 13))
        pts = rng.normal(scale=float(rng.uniform(0.3, 3.0)), size=(k, n))
        exact = exact_rademacher(pts)
        assert exact <= massart_bound(pts) + 1e-12, trial
    for trial in range(50):
        k = int(rng.integers(2, 7))
        n = int(rng.integers(2, 11))
        pts = rng.normal(size=(k, n))
        weights = rng.uniform(-2.0, 2.0, size=n)
        lip = float(np.abs(weights).max())
        scaled = contraction_scaled_set(pts, weights)
        assert exact_rademacher(scaled) <= lip * exact_rademacher(pts) + 1e-12, trial
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    _report(2, f"50 Massart + 50 contraction instances, {elapsed:.1f}s")


def test_criterion_3_greedy_covers_within_euclidean_bound():
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(key=303))
    cases = 0
    for dim in (1, 2, 3):
        for radius in (0.5, 1.0):
            cloud = rng.uniform(-radius, radius, size=(4000, dim))
            for eps in (0.1, 0.25, 0.5):
                greedy = greedy_cover_count(cloud, eps)
                bound = covering_bound_euclidean(eps, radius, dim)
                assert greedy <= bound.value, (dim, radius, eps, greedy, bound.value)
                cases += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _report(3, f"{cases} greedy covers all within the volumetric bound, {elapsed:.1f}s")


def test_criterion_4_theta_lipschitz_probes_dominated():
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(key=404))
    worst_value = worst_grad = 0.0
    for arch_idx in range(100):
        depth = int(rng.integers(2, 4))
        widths = [int(rng.integers(1, 4)) for _ in range(depth - 1)]
        arch = NetworkArch(
            widths=(int(rng.integers(1, 4)), *widths, 1),
            activation="tanh",
            weight_bound=float(rng.choice([1.0, 2.0])),
        )
        rep = lipschitz_in_theta_check(arch, n_probes=2500, seed=arch_idx)
        worst_value = max(worst_value, rep.max_value_ratio / rep.value_bound)
        worst_grad = max(worst_grad, rep.max_grad_ratio / rep.grad_bound)
    assert worst_value <= 1.0 and worst_grad <= 1.0
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    _report(4, f"100 archs x 2500 probe pairs, worst value ratio "
               f"{worst_value:.3g}, worst gradient ratio {worst_grad:.3g}, {elapsed:.1f}s")


def test_criterion_5_penalty_linear_rate():
    t0 = time.perf_counter()
    problem = built_in_problem("sin1d_robin")
    pairs = penalty_gap_1d(problem, [0.2, 0.1, 0.05], n_grid=512)
    slope = fit_loglog_slope(pairs)
    assert 0.9 <= slope <= 1.1, pairs
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _report(5, f"log-log slope {slope:.4f} over beta in {{0.2, 0.1, 0.05}}, {elapsed:.1f}s")


def test_criterion_6_drm_median_relative_h1_error():
    t0 = time.perf_counter()
    problem = built_in_problem("sin1d_robin")
    arch = NetworkArch(widths=(1, 16, 16, 1), activation="tanh", weight_bound=10.0)
    denom = h1_norm(problem.exact, problem.domain, n_quad=4096, method="grid")
    rels = []
    for seed in range(10):
        config = TrainConfig(optimizer="adam", lr=3e-4, lr_schedule="cosine",
                             steps=5000, seed=seed, log_every=1000)
        batch = sample_batch(problem.domain, 512, 512, seed=100 + seed)
        result = train(arch, problem, batch, config)
        err = h1_error(NetworkFunction(arch, result.params), problem.exact,
                       problem.domain, n_quad=4096, method="grid")
        rels.append(err.h1_error / denom)
    median = float(np.median(rels))
    assert median <= 0.15, rels
    elapsed = time.perf_counter() - t0
    assert elapsed < 600.0
    _report(6, f"median relative H1 error {median:.4f} over 10 seeds "
               f"(worst {max(rels):.4f}), {elapsed:.0f}s")


def test_criterion_7_gap_trend_and_calibrated_dominance():
    t0 = time.perf_counter()
    problem = built_in_problem("sin1d_robin")
    arch = NetworkArch(widths=(1, 8, 8, 1), activation="tanh", weight_bound=10.0)
    sample_sizes = (250, 1000, 4000)
    gaps = {}
    for n in sample_sizes:
        per_seed = []
        for seed in range(10):
            config = TrainConfig(optimizer="adam", lr=3e-4, lr_schedule="cosine",
                                 steps=2000, seed=seed, log_every=500)
            batch = sample_batch(problem.domain, n, n, seed=100 + seed)
            result = train(arch, problem, batch, config)
            rep = generalization_gap(NetworkFunction(arch, result.params), problem,
                                     batch, n_fresh=8192, trials=4, seed=80_000 + seed)
            per_seed.append(rep.mean)
        gaps[n] = per_seed
    medians = [float(np.median(gaps[n])) for n in sample_sizes]
    assert medians[0] > medians[1] > medians[2], medians

    raw = {n: statistical_error_bound(arch, n, n, alpha=1.0, beta=1.0).value
           for n in sample_sizes}
    c_aggregate = max(gaps[sample_sizes[0]]) / raw[sample_sizes[0]]
    for n in sample_sizes:
        bound = c_aggregate * raw[n]
        assert all(g <= bound * (1 + 1e-9) for g in gaps[n]), (n, bound, max(gaps[n]))
    elapsed = time.perf_counter() - t0
    assert elapsed < 1200.0
    _report(7, f"medians {medians[0]:.4f} > {medians[1]:.4f} > {medians[2]:.4f}, "
               f"calibrated bound dominates all 30 runs, {elapsed:.0f}s")


def test_criterion_8_sweep_median_h1_strictly_decreasing():
    t0 = time.perf_counter()
    # capacity-starved smallest plan: widths 2 / 8 / 33, N 357 / 932 / 2434
    constants = {"C_width": 1, "C_samples": 100}
    plans = [
        plan_hyperparams(HyperParamRequest(target_accuracy=eps, dim=1, mu=0.5,
                                           constants=constants))
        for eps in (0.4, 0.2, 0.1)
    ]
    template = TrainConfig(optimizer="adam", lr=3e-3, lr_schedule="cosine",
                           steps=5000, log_every=1000)
    rows = convergence_sweep("sin1d_robin", plans, seeds=list(range(10)),
                             train_template=template, n_quad=2048,
                             gap_trials=2, gap_samples=4096)
    assert all(r.status == "ok" for r in rows), [r.status for r in rows]
    med = median_by_plan(rows, "h1_error")
    m = [med[f"plan{i}"]["median"] for i in range(3)]
    assert m[0] > m[1] > m[2], m
    elapsed = time.perf_counter() - t0
    assert elapsed < 1800.0
    _report(8, f"median H1 errors {m[0]:.4f} > {m[1]:.4f} > {m[2]:.4f} "
               f"over 10 seeds each, {elapsed:.0f}s")


def _csv_numbers(path, skip_fields=()):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, out = rows[0], []
    for row in rows[1:]:
        for name, cell in zip(header, row):
            if name in skip_fields:
                continue
            try:
                out.append(float(cell))
            except ValueError:
                out.append(cell)
    return header, out


def test_criterion_9_rerun_from_echoed_config_is_deterministic(tmp_path):
    t0 = time.perf_counter()
    sweep_cfg = {
        "problem": {"name": "sin1d_robin"},
        "plans": [
            {"target_accuracy": 0.5, "constants": {"C_width": 2, "C_samples": 50}},
            {"target_accuracy": 0.25, "constants": {"C_width": 2, "C_samples": 50}},
        ],
        "train": {"steps": 120, "lr": 3e-3},
        "analysis": {"n_quad": 1024, "gap_trials": 2, "gap_samples": 1024},
        "seeds": [0, 1],
        "out_dir": str(tmp_path / "a"),
    }
    cfg_path = tmp_path / "sweep.json"
    cfg_path.write_text(json.dumps(sweep_cfg))
    assert cli_main(["sweep", "--config", str(cfg_path)]) == 0
    echo = str(tmp_path / "a" / "effective_config.json")
    assert cli_main(["sweep", "--config", echo, "--out", str(tmp_path / "b")]) == 0
    header, first = _csv_numbers(tmp_path / "a" / "sweep.csv")
    _, second = _csv_numbers(tmp_path / "b" / "sweep.csv")
    assert len(first) == len(second) and len(first) > 0
    for x, y in zip(first, second):
        if isinstance(x, float):
            assert math.isclose(x, y, rel_tol=1e-12, abs_tol=1e-12), (x, y)
        else:
            assert x == y

    solve_cfg = {
        "problem": {"name": "sin1d_robin"},
        "arch": {"widths": [1, 8, 1]},
        "train": {"steps": 80, "lr": 3e-3, "log_every": 20},
        "sampling": {"n_interior": 128, "n_boundary": 128},
        "analysis": {"n_quad": 1024},
        "out_dir": str(tmp_path / "s1"),
    }
    cfg_path = tmp_path / "solve.json"
    cfg_path.write_text(json.dumps(solve_cfg))
    assert cli_main(["solve", "--config", str(cfg_path)]) == 0
    echo = str(tmp_path / "s1" / "effective_config.json")
    assert cli_main(["solve", "--config", echo, "--out", str(tmp_path / "s2")]) == 0
    _, first = _csv_numbers(tmp_path / "s1" / "history.csv", skip_fields=("seconds",))
    _, second = _csv_numbers(tmp_path / "s2" / "history.csv", skip_fields=("seconds",))
    assert len(first) == len(second) and len(first) > 0
    for x, y in zip(first, second):
        assert math.isclose(x, y, rel_tol=1e-12, abs_tol=1e-12), (x, y)
    elapsed = time.perf_counter() - t0
    _report(9, f"sweep and solve reruns reproduce every numeric CSV field "
               f"(seconds excluded), {elapsed:.0f}s")

"""Command line front end.

Subcommands: solve (train one network and report its error), bounds
(closed-form capacity/bound tables for an architecture or an accuracy plan),
sweep (plan-ladder convergence experiment), gap (generalization-gap
measurement over seeds), penalty (1D penalty-size experiment).

Configs are JSON.  Validation is strict: any key the schema does not know is
an error naming the offending path, so typos never silently fall back to
defaults.  The fully-defaulted effective config is echoed next to the
outputs; re-running from the echo reproduces every numeric output field
except wall-clock columns.

Exit codes: 0 success, 2 configuration/validation error, 3 training abort.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys

import numpy as np

from .analysis import (
    SWEEP_FIELDS,
    convergence_sweep,
    h1_error,
)
from .bounds import (
    HyperParamRequest,
    bound_report,
    plan_hyperparams,
    statistical_error_bound,
)
from .geometry import sample_batch
from .network import NetworkArch, NetworkFunction, save_params
from .problems import BUILT_IN_PROBLEMS, built_in_problem, fit_loglog_slope, penalty_gap_1d
from .ritz import generalization_gap
from .train import TrainConfig, TrainingDiverged, history_to_csv, train

__all__ = ["main"]


# ---------------------------------------------------------------------------
# schema: sections, their defaults, and which commands accept them

_SECTION_DEFAULTS = {
    "problem": {"name": "sin1d_robin", "beta": 0.1},
    "arch": {"widths": [1, 16, 16, 1], "activation": "tanh", "weight_bound": 10.0},
    "train": {
        "optimizer": "adam",
        "lr": 3e-4,
        "lr_schedule": "cosine",
        "lr_min_ratio": 0.0,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "steps": 5000,
        "batch_mode": "full",
        "resample_n": None,
        "resample_m": None,
        "project_every_step": True,
        "seed": 0,
        "log_every": 100,
        "init_scheme": "uniform_scaled",
    },
    "sampling": {"n_interior": 512, "n_boundary": 512, "batch_seed": 100},
    "analysis": {"n_quad": 4096, "method": "auto", "gap_trials": 8, "gap_samples": 8192},
    "bounds": {
        "n_interior": 4096,
        "n_boundary": 4096,
        "alpha": 1.0,
        "beta": 1.0,
        "c_aggregate": 1.0,
    },
    "plan": {"target_accuracy": 0.5, "dim": None, "mu": 0.5, "mode": "robin", "constants": {}},
    "penalty": {"beta_list": [0.2, 0.1, 0.05], "n_grid": 512},
}

_PLAN_ITEM_DEFAULTS = _SECTION_DEFAULTS["plan"]

_COMMAND_SECTIONS = {
    "solve": ("problem", "arch", "train", "sampling", "analysis", "out_dir"),
    "bounds": ("arch", "plan", "bounds", "out_dir"),
    "sweep": ("problem", "plans", "train", "analysis", "seeds", "out_dir"),
    "gap": ("problem", "arch", "train", "sampling", "analysis", "seeds", "out_dir"),
    "penalty": ("problem", "penalty", "out_dir"),
}

_TOP_DEFAULTS = {"seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9], "out_dir": "."}


class ConfigError(ValueError):
    pass


def _merge_section(name: str, user: dict, defaults: dict) -> dict:
    if not isinstance(user, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    merged = copy.deepcopy(defaults)
    for key, value in user.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key: {name}.{key}")
        merged[key] = value
    return merged


def _effective_config(command: str, raw: dict) -> dict:
    """Validate a raw config against the command's schema and fill defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be a JSON object")
    allowed = _COMMAND_SECTIONS[command]
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"unknown config key: {key}")
    if command == "bounds" and "plan" in raw and "arch" in raw:
        raise ConfigError("bounds config takes either arch or plan, not both")
    cfg: dict = {}
    for section in allowed:
        if command == "bounds" and section == "arch" and "plan" in raw:
            continue  # keep the echo re-runnable: plan configs carry no arch
        if section == "out_dir":
            value = raw.get("out_dir", _TOP_DEFAULTS["out_dir"])
            if not isinstance(value, str):
                raise ConfigError("config key out_dir must be a string")
            cfg["out_dir"] = value
        elif section == "seeds":
            value = raw.get("seeds", _TOP_DEFAULTS["seeds"])
            if not isinstance(value, list) or not all(isinstance(s, int) for s in value):
                raise ConfigError("config key seeds must be a list of integers")
            cfg["seeds"] = value
        elif section == "plans":
            items = raw.get("plans", [])
            if not isinstance(items, list):
                raise ConfigError("config key plans must be a list")
            cfg["plans"] = [
                _merge_section(f"plans[{i}]", item, _PLAN_ITEM_DEFAULTS)
                for i, item in enumerate(items)
            ]
        elif section == "plan":
            if "plan" in raw:
                cfg["plan"] = _merge_section("plan", raw["plan"], _SECTION_DEFAULTS["plan"])
        else:
            cfg[section] = _merge_section(
                section, raw.get(section, {}), _SECTION_DEFAULTS[section]
            )
    return cfg


def _build_problem(section: dict):
    name = section["name"]
    if name not in BUILT_IN_PROBLEMS:
        raise ConfigError(
            f"unknown problem {name!r}; built-ins: {', '.join(BUILT_IN_PROBLEMS)}"
        )
    return built_in_problem(name, beta=float(section["beta"]))


def _build_arch(section: dict) -> NetworkArch:
    widths = section["widths"]
    if not isinstance(widths, list) or not all(isinstance(wd, int) for wd in widths):
        raise ConfigError("arch.widths must be a list of integers")
    return NetworkArch(
        widths=tuple(widths),
        activation=section["activation"],
        weight_bound=float(section["weight_bound"]),
    )


def _build_train_config(section: dict, seed: int | None = None) -> TrainConfig:
    kwargs = dict(section)
    if seed is not None:
        kwargs["seed"] = seed
    return TrainConfig(**kwargs)


def _build_plan(section: dict, default_dim: int):
    dim = section["dim"] if section["dim"] is not None else default_dim
    request = HyperParamRequest(
        target_accuracy=float(section["target_accuracy"]),
        dim=int(dim),
        mu=float(section["mu"]),
        constants=dict(section["constants"]),
    )
    return plan_hyperparams(request, mode=section["mode"])


def _quad_method(section: dict, dim: int) -> str:
    method = section["method"]
    if method == "auto":
        return "grid" if dim == 1 else "mc"
    if method not in ("grid", "mc"):
        raise ConfigError("analysis.method must be auto, grid, or mc")
    return method


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _echo_config(cfg: dict, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    _write_json(os.path.join(out_dir, "effective_config.json"), cfg)


def _float_repr(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(cfg: dict) -> int:
    problem = _build_problem(cfg["problem"])
    arch = _build_arch(cfg["arch"])
    tcfg = _build_train_config(cfg["train"])
    sampling = cfg["sampling"]
    batch = sample_batch(
        problem.domain,
        int(sampling["n_interior"]),
        int(sampling["n_boundary"]),
        seed=int(sampling["batch_seed"]),
    )
    out_dir = cfg["out_dir"]
    _echo_config(cfg, out_dir)
    history_path = os.path.join(out_dir, "history.csv")
    try:
        result = train(arch, problem, batch, tcfg)
    except TrainingDiverged as exc:
        history_to_csv(exc.history, history_path)
        print(f"training aborted: {exc}", file=sys.stderr)
        return 3
    history_to_csv(result.history, history_path)
    save_params(os.path.join(out_dir, "params.bin"), arch, result.params)

    ana = cfg["analysis"]
    method = _quad_method(ana, problem.domain.dim)
    err = h1_error(
        NetworkFunction(arch, result.params),
        problem.exact,
        problem.domain,
        n_quad=int(ana["n_quad"]),
        seed=70_000 + tcfg.seed,
        method=method,
    )
    report = {
        "problem": problem.label,
        "h1": err.as_dict(),
        "best_total": result.best_total,
        "best_step": result.best_step,
        "final_total": result.final_total,
    }
    _write_json(os.path.join(out_dir, "error_report.json"), report)
    print(
        f"solve: h1_error={err.h1_error:.6g} best_total={result.best_total:.6g} "
        f"(step {result.best_step}) -> {out_dir}"
    )
    return 0


def _print_bounds_table(payload: dict) -> None:
    arch = payload["arch"]
    print(f"arch: widths={arch['widths']} depth={arch['depth']} "
          f"n_weights={arch['n_weights']} B_theta={_float_repr(arch['weight_bound'])}")
    if "plan" in payload:
        plan = payload["plan"]
        print(f"plan: eps={plan['eps']} mode={plan['mode']} depth={plan['depth']} "
              f"weight_count={plan['weight_count']} weight_bound={plan['weight_bound']} "
              f"samples={plan['samples']}")
        if plan["beta"] is not None:
            print(f"plan: beta = C_coe * eps = {plan['beta']}")
    for i in range(1, 6):
        b = payload[f"B{i}"]
        lv = payload[f"L{i}"]
        print(f"B{i}: value={b['value']} log10={b['log10']:.6g}    "
              f"L{i}: value={lv['value']} log10={lv['log10']:.6g}")
    rad = payload["rademacher"]
    print("chaining bounds per class:", rad)
    stat = payload["statistical_bound"]
    print(f"statistical bound: value={stat['value']} log10={stat['log10']:.6g}")


def cmd_bounds(cfg: dict) -> int:
    bcfg = cfg["bounds"]
    n, m = int(bcfg["n_interior"]), int(bcfg["n_boundary"])
    if n != m:
        raise ConfigError(
            "the statistical bound is stated for N == M sampling; "
            f"got N={n}, M={m}"
        )
    plan_info = None
    if "plan" in cfg:
        plan = _build_plan(cfg["plan"], default_dim=cfg["plan"]["dim"] or 1)
        from .analysis import arch_from_plan

        dim = cfg["plan"]["dim"] if cfg["plan"]["dim"] is not None else 1
        arch = arch_from_plan(plan, dim=int(dim))
        plan_info = {
            "eps": plan.eps,
            "mode": plan.mode,
            "depth": plan.depth,
            "weight_count": plan.weight_count,
            "weight_bound": plan.weight_bound,
            "samples": plan.samples,
            "beta": plan.beta,
        }
        if plan.beta is not None:
            bcfg = dict(bcfg)
            bcfg["beta"] = plan.beta
    else:
        arch = _build_arch(cfg["arch"])

    report = bound_report(
        arch,
        n,
        m,
        alpha=float(bcfg["alpha"]),
        beta=float(bcfg["beta"]),
        c_aggregate=float(bcfg["c_aggregate"]),
    )
    payload = report.as_dict()
    if plan_info is not None:
        payload["plan"] = plan_info
    out_dir = cfg["out_dir"]
    _echo_config(cfg, out_dir)
    _write_json(os.path.join(out_dir, "bound_report.json"), payload)
    _print_bounds_table(payload)
    return 0


def cmd_sweep(cfg: dict, jobs: int = 1) -> int:
    problem_name = cfg["problem"]["name"]
    if problem_name not in BUILT_IN_PROBLEMS:
        raise ConfigError(
            f"unknown problem {problem_name!r}; built-ins: {', '.join(BUILT_IN_PROBLEMS)}"
        )
    probe = built_in_problem(problem_name, beta=float(cfg["problem"]["beta"]))
    plans = [_build_plan(p, default_dim=probe.domain.dim) for p in cfg["plans"]]
    tcfg = _build_train_config(cfg["train"])
    ana = cfg["analysis"]
    out_dir = cfg["out_dir"]
    _echo_config(cfg, out_dir)
    out_csv = os.path.join(out_dir, "sweep.csv")
    rows = convergence_sweep(
        problem_name,
        plans,
        seeds=cfg["seeds"],
        out_csv=out_csv,
        train_template=tcfg,
        n_quad=int(ana["n_quad"]),
        gap_trials=int(ana["gap_trials"]),
        gap_samples=int(ana["gap_samples"]),
        jobs=jobs,
        problem_beta=float(cfg["problem"]["beta"]),
    )
    ok = sum(1 for r in rows if r.status == "ok")
    print(f"sweep: {ok}/{len(rows)} cells ok -> {out_csv}")
    if rows and ok == 0:
        return 3
    return 0


def cmd_gap(cfg: dict) -> int:
    problem = _build_problem(cfg["problem"])
    arch = _build_arch(cfg["arch"])
    sampling = cfg["sampling"]
    if int(sampling["n_interior"]) != int(sampling["n_boundary"]):
        raise ConfigError(
            "the statistical bound is stated for N == M sampling; "
            f"got N={sampling['n_interior']}, M={sampling['n_boundary']}"
        )
    ana = cfg["analysis"]
    out_dir = cfg["out_dir"]
    _echo_config(cfg, out_dir)
    rows = []
    for k, seed in enumerate(cfg["seeds"]):
        tcfg = _build_train_config(cfg["train"], seed=seed)
        batch = sample_batch(
            problem.domain,
            int(sampling["n_interior"]),
            int(sampling["n_boundary"]),
            seed=int(sampling["batch_seed"]) + k,
        )
        try:
            result = train(arch, problem, batch, tcfg)
        except TrainingDiverged as exc:
            print(f"training aborted at seed {seed}: {exc}", file=sys.stderr)
            return 3
        gap = generalization_gap(
            NetworkFunction(arch, result.params),
            problem,
            batch,
            n_fresh=int(ana["gap_samples"]),
            trials=int(ana["gap_trials"]),
            seed=80_000 + seed,
        )
        stat = statistical_error_bound(
            arch,
            int(sampling["n_interior"]),
            int(sampling["n_boundary"]),
            alpha=problem.bc.alpha,
            beta=problem.bc.beta,
        )
        rows.append(
            [
                seed,
                int(sampling["n_interior"]),
                int(sampling["n_boundary"]),
                _float_repr(result.best_total),
                _float_repr(gap.mean),
                _float_repr(gap.std),
                _float_repr(stat.value if math.isfinite(stat.value) else math.inf),
            ]
        )
    out_csv = os.path.join(out_dir, "gap.csv")
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("seed", "N", "M", "train_total", "gap_mean", "gap_std", "stat_bound"))
        writer.writerows(rows)
    med = float(np.median([float(r[4]) for r in rows])) if rows else math.nan
    print(f"gap: median over {len(rows)} seeds = {med:.6g} -> {out_csv}")
    return 0


def cmd_penalty(cfg: dict) -> int:
    problem = _build_problem(cfg["problem"])
    if problem.domain.dim != 1:
        raise ConfigError("the penalty experiment is one-dimensional")
    pcfg = cfg["penalty"]
    beta_list = pcfg["beta_list"]
    if not isinstance(beta_list, list) or len(beta_list) < 2:
        raise ConfigError("penalty.beta_list must list at least two sizes")
    pairs = penalty_gap_1d(problem, [float(b) for b in beta_list], int(pcfg["n_grid"]))
    slope = fit_loglog_slope(pairs)
    out_dir = cfg["out_dir"]
    _echo_config(cfg, out_dir)
    out_csv = os.path.join(out_dir, "penalty.csv")
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("beta", "h1_gap"))
        for bta, gap in pairs:
            writer.writerow((_float_repr(bta), _float_repr(gap)))
    _write_json(
        os.path.join(out_dir, "penalty_report.json"),
        {
            "beta": [b for b, _ in pairs],
            "h1_gap": [g for _, g in pairs],
            "loglog_slope": slope,
        },
    )
    print(f"penalty: log-log slope = {slope:.4f} over beta={beta_list} -> {out_csv}")
    return 0


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ritzlab",
        description="Variational PDE training runs and generalization-bound tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "train one network on a problem and measure its H1 error",
        "bounds": "evaluate capacity constants and statistical bounds",
        "sweep": "run a plan ladder and collect per-cell measurements",
        "gap": "measure generalization gaps over seeds",
        "penalty": "reference-solver penalty-size experiment",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--seeds", type=int, default=None,
                       help="use seeds 0..K-1 (sweep and gap)")
        p.add_argument("--jobs", type=int, default=1, help="parallel cells (sweep)")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"config is not valid JSON: {exc}", file=sys.stderr)
        return 2

    try:
        cfg = _effective_config(args.command, raw)
        if args.out is not None:
            cfg["out_dir"] = args.out
        if args.seeds is not None:
            if "seeds" not in _COMMAND_SECTIONS[args.command]:
                raise ConfigError(f"--seeds does not apply to {args.command}")
            cfg["seeds"] = list(range(args.seeds))
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "bounds":
            return cmd_bounds(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, jobs=max(1, args.jobs))
        if args.command == "gap":
            return cmd_gap(cfg)
        return cmd_penalty(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

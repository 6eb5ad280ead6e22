"""Batch experiment runner.

    lidtest <command> --config <file> [--seed N] [--out PATH] [--workers N]
                      [--format json|csv]

Commands: run-test, round-povm, soundness-report, spectrum, sdp, paste.
Config is a JSON file; command-line flags override config fields.  Every
command is deterministic given config + seed, and reports embed the fully
resolved config and the library version.

Exit codes: 2 config error, 3 invalid strategy file, 4 size guard exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .gf import FieldError, field, field_for_order
from .polyspace import SizeGuardError
from .protocol import ProtocolError, TestParams
from .reporting import bound_rows, to_csv, to_json

EXIT_CONFIG = 2
EXIT_STRATEGY = 3
EXIT_GUARD = 4


class ConfigError(ValueError):
    pass


def _params_from_config(cfg) -> TestParams:
    try:
        if "p" in cfg:
            f = field(int(cfg["p"]), int(cfg.get("t", 1)),
                      tuple(cfg["modulus"]) if "modulus" in cfg else None)
        else:
            f = field_for_order(int(cfg["q"]))
        weights = cfg.get("weights")
        if weights is None:
            return TestParams(f, int(cfg["m"]), int(cfg["d"]))
        from fractions import Fraction

        return TestParams(f, int(cfg["m"]), int(cfg["d"]),
                          weights=tuple(Fraction(w) for w in weights))
    except (KeyError, ValueError, FieldError, ProtocolError) as exc:
        raise ConfigError(f"bad test parameters: {exc}") from exc


def _strategy_from_config(cfg, params, seed):
    from .instances import noisy_shared_randomness_strategy
    from .polyspace import poly_by_index
    from .stratfile import StrategyFileError, load_strategy
    from .strategies import example_adversary, honest_strategy

    entry = cfg.get("strategy")
    if entry is None:
        raise ConfigError("config needs a 'strategy' entry")
    if isinstance(entry, str):
        return load_strategy(entry)
    builtin = entry.get("builtin")
    if builtin == "honest":
        g = poly_by_index(params.field, params.m, params.d, int(entry["poly_index"]))
        return honest_strategy(params, g)
    if builtin == "adversary":
        return example_adversary(params)
    if builtin == "noisy":
        return noisy_shared_randomness_strategy(
            params,
            int(entry.get("tables", 3)),
            int(entry.get("corrupt", 1)),
            seed if seed is not None else 0,
        )
    if "path" in entry:
        return load_strategy(entry["path"])
    raise ConfigError(f"unknown strategy entry {entry!r}")


# ---- commands -------------------------------------------------------------------


def cmd_run_test(cfg, seed):
    from .strategies import (
        pass_probabilities,
        pass_probabilities_monte_carlo,
    )

    params = _params_from_config(cfg)
    strategy = _strategy_from_config(cfg, params, seed)
    good = pass_probabilities(strategy, params)
    out = {
        "goodness": {
            "axis_failure": good.eps,
            "selfcons_failure": good.delta,
            "diag_failure": good.gamma,
        },
        "exact": True,
    }
    if cfg.get("mc_samples"):
        mc = pass_probabilities_monte_carlo(
            strategy, params, int(cfg["mc_samples"]), seed if seed is not None else 0
        )
        out["monte_carlo"] = {
            sub: {"estimate": est, "sigma": sig} for sub, (est, sig) in mc.items()
        }
    from .strategies import (
        ClassicalStrategy,
        axis_failure_pessimistic,
        export_transcript,
    )

    if isinstance(strategy, ClassicalStrategy):
        out["axis_failure_pessimistic"] = axis_failure_pessimistic(strategy, params)
        if cfg.get("transcript"):
            out["transcript_rounds"] = export_transcript(
                strategy, cfg["transcript"], params
            )
    return out


def _povm_instance(args):
    seed, cfg = args
    from .instances import perturbed_measurement_pair, random_povm, random_state, rng_for
    from .measurements import consistency, cross_state_distance
    from .naimark import joint_statistics_preserved
    from .orthogonalize import orthogonalize_measurement

    rng = rng_for(seed)
    dim = int(cfg.get("dim", 4))
    n_out = int(cfg.get("outcomes", 3))
    mode = cfg.get("mode", "orthogonalize")
    if mode == "naimark":
        from .measurements import DistanceReport

        A = random_povm(rng, dim, n_out)
        B = random_povm(rng, dim, n_out)
        Psi = random_state(rng, dim, dim)
        worst, dil_a, dil_b, Psi_hat = joint_statistics_preserved(A, B, Psi)
        x = "x"
        one = [(x, 1.0)]
        reports = [
            DistanceReport("consistency",
                           consistency({x: A}, {x: B}, Psi, one),
                           {"stage": "original", "dim": dim}),
            DistanceReport("consistency",
                           consistency({x: dil_a.family}, {x: dil_b.family},
                                       Psi_hat, one),
                           {"stage": "dilated", "dim": int(Psi_hat.shape[0])}),
            DistanceReport("state_dependent",
                           cross_state_distance({x: A}, {x: B}, Psi, one),
                           {"stage": "original", "dim": dim}),
            DistanceReport("state_dependent",
                           cross_state_distance({x: dil_a.family},
                                                {x: dil_b.family}, Psi_hat, one),
                           {"stage": "dilated", "dim": int(Psi_hat.shape[0])}),
        ]
        return {
            "seed": seed,
            "mode": mode,
            "max_statistic_deviation": worst,
            "distance_reports": [r.as_dict() for r in reports],
        }
    noise = float(cfg.get("noise", 0.05))
    A, B, Psi = perturbed_measurement_pair(rng, dim, n_out, noise)
    P, report = orthogonalize_measurement(A, B, Psi)
    return {"seed": seed, "mode": mode, **report.as_dict()}


def cmd_round_povm(cfg, seed, workers=1):
    seeds = _seed_batch(cfg, seed)
    jobs = [(s, cfg) for s in seeds]
    results = _run_batch(_povm_instance, jobs, workers)
    return {"instances": results}


def cmd_soundness_report(cfg, seed):
    from .diagnostics import soundness_witness
    from .strategies import ClassicalStrategy, classical_to_quantum

    params = _params_from_config(cfg)
    strategy = _strategy_from_config(cfg, params, seed)
    if isinstance(strategy, ClassicalStrategy):
        strategy = classical_to_quantum(strategy)
    k = int(cfg.get("k", max(2, params.m * params.d + 1)))
    return soundness_witness(strategy, k=k)


def cmd_spectrum(cfg, seed):
    from .hypercube import HypercubeGraph, verify_eigensystem

    params_q = int(cfg["q"])
    m = int(cfg["m"])
    graph = HypercubeGraph(field_for_order(params_q), m)
    res = verify_eigensystem(graph)
    res["spectral_gap"] = graph.spectral_gap()
    res["expected_gap"] = 1.0 / (m * graph.size)
    return res


def _sdp_instance(args):
    seed, cfg = args
    from .improvement import build_instance
    from .instances import noisy_shared_randomness_strategy, rng_for
    from .sdp import commuting_basis, solve, solve_commuting

    params = _params_from_config(cfg)
    strat = noisy_shared_randomness_strategy(
        params, int(cfg.get("tables", 4)), int(cfg.get("corrupt", 1)), seed
    )
    inst = build_instance(strat, params)
    sol = solve(inst, gap_tol=float(cfg.get("gap_tol", 1e-7)))
    out = {"seed": seed, **sol.residual_summary()}
    if commuting_basis(inst) is not None:
        oracle = solve_commuting(inst)
        out["oracle_gap"] = abs(sol.primal_objective - oracle.primal_objective)
    return out


def cmd_sdp(cfg, seed, workers=1):
    seeds = _seed_batch(cfg, seed)
    jobs = [(s, cfg) for s in seeds]
    return {"instances": _run_batch(_sdp_instance, jobs, workers)}


def cmd_paste(cfg, seed):
    from .instances import rng_for
    from .pasting import (
        chernoff_completeness_check,
        pasted_measurement,
        scalar_ineq_check,
        tv_distance_uniform_vs_distinct,
    )
    from .measurements import scalar_trunc_inequality_check

    params = _params_from_config(cfg)
    f = params.field
    k = int(cfg.get("k", params.d + 2))
    rng = rng_for(seed if seed is not None else 0)
    from .instances import random_projective_measurement
    from .polyspace import enumerate_polyspace

    polys = tuple(enumerate_polyspace(f, params.m, params.d))
    dim = int(cfg.get("dim", 2))
    g_by_x = {}
    for x in range(f.q):
        fam = random_projective_measurement(rng, dim, min(dim, len(polys)))
        ops = np.zeros((len(polys), dim, dim), dtype=complex)
        for j in range(len(fam.outcomes)):
            ops[j] = fam.ops[j]
        from .measurements import SubMeasurement

        g_by_x[x] = SubMeasurement(polys, ops, check=False)
    result = pasted_measurement(g_by_x, f, params.m, params.d, k=k, seed=seed)
    G_avg = sum(sub.total() for sub in g_by_x.values()) / f.q
    from .instances import maximally_entangled

    Psi = maximally_entangled(dim)
    theta = float(cfg.get("theta", 0.25))
    chernoff = chernoff_completeness_check(
        G_avg, Psi, k=max(k, int(np.ceil(2 * params.d / theta))), d=params.d,
        theta=theta, regime_m=params.m,
    )
    grid = int(cfg.get("grid", 101))
    lam_grid = np.linspace(0, 1, grid)
    scalar_ok = all(
        scalar_ineq_check(float(lam), dd)
        for lam in lam_grid
        for dd in range(1, 11)
    )
    trunc_ok = all(
        scalar_trunc_inequality_check(float(x), float(delta))
        for x in lam_grid
        for delta in np.linspace(0.01, 0.5, 50)
    )
    return {
        "pasting": {
            "mode": result.mode,
            "n_tuples": result.n_tuples,
            "telescoping_residual": result.telescoping_residual,
            "completeness": float(
                np.vdot(Psi, result.family.total() @ Psi).real
            ),
        },
        "tv_distance": tv_distance_uniform_vs_distinct(f.q, k),
        "chernoff": chernoff,
        "scalar_inequalities": {"interpolation": scalar_ok, "truncation": trunc_ok},
    }


COMMANDS = {
    "run-test": cmd_run_test,
    "round-povm": cmd_round_povm,
    "soundness-report": cmd_soundness_report,
    "spectrum": cmd_spectrum,
    "sdp": cmd_sdp,
    "paste": cmd_paste,
}


def _seed_batch(cfg, seed):
    base = int(seed if seed is not None else cfg.get("seed", 0))
    n = int(cfg.get("instances", 1))
    return [base + j for j in range(n)]


def _run_batch(fn, jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, jobs))
    else:
        results = [fn(job) for job in jobs]
    return sorted(results, key=lambda r: r["seed"])


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lidtest",
        description="experiment runner for the low individual degree test lab",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", help="report path (default stdout)")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field (JSON-parsed value)")
    return parser


def _load_config(args):
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"bad --set {item!r}")
        key, _, raw = item.partition("=")
        try:
            cfg[key] = json.loads(raw)
        except json.JSONDecodeError:
            cfg[key] = raw
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        fn = COMMANDS[args.command]
        if args.command in ("round-povm", "sdp"):
            body = fn(cfg, args.seed, workers=args.workers)
        else:
            body = fn(cfg, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SizeGuardError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except Exception as exc:  # strategy-file and validation failures
        from .protocol import ProtocolError
        from .stratfile import StrategyFileError

        if isinstance(exc, (StrategyFileError, ProtocolError)):
            print(f"strategy error: {exc}", file=sys.stderr)
            return EXIT_STRATEGY
        raise
    report = {
        "command": args.command,
        "config": cfg,
        "seed": args.seed,
        "version": __version__,
        "report": body,
    }
    if args.format == "csv":
        text = to_csv(bound_rows(report))
    else:
        text = to_json(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

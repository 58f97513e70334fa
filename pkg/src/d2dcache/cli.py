"""Command line interface.

Subcommands: optimize, simulate, sweep-users, sweep-size,
compare-schedulers, validate. Data goes to files; progress and errors go to
standard error so the commands are pipeline safe. Exit codes: 0 success,
2 configuration/parameter problems, 3 numerical failures, 1 anything else.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .channel import link_prob_case1, square_distance_pdf
from .errors import ConfigError, NumericalError, ParameterError
from .harness import (ExperimentConfig, MetricConstants, build_pool,
                      design_policy, parse_config, run_cluster_size_sweep,
                      run_scheduler_compare, run_user_sweep, sample_instance,
                      write_metadata)
from .objectives import hitrate_objective, throughput_objective
from .optimizer import CachingPolicy, ClusterInstance, evaluate_metrics, optimize
from .preferences import (GeneratorParams, PreferenceMatrix,
                          generate_preferences, global_popularity)
from .simulator import simulate_fixed


def _load_config(args) -> ExperimentConfig:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _single_instance(cfg: ExperimentConfig):
    pool = build_pool(cfg)
    pop = global_popularity(pool)
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0, 0)))
    inst = sample_instance(cfg, pool, cfg.active_users, cfg.inactive_users,
                           cfg.side_m, cfg.rp, rng)
    return inst, pop


def cmd_optimize(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    inst, pop = _single_instance(cfg)
    mc = MetricConstants.from_radio(cfg.rp)
    design = cfg.designs[0]
    policy, eval_inst = design_policy(design, inst, mc, pop)
    policy.to_csv(out / "policy.csv")
    t, c, h, ee = evaluate_metrics(eval_inst, policy, mc)
    report = {
        "design": design,
        "active_users": int(inst.num_active),
        "inactive_users": int(inst.inactive_set.size),
        "cache_size": int(inst.cache_size),
        "t_net": t, "c_net": c, "h_net": h, "ee_net": ee,
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_metadata(out / "optimize.meta.json", cfg)
    print(f"wrote {out / 'policy.csv'} and {out / 'report.json'}", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    inst, _ = _single_instance(cfg)
    policy = CachingPolicy.from_csv(args.policy)
    mc = MetricConstants.from_radio(cfg.rp)
    scheduler = "priority" if args.priority else "random"
    est = simulate_fixed(inst, policy, mc, cfg.sim_realizations, seed=cfg.seed,
                         schedulers=(scheduler,), side_m=cfg.side_m)[scheduler]
    rows = [
        ("throughput", est.throughput.mean, est.throughput.se),
        ("area_throughput", est.area_throughput.mean, est.area_throughput.se),
        ("energy", est.energy.mean, est.energy.se),
        ("ee", est.ee.mean, est.ee.se),
        ("hit_rate", est.hit_rate.mean, est.hit_rate.se),
    ]
    with open(out / "estimates.csv", "w") as fh:
        fh.write("metric,mean,se\n")
        for name, mean, se in rows:
            fh.write(f"{name},{format(mean, '.12g')},{format(se, '.12g')}\n")
    write_metadata(out / "simulate.meta.json", cfg, {"scheduler": scheduler})
    print(f"wrote {out / 'estimates.csv'}", file=sys.stderr)
    return 0


def _run_table(args, runner, stem: str) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    table = runner(cfg, jobs=args.jobs)
    table.write_csv(out / f"{stem}.csv")
    write_metadata(out / f"{stem}.meta.json", cfg)
    print(f"wrote {out / (stem + '.csv')}", file=sys.stderr)
    return 0


def cmd_sweep_users(args) -> int:
    return _run_table(args, run_user_sweep, "sweep_users")


def cmd_sweep_size(args) -> int:
    return _run_table(args, run_cluster_size_sweep, "sweep_size")


def cmd_compare_schedulers(args) -> int:
    return _run_table(args, run_scheduler_compare, "compare_schedulers")


def cmd_validate(args) -> int:
    """Small invariant suite on desk-scale instances."""
    checks: list[tuple[str, bool]] = []

    prefs = generate_preferences(4, 8, GeneratorParams(seed=7))
    checks.append(("preference rows sum to 1",
                   bool(np.allclose(prefs.entries.sum(axis=1), 1.0, atol=1e-9))))

    grid = np.linspace(0.0, np.sqrt(2.0), 2001)
    mass = float(np.trapezoid(square_distance_pdf(grid), grid))
    checks.append(("square distance pdf integrates to ~1", abs(mass - 1.0) < 1e-3))

    inst = ClusterInstance(
        prefs=prefs,
        active_set=np.arange(3),
        inactive_set=np.array([3]),
        weights=np.ones(3),
        cache_size=2,
        link_probs=link_prob_case1(4),
        utility=hitrate_objective(3),
    )
    report = optimize(inst)
    trace = report.utility_trace
    checks.append(("utility trace nondecreasing",
                   bool(np.all(np.diff(trace) >= -1e-12))))
    checks.append(("converged policy is 0/1 with full caches",
                   report.policy.is_deterministic()
                   and bool(np.all(report.policy.row_sums() == inst.cache_size))))

    mc = MetricConstants.from_radio(ExperimentConfig().rp)
    thr = optimize(inst.with_utility(throughput_objective(mc)))
    t, c, h, ee = evaluate_metrics(inst, thr.policy, mc)
    checks.append(("hit rate within [0, 1]", 0.0 <= h <= 1.0))
    checks.append(("ee equals throughput over cost", abs(ee - t / c) < 1e-9))

    failed = False
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}: {name}")
        failed |= not ok
    return 1 if failed else 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2dcache")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel grid points")

    p = sub.add_parser("optimize", help="design one policy and write it to CSV")
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="Monte Carlo estimates for a stored policy")
    common(p)
    p.add_argument("--policy", required=True, help="policy CSV path")
    p.add_argument("--priority", action="store_true", help="use priority-push scheduling")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-users", help="sweep over the number of active users")
    common(p)
    p.set_defaults(func=cmd_sweep_users)

    p = sub.add_parser("sweep-size", help="sweep over the cluster size with power control")
    common(p)
    p.set_defaults(func=cmd_sweep_size)

    p = sub.add_parser("compare-schedulers", help="paired random vs priority push")
    common(p)
    p.set_defaults(func=cmd_compare_schedulers)

    p = sub.add_parser("validate", help="run the small invariant suite")
    p.set_defaults(func=cmd_validate)

    return parser


_ERROR_CATEGORIES = (
    (ConfigError, "config", 2),
    (ParameterError, "parameter", 2),
    (NumericalError, "numerical", 3),
)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - converted to categorized exit codes
        for exc_type, category, code in _ERROR_CATEGORIES:
            if isinstance(exc, exc_type):
                print(json.dumps({"error": category, "message": str(exc)}),
                      file=sys.stderr)
                return code
        print(json.dumps({"error": "internal", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Experiment harness: configuration parsing, design dispatch, sweeps.

Configs are flat ``key.path = value`` text files; values are JSON fragments
(numbers, strings, lists, booleans). Every radio and metric constant has a
default, so a minimal config only names a sweep and the designs to compare.
"""
from __future__ import annotations

import csv
import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .baselines import global_popularity_policy, selfish_policy
from .channel import (RadioParams, link_prob_case1, link_prob_case3,
                      power_control, with_tx_power)
from .errors import ConfigError, ParameterError
from .objectives import (MetricConstants, cost_objective, hitrate_objective,
                         throughput_objective, tradeoff_objective)
from .optimizer import (CachingPolicy, ClusterInstance, evaluate_metrics,
                        optimize, optimize_ee)
from .preferences import (GeneratorParams, GlobalPopularity, PreferenceMatrix,
                          generate_preferences, global_popularity, homogenize)
from .simulator import simulate_fixed

KNOWN_DESIGNS = ("throughput", "cost", "hitrate", "ee", "tradeoff", "selfish",
                 "global", "homogeneous")
FLOAT_FMT = ".12g"


@dataclass(frozen=True)
class ExperimentConfig:
    library_size: int = 1000
    cache_size: int = 10
    pool_users: int = 2000
    zipf_exponent: float = 0.8
    mixing_weight: float = 0.3
    rank_permutation_strength: float = 0.3

    side_m: float = 80.0
    lambda_active: float = 0.01
    lambda_inactive: float = 0.0
    active_users: int = 20
    inactive_users: int = 0
    reuse_factor: float = 16.0
    link_model: str = "case3"
    rp: RadioParams = field(default_factory=RadioParams)

    sweep_variable: str = "active_users"
    sweep_grid: tuple = (10, 20, 30)
    designs: tuple = ("throughput", "hitrate", "ee")

    draws: int = 3
    simulate: bool = False
    sim_realizations: int = 10000
    seed: int = 1

    def __post_init__(self):
        if not self.sweep_grid:
            raise ConfigError("sweep grid must be nonempty")
        if not self.designs:
            raise ConfigError("designs list must be nonempty")
        if self.sweep_variable not in ("active_users", "cluster_size"):
            raise ConfigError(f"unknown sweep variable {self.sweep_variable!r}")
        if self.link_model not in ("case1", "case3"):
            raise ConfigError(f"unknown link model {self.link_model!r}")
        problems = [d for d in self.designs if d.split(":")[0] not in KNOWN_DESIGNS]
        if problems:
            raise ConfigError(f"unknown designs: {problems}")

    def generator_params(self) -> GeneratorParams:
        return GeneratorParams(zipf_exponent=self.zipf_exponent,
                               mixing_weight=self.mixing_weight,
                               rank_permutation_strength=self.rank_permutation_strength,
                               seed=self.seed)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["rp"] = dataclasses.asdict(self.rp)
        return d


_CONFIG_KEYS = {
    "library_size": int, "cache_size": int, "pool_users": int,
    "preferences.zipf_exponent": float, "preferences.mixing_weight": float,
    "preferences.rank_permutation_strength": float,
    "scenario.cluster_size_m": float, "scenario.lambda_active": float,
    "scenario.lambda_inactive": float, "scenario.active_users": int,
    "scenario.inactive_users": int, "scenario.reuse_factor": float,
    "scenario.link_model": str,
    "sweep.variable": str, "sweep.grid": tuple, "designs": tuple,
    "draws": int, "simulate": bool, "sim.realizations": int, "seed": int,
}
_KEY_TO_FIELD = {
    "preferences.zipf_exponent": "zipf_exponent",
    "preferences.mixing_weight": "mixing_weight",
    "preferences.rank_permutation_strength": "rank_permutation_strength",
    "scenario.cluster_size_m": "side_m",
    "scenario.lambda_active": "lambda_active",
    "scenario.lambda_inactive": "lambda_inactive",
    "scenario.active_users": "active_users",
    "scenario.inactive_users": "inactive_users",
    "scenario.reuse_factor": "reuse_factor",
    "scenario.link_model": "link_model",
    "sweep.variable": "sweep_variable",
    "sweep.grid": "sweep_grid",
    "sim.realizations": "sim_realizations",
}
_RADIO_FIELDS = {f.name for f in dataclasses.fields(RadioParams)}


def parse_config(path) -> ExperimentConfig:
    """Read a flat key-path config file; unknown keys are listed, not ignored."""
    values: dict = {}
    radio: dict = {}
    errors: list[str] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                errors.append(f"line {lineno}: expected 'key = value'")
                continue
            key, _, text = (part.strip() for part in line.partition("="))
            try:
                value = json.loads(text)
            except json.JSONDecodeError:
                value = text
            if key.startswith("radio."):
                name = key[len("radio."):]
                if name not in _RADIO_FIELDS:
                    errors.append(f"line {lineno}: unknown radio parameter {name!r}")
                else:
                    radio[name] = float(value)
                continue
            if key not in _CONFIG_KEYS:
                errors.append(f"line {lineno}: unknown key {key!r}")
                continue
            caster = _CONFIG_KEYS[key]
            try:
                values[_KEY_TO_FIELD.get(key, key)] = caster(value)
            except (TypeError, ValueError) as exc:
                errors.append(f"line {lineno}: bad value for {key!r}: {exc}")
    if errors:
        raise ConfigError("invalid config:\n" + "\n".join(errors))
    if radio:
        values["rp"] = replace(RadioParams(), **radio)
    try:
        return ExperimentConfig(**values)
    except (ParameterError, ConfigError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[dict]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_format_cell(row.get(col, "")) for col in self.columns])


def _format_cell(value) -> str:
    if isinstance(value, float):
        return format(value, FLOAT_FMT)
    return str(value)


def write_metadata(path, cfg: ExperimentConfig, extra: Optional[dict] = None) -> None:
    payload = {"config": cfg.to_dict()}
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def build_pool(cfg: ExperimentConfig) -> PreferenceMatrix:
    return generate_preferences(cfg.pool_users, cfg.library_size,
                                cfg.generator_params())


def sample_instance(cfg: ExperimentConfig, pool: PreferenceMatrix,
                    num_active: int, num_inactive: int, side_m: float,
                    rp: RadioParams, rng: np.random.Generator) -> ClusterInstance:
    """Draw preference rows for one cluster and attach the analytic link matrix."""
    k = num_active + num_inactive
    rows = rng.integers(pool.num_users, size=k)
    prefs = PreferenceMatrix(pool.entries[rows])
    if cfg.link_model == "case1":
        link = link_prob_case1(k)
    else:
        link = _case3_matrix(k, side_m, rp)
    return ClusterInstance(
        prefs=prefs,
        active_set=np.arange(num_active, dtype=np.intp),
        inactive_set=np.arange(num_active, k, dtype=np.intp),
        weights=np.ones(num_active),
        cache_size=cfg.cache_size,
        link_probs=link,
        utility=None,
    )


_CASE3_CACHE: dict[tuple, float] = {}


def _case3_matrix(k: int, side_m: float, rp: RadioParams):
    key = (side_m, rp)
    if key not in _CASE3_CACHE:
        _CASE3_CACHE[key] = link_prob_case3(side_m, rp)
    from .channel import LinkProbabilityMatrix
    return LinkProbabilityMatrix.uniform(k, _CASE3_CACHE[key])


def design_policy(name: str, inst: ClusterInstance, mc: MetricConstants,
                  pop: GlobalPopularity) -> tuple[CachingPolicy, ClusterInstance]:
    """Run one named design; returns the policy and the instance to evaluate
    it on (differs from the input only for the fully homogeneous model)."""
    kind, _, arg = name.partition(":")
    k_a = inst.num_active
    if kind == "throughput":
        return optimize(inst.with_utility(throughput_objective(mc))).policy, inst
    if kind == "cost":
        return optimize(inst.with_utility(cost_objective(mc))).policy, inst
    if kind == "hitrate":
        return optimize(inst.with_utility(hitrate_objective(k_a))).policy, inst
    if kind == "tradeoff":
        zeta = float(arg) if arg else mc.zeta
        triple = tradeoff_objective(replace(mc, zeta=zeta), k_a)
        return optimize(inst.with_utility(triple)).policy, inst
    if kind == "ee":
        report, _ = optimize_ee(inst, mc)
        return report.policy, inst
    if kind == "selfish":
        return selfish_policy(inst), inst
    thr = inst.with_utility(throughput_objective(mc))
    if kind == "global":
        return global_popularity_policy(thr, pop).policy, inst
    if kind == "homogeneous":
        homog = thr.with_prefs(homogenize(pop, inst.num_users))
        return global_popularity_policy(thr, pop).policy, homog
    raise ConfigError(f"unknown design {name!r}")


_ANALYTIC = ("t_net", "c_net", "h_net", "ee_net")
_SIM = ("sim_throughput", "sim_energy", "sim_ee", "sim_hit_rate")


def _mean_se(samples: list[float]) -> tuple[float, float]:
    arr = np.asarray(samples, dtype=np.float64)
    finite = arr[np.isfinite(arr)]
    if finite.size == 0:
        return float("nan"), float("nan")
    mean = float(finite.mean())
    se = float(finite.std(ddof=1) / np.sqrt(finite.size)) if finite.size > 1 else 0.0
    return mean, se


def _point_rows(cfg: ExperimentConfig, point_index: int, value,
                schedulers: tuple = ()) -> list[dict]:
    """All design rows for one sweep point; independent unit of parallel work."""
    pool = build_pool(cfg)
    pop = global_popularity(pool)
    if cfg.sweep_variable == "active_users":
        side = cfg.side_m
        rp = cfg.rp
        counts = ("fixed", int(value), cfg.inactive_users)
    else:
        side = float(value)
        rp = with_tx_power(cfg.rp, power_control(side, cfg.rp, cfg.reuse_factor))
        counts = ("poisson",)
    mc = MetricConstants.from_radio(rp)
    area = side ** 2

    per_design: dict[str, dict[str, list[float]]] = {
        d: {k: [] for k in _ANALYTIC + _SIM
            + tuple(f"{s}_{m}" for s in schedulers for m in ("throughput", "ee", "hit_rate"))}
        for d in cfg.designs
    }
    for draw in range(cfg.draws):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, point_index, draw)))
        if counts[0] == "fixed":
            k_a, k_i = counts[1], counts[2]
        else:
            k_a = int(rng.poisson(cfg.lambda_active * area))
            k_i = int(rng.poisson(cfg.lambda_inactive * area))
        if k_a == 0:
            for d in cfg.designs:
                for key in per_design[d]:
                    per_design[d][key].append(0.0)
            continue
        inst = sample_instance(cfg, pool, k_a, k_i, side, rp, rng)
        for d in cfg.designs:
            policy, eval_inst = design_policy(d, inst, mc, pop)
            t, c, h, ee = evaluate_metrics(eval_inst, policy, mc)
            bucket = per_design[d]
            for key, val in zip(_ANALYTIC, (t, c, h, ee)):
                bucket[key].append(val)
            if cfg.simulate and not schedulers:
                est = simulate_fixed(eval_inst, policy, mc, cfg.sim_realizations,
                                     seed=int(rng.integers(2 ** 62)),
                                     schedulers=("random",), side_m=side)["random"]
                bucket["sim_throughput"].append(est.throughput.mean)
                bucket["sim_energy"].append(est.energy.mean)
                bucket["sim_ee"].append(est.ee.mean)
                bucket["sim_hit_rate"].append(est.hit_rate.mean)
            if schedulers:
                # one seed, both schedulers: the comparison is paired draw by draw
                paired = simulate_fixed(eval_inst, policy, mc, cfg.sim_realizations,
                                        seed=int(rng.integers(2 ** 62)),
                                        schedulers=schedulers, side_m=side)
                for s in schedulers:
                    bucket[f"{s}_throughput"].append(paired[s].throughput.mean)
                    bucket[f"{s}_ee"].append(paired[s].ee.mean)
                    bucket[f"{s}_hit_rate"].append(paired[s].hit_rate.mean)

    rows = []
    for d in cfg.designs:
        row: dict = {"design": d, cfg.sweep_variable: value}
        bucket = per_design[d]
        for key in _ANALYTIC:
            mean, se = _mean_se(bucket[key])
            row[f"{key}_mean"], row[f"{key}_se"] = mean, se
        if cfg.sweep_variable == "cluster_size":
            row["area_throughput_mean"] = row["t_net_mean"] / area
            row["area_throughput_se"] = row["t_net_se"] / area
        if cfg.simulate and not schedulers:
            for key in _SIM:
                mean, se = _mean_se(bucket[key])
                row[f"{key}_mean"], row[f"{key}_se"] = mean, se
        for s in schedulers:
            for m in ("throughput", "ee", "hit_rate"):
                mean, se = _mean_se(bucket[f"{s}_{m}"])
                row[f"{s}_{m}_mean"], row[f"{s}_{m}_se"] = mean, se
        rows.append(row)
    return rows


def _columns(cfg: ExperimentConfig, schedulers: tuple = ()) -> list[str]:
    cols = ["design", cfg.sweep_variable]
    for key in _ANALYTIC:
        cols += [f"{key}_mean", f"{key}_se"]
    if cfg.sweep_variable == "cluster_size":
        cols += ["area_throughput_mean", "area_throughput_se"]
    if cfg.simulate and not schedulers:
        for key in _SIM:
            cols += [f"{key}_mean", f"{key}_se"]
    for s in schedulers:
        for m in ("throughput", "ee", "hit_rate"):
            cols += [f"{s}_{m}_mean", f"{s}_{m}_se"]
    return cols


def _run_sweep(cfg: ExperimentConfig, jobs: int, schedulers: tuple = ()) -> ResultTable:
    points = list(enumerate(cfg.sweep_grid))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_point_rows, [cfg] * len(points),
                                   [i for i, _ in points], [v for _, v in points],
                                   [schedulers] * len(points)))
    else:
        chunks = [_point_rows(cfg, i, v, schedulers) for i, v in points]
    rows = [row for chunk in chunks for row in chunk]
    return ResultTable(columns=_columns(cfg, schedulers), rows=rows)


def run_user_sweep(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    if cfg.sweep_variable != "active_users":
        raise ConfigError("user sweep requires sweep.variable = active_users")
    return _run_sweep(cfg, jobs)


def run_cluster_size_sweep(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    if cfg.sweep_variable != "cluster_size":
        raise ConfigError("size sweep requires sweep.variable = cluster_size")
    return _run_sweep(cfg, jobs)


def run_scheduler_compare(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    """Same policies evaluated under both schedulers on identical draws."""
    return _run_sweep(cfg, jobs, schedulers=("random", "priority"))

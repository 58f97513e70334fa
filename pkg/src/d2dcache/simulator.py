"""Monte Carlo cluster simulation under random-push and priority-push
scheduling.

Two entry styles are provided. ``simulate_random_push`` / ``simulate_priority_push``
redraw everything per realization (user counts, positions, shadowing,
small-scale fading, requests) and ask a policy source for a fresh policy for
each realized user set. ``simulate_fixed`` keeps one cluster instance fixed
and redraws only requests, link outcomes (Bernoulli with the instance's link
probabilities), and the scheduling choice; it is the fast path used to
validate the closed forms.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .channel import (LinkProbabilityMatrix, RadioParams, UserLayout,
                      dbm_to_watts, link_prob_case2, pathgain)
from .errors import ParameterError
from .objectives import MetricConstants
from .optimizer import CachingPolicy, ClusterInstance
from .preferences import PreferenceMatrix

SCHEDULERS = ("random", "priority")


@dataclass(frozen=True)
class ScenarioParams:
    side_m: float
    lambda_active: float = 0.0
    lambda_inactive: float = 0.0
    fixed_counts: Optional[tuple[int, int]] = None
    rp: RadioParams = field(default_factory=RadioParams)
    reuse_factor: float = 16.0
    scheduler: str = "random"
    realizations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.side_m <= 0:
            raise ParameterError("cluster side must be > 0")
        if self.lambda_active < 0 or self.lambda_inactive < 0:
            raise ParameterError("user densities must be >= 0")
        if self.realizations < 1:
            raise ParameterError("need at least one realization")
        if self.scheduler not in SCHEDULERS:
            raise ParameterError(f"scheduler must be one of {SCHEDULERS}")
        if self.reuse_factor < 1:
            raise ParameterError("reuse_factor must be >= 1")


@dataclass(frozen=True)
class Estimate:
    mean: float
    se: float


@dataclass(frozen=True)
class SimulationEstimate:
    throughput: Estimate
    area_throughput: Estimate
    energy: Estimate
    ee: Estimate
    hit_rate: Estimate
    realizations: int


@dataclass(frozen=True)
class ClusterRealization:
    """One drawn cluster: geometry, membership, preferences, shadowing."""

    layout: UserLayout
    active_set: np.ndarray
    inactive_set: np.ndarray
    prefs: PreferenceMatrix
    shadow_gains: np.ndarray

    @property
    def num_users(self) -> int:
        return self.layout.num_users

    @property
    def num_active(self) -> int:
        return self.active_set.size

    def link_probs(self, rp: RadioParams) -> LinkProbabilityMatrix:
        """Analysis-path link matrix from the drawn geometry and shadowing."""
        return link_prob_case2(self.layout, self.shadow_gains, rp)


PolicySource = Callable[[ClusterRealization], CachingPolicy]


def _realization_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


def _draw_cluster(sp: ScenarioParams, pool: PreferenceMatrix,
                  rng: np.random.Generator) -> ClusterRealization:
    if sp.fixed_counts is not None:
        k_a, k_i = sp.fixed_counts
    else:
        area = sp.side_m ** 2
        k_a = int(rng.poisson(sp.lambda_active * area))
        k_i = int(rng.poisson(sp.lambda_inactive * area))
    k = k_a + k_i
    positions = rng.uniform(0.0, sp.side_m, size=(k, 2))
    rows = rng.integers(pool.num_users, size=k)
    prefs_entries = pool.entries[rows] if k else np.zeros((0, pool.library_size))

    shadow = np.ones((k, k))
    if k > 1:
        iu, ju = np.triu_indices(k, 1)
        gains_db = rng.normal(sp.rp.shadow_mu_db, sp.rp.shadow_sigma_db, size=iu.size)
        shadow[iu, ju] = shadow[ju, iu] = 10.0 ** (gains_db / 10.0)

    return ClusterRealization(
        layout=UserLayout(positions, sp.side_m),
        active_set=np.arange(k_a, dtype=np.intp),
        inactive_set=np.arange(k_a, k, dtype=np.intp),
        prefs=PreferenceMatrix(prefs_entries),
        shadow_gains=shadow,
    )


def realize_cluster(sp: ScenarioParams, pool: PreferenceMatrix,
                    seed: int) -> ClusterRealization:
    """Draw one cluster; bit-identical for a fixed seed."""
    return _draw_cluster(sp, pool, np.random.default_rng(seed))


def _sample_requests(pref_rows: np.ndarray, rng: np.random.Generator,
                     size: Optional[int] = None) -> np.ndarray:
    """One file index per preference row (or per row and realization)."""
    cum = np.cumsum(pref_rows, axis=1)
    cum[:, -1] = 1.0
    n = pref_rows.shape[0]
    if size is None:
        u = rng.random(n)
        return np.array([np.searchsorted(cum[i], u[i], side="right") for i in range(n)])
    u = rng.random((n, size))
    return np.vstack([np.searchsorted(cum[i], u[i], side="right") for i in range(n)])


def _serve_random_push(self_hit: np.ndarray, d2d_ok: np.ndarray,
                       selected: int) -> str:
    if self_hit[selected]:
        return "self"
    if d2d_ok[selected]:
        return "d2d"
    return "bs"


def _serve_priority_push(self_hit: np.ndarray, d2d_ok: np.ndarray) -> str:
    unsatisfied = ~self_hit
    if not unsatisfied.any():
        return "none"
    if (unsatisfied & d2d_ok).any():
        return "d2d"
    return "bs"


_MODE_INDEX = {"self": 0, "d2d": 1, "bs": 2, "none": 3}


def _mode_values(mc: MetricConstants) -> tuple[np.ndarray, np.ndarray]:
    tput = np.array([mc.t_s, mc.t_d, mc.t_b, 0.0])
    cost = np.array([mc.c_s, mc.c_d, mc.c_b, 0.0])
    return tput, cost


class _Accumulator:
    """Streaming mean / SE for throughput, energy, hit rate, and their EE ratio."""

    def __init__(self):
        self.n = 0
        self.sum_t = self.sum_t2 = 0.0
        self.sum_e = self.sum_e2 = 0.0
        self.sum_h = self.sum_h2 = 0.0
        self.sum_te = 0.0

    def add(self, tput, energy, hit):
        tput = np.atleast_1d(np.asarray(tput, dtype=np.float64))
        energy = np.atleast_1d(np.asarray(energy, dtype=np.float64))
        hit = np.atleast_1d(np.asarray(hit, dtype=np.float64))
        self.n += tput.size
        self.sum_t += float(tput.sum())
        self.sum_t2 += float((tput ** 2).sum())
        self.sum_e += float(energy.sum())
        self.sum_e2 += float((energy ** 2).sum())
        self.sum_h += float(hit.sum())
        self.sum_h2 += float((hit ** 2).sum())
        self.sum_te += float((tput * energy).sum())

    def _estimate(self, total, total2) -> Estimate:
        n = self.n
        mean = total / n
        var = max(0.0, total2 / n - mean ** 2)
        return Estimate(mean, math.sqrt(var / n))

    def result(self, area: float) -> SimulationEstimate:
        n = self.n
        t = self._estimate(self.sum_t, self.sum_t2)
        e = self._estimate(self.sum_e, self.sum_e2)
        h = self._estimate(self.sum_h, self.sum_h2)
        if e.mean != 0.0:
            ee_mean = t.mean / e.mean
            cov = self.sum_te / n - (self.sum_t / n) * (self.sum_e / n)
            var_ee = ((t.se ** 2) / e.mean ** 2
                      + (t.mean ** 2) * (e.se ** 2) / e.mean ** 4
                      - 2.0 * t.mean * (cov / n) / e.mean ** 3)
            ee = Estimate(ee_mean, math.sqrt(max(0.0, var_ee)))
        else:
            ee = Estimate(math.inf, 0.0)
        area_t = Estimate(t.mean / area, t.se / area)
        return SimulationEstimate(throughput=t, area_throughput=area_t, energy=e,
                                  ee=ee, hit_rate=h, realizations=n)


def _simulate_scenario(policy_source: PolicySource, sp: ScenarioParams,
                       mc: MetricConstants, pool: PreferenceMatrix,
                       schedulers: Sequence[str],
                       record_path=None) -> dict[str, SimulationEstimate]:
    e_d = dbm_to_watts(sp.rp.d2d_tx_power_dbm)
    noise = sp.rp.d2d_noise_power_watts
    snr_gap = sp.rp.snr_gap
    acc = {s: _Accumulator() for s in schedulers}
    tput_of, cost_of = _mode_values(mc)
    records = []

    for r in range(sp.realizations):
        rng = _realization_rng(sp.seed, r)
        real = _draw_cluster(sp, pool, rng)
        k, k_a = real.num_users, real.num_active
        if k_a == 0:
            for s in schedulers:
                acc[s].add(0.0, 0.0, 0.0)
            if record_path is not None:
                records.append((r, 0, real.inactive_set.size, "none", 0.0, 0.0))
            continue

        policy = policy_source(real)
        b = np.asarray(policy.entries if isinstance(policy, CachingPolicy) else policy)

        d = real.layout.pairwise_distances()
        fading = np.ones((k, k))
        if k > 1:
            iu, ju = np.triu_indices(k, 1)
            draw = rng.exponential(1.0, size=iu.size)
            fading[iu, ju] = fading[ju, iu] = draw
        snr = e_d * fading * real.shadow_gains * pathgain(d, sp.rp) / noise
        feasible = snr > snr_gap
        np.fill_diagonal(feasible, True)

        requests = _sample_requests(real.prefs.entries[real.active_set], rng)
        self_hit = b[real.active_set, requests] > 0.5
        d2d_ok = np.zeros(k_a, dtype=bool)
        for i, user in enumerate(real.active_set):
            holders = (b[:, requests[i]] > 0.5) & feasible[user]
            holders[user] = False
            d2d_ok[i] = holders.any()
        selected = int(rng.integers(k_a))
        hit = float((self_hit | d2d_ok).mean())

        for s in schedulers:
            if s == "random":
                mode = _serve_random_push(self_hit, d2d_ok, selected)
                extra_self = int(self_hit.sum()) - int(self_hit[selected])
            else:
                mode = _serve_priority_push(self_hit, d2d_ok)
                extra_self = int(self_hit.sum())
            mi = _MODE_INDEX[mode]
            tput = tput_of[mi] + mc.t_s * extra_self
            energy = cost_of[mi] + mc.c_s * extra_self
            acc[s].add(tput, energy, hit)
            if record_path is not None and s == schedulers[0]:
                records.append((r, k_a, real.inactive_set.size, mode, tput, energy))

    if record_path is not None:
        with open(record_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["realization", "active_users", "inactive_users",
                             "serve_mode", "throughput", "energy"])
            writer.writerows(records)

    area = sp.side_m ** 2
    return {s: acc[s].result(area) for s in schedulers}


def simulate_random_push(policy_source: PolicySource, sp: ScenarioParams,
                         mc: MetricConstants, pool: PreferenceMatrix,
                         record_path=None) -> SimulationEstimate:
    return _simulate_scenario(policy_source, sp, mc, pool, ("random",),
                              record_path)["random"]


def simulate_priority_push(policy_source: PolicySource, sp: ScenarioParams,
                           mc: MetricConstants, pool: PreferenceMatrix,
                           record_path=None) -> SimulationEstimate:
    return _simulate_scenario(policy_source, sp, mc, pool, ("priority",),
                              record_path)["priority"]


def simulate_both_schedulers(policy_source: PolicySource, sp: ScenarioParams,
                             mc: MetricConstants,
                             pool: PreferenceMatrix) -> dict[str, SimulationEstimate]:
    """Paired estimates: both schedulers consume identical random draws."""
    return _simulate_scenario(policy_source, sp, mc, pool, SCHEDULERS)


def simulate_fixed(inst: ClusterInstance, policy: CachingPolicy,
                   mc: MetricConstants, realizations: int, seed: int,
                   schedulers: Sequence[str] = ("random",),
                   side_m: float = 1.0,
                   chunk: int = 20000) -> dict[str, SimulationEstimate]:
    """Fading-and-request Monte Carlo on a fixed instance.

    Link outcomes are Bernoulli draws with the instance's success
    probabilities (symmetric across each pair), which is exactly the
    expectation step behind the closed-form utility.
    """
    if realizations < 1:
        raise ParameterError("need at least one realization")
    b = policy.entries
    k, m = inst.num_users, inst.library_size
    if b.shape != (k, m):
        raise ParameterError("policy shape does not match the instance")
    active = inst.active_set
    k_a = active.size
    b_bool = b > 0.5
    cum = np.cumsum(inst.prefs.entries[active], axis=1)
    cum[:, -1] = 1.0
    link = inst.link_probs.entries
    iu, ju = np.triu_indices(k, 1)
    rng = np.random.default_rng(seed)
    acc = {s: _Accumulator() for s in schedulers}

    done = 0
    while done < realizations:
        n = min(chunk, realizations - done)
        done += n

        u = rng.random((k_a, n))
        requests = np.vstack([np.searchsorted(cum[i], u[i], side="right")
                              for i in range(k_a)])

        feasible = np.zeros((k, k, n), dtype=bool)
        if iu.size:
            draws = rng.random((iu.size, n)) < link[iu, ju][:, None]
            feasible[iu, ju] = draws
            feasible[ju, iu] = draws
        feasible[np.arange(k), np.arange(k)] = True

        self_hit = b_bool[active[:, None], requests]  # K_A x n
        holder = b_bool[:, requests]  # K x K_A x n
        pair_ok = holder & feasible[active].transpose(1, 0, 2)
        pair_ok[active, np.arange(k_a)] = False  # self-serving handled separately
        d2d_ok = pair_ok.any(axis=0)

        selected = rng.integers(k_a, size=n)
        cols = np.arange(n)
        sel_hit = self_hit[selected, cols]
        sel_d2d = d2d_ok[selected, cols]
        n_self = self_hit.sum(axis=0)
        hit = (self_hit | d2d_ok).mean(axis=0)

        for s in schedulers:
            if s == "random":
                tput = (np.where(sel_hit, mc.t_s, np.where(sel_d2d, mc.t_d, mc.t_b))
                        + mc.t_s * (n_self - sel_hit))
                energy = (np.where(sel_hit, mc.c_s, np.where(sel_d2d, mc.c_d, mc.c_b))
                          + mc.c_s * (n_self - sel_hit))
            else:
                unsat = ~self_hit
                has_d2d = (unsat & d2d_ok).any(axis=0)
                has_unsat = unsat.any(axis=0)
                served_t = np.where(has_d2d, mc.t_d, np.where(has_unsat, mc.t_b, 0.0))
                served_c = np.where(has_d2d, mc.c_d, np.where(has_unsat, mc.c_b, 0.0))
                tput = mc.t_s * n_self + served_t
                energy = mc.c_s * n_self + served_c
            acc[s].add(tput, energy, hit)

    return {s: acc[s].result(side_m ** 2) for s in schedulers}

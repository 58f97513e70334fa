"""Closed-form network utility, its gradient, and the coordinate-ascent
caching policy design with a Dinkelbach outer loop for energy efficiency.

The network utility for caching probabilities b (K x M) is

    U_net = sum_k w_k u_d / K_A
          + (u_b - u_d) * sum_m S_m
          + (K_A u_s - u_d) * sum_m sum_k w_k a_km b_km / K_A,

with miss mass S_m = sum_{k active} (w_k a_km / K_A) prod_l (1 - b_lm L_kl).
Each user's best response keeps the S files with the largest marginal payoff;
cycling over users is monotone and reaches a best-response fixed point.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .channel import LinkProbabilityMatrix
from .errors import NumericalError, ParameterError, SurrogateRangeError
from .objectives import (MetricConstants, UtilityTriple, check_instance_ordering,
                         ee_weighted_objective, throughput_objective)
from .preferences import PreferenceMatrix

POLICY_BUDGET_TOL = 1e-9
CONVERGENCE_THRESHOLD = 1e-4  # squared policy change over one full round


@dataclass(frozen=True)
class CachingPolicy:
    """K x M matrix of caching probabilities (0/1 after optimization)."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.ndim != 2:
            raise ParameterError("policy entries must be a 2-D array")
        if np.any(e < 0) or np.any(e > 1):
            raise ParameterError("policy entries must lie in [0, 1]")
        object.__setattr__(self, "entries", e)

    @property
    def num_users(self) -> int:
        return self.entries.shape[0]

    @property
    def library_size(self) -> int:
        return self.entries.shape[1]

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def is_deterministic(self) -> bool:
        return bool(np.all((self.entries == 0.0) | (self.entries == 1.0)))

    @classmethod
    def zeros(cls, num_users: int, library_size: int) -> "CachingPolicy":
        return cls(np.zeros((num_users, library_size)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"file_{m}" for m in range(self.library_size)])
            for row in self.entries:
                writer.writerow([format(v, ".17g") for v in row])

    @classmethod
    def from_csv(cls, path) -> "CachingPolicy":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            rows = [[float(v) for v in row] for row in reader]
        return cls(np.asarray(rows, dtype=np.float64))


@dataclass(frozen=True)
class ClusterInstance:
    """One cluster: who is present, what they want, how well they hear each
    other, and which utility the design should maximize."""

    prefs: PreferenceMatrix
    active_set: np.ndarray
    inactive_set: np.ndarray
    weights: np.ndarray
    cache_size: int
    link_probs: LinkProbabilityMatrix
    utility: Optional[UtilityTriple] = None

    def __post_init__(self):
        active = np.asarray(self.active_set, dtype=np.intp)
        inactive = np.asarray(self.inactive_set, dtype=np.intp)
        w = np.asarray(self.weights, dtype=np.float64)
        k = self.prefs.num_users
        all_users = np.concatenate([active, inactive])
        if len(set(all_users.tolist())) != k or len(all_users) != k:
            raise ParameterError("active and inactive sets must partition the users")
        if active.size < 1:
            raise ParameterError("need at least one active user")
        if w.shape != (active.size,) or np.any(w <= 0):
            raise ParameterError("weights must be positive, one per active user")
        if not 1 <= self.cache_size < self.prefs.library_size:
            raise ParameterError("cache size must satisfy 1 <= S < M")
        if self.link_probs.num_users != k:
            raise ParameterError("link probability matrix must be K x K")
        if self.utility is not None:
            check_instance_ordering(self.utility, active.size)
        object.__setattr__(self, "active_set", active)
        object.__setattr__(self, "inactive_set", inactive)
        object.__setattr__(self, "weights", w)

    @property
    def num_users(self) -> int:
        return self.prefs.num_users

    @property
    def num_active(self) -> int:
        return self.active_set.size

    @property
    def library_size(self) -> int:
        return self.prefs.library_size

    def with_utility(self, triple: UtilityTriple) -> "ClusterInstance":
        return replace(self, utility=triple)

    def with_prefs(self, prefs: PreferenceMatrix) -> "ClusterInstance":
        return replace(self, prefs=prefs)


@dataclass
class OptimizerReport:
    policy: CachingPolicy
    utility_trace: np.ndarray
    iterations: int
    rounds: int
    converged: bool
    stationarity_residual: float

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "rounds": self.rounds,
            "converged": self.converged,
            "stationarity_residual": self.stationarity_residual,
            "utility_trace": [float(v) for v in self.utility_trace],
        }


def _coverage_products(inst: ClusterInstance, b: np.ndarray) -> np.ndarray:
    """prod_l (1 - b_lm L_kl) for every active k and file m (K_A x M)."""
    l_rows = inst.link_probs.entries[inst.active_set]  # K_A x K
    return np.prod(1.0 - l_rows[:, :, None] * b[None, :, :], axis=1)


def _net_value(inst: ClusterInstance, b: np.ndarray, u_b: float, u_d: float,
               u_s: float) -> float:
    k_a = inst.num_active
    wa = (inst.weights / k_a)[:, None] * inst.prefs.entries[inst.active_set]
    prod = _coverage_products(inst, b)
    miss = float((wa * prod).sum())
    self_mass = float((wa * b[inst.active_set]).sum())
    return (float(inst.weights.sum()) * u_d / k_a
            + (u_b - u_d) * miss
            + (k_a * u_s - u_d) * self_mass)


def _require_utility(inst: ClusterInstance) -> UtilityTriple:
    if inst.utility is None:
        raise ParameterError("instance has no utility triple attached")
    return inst.utility


def expected_utility(inst: ClusterInstance, policy: CachingPolicy) -> float:
    """Closed-form expected network utility of a (possibly probabilistic) policy."""
    u = _require_utility(inst)
    b = policy.entries
    if b.shape != (inst.num_users, inst.library_size):
        raise ParameterError("policy shape does not match the instance")
    return _net_value(inst, b, u.u_b, u.u_d, u.u_s)


def access_probabilities(inst: ClusterInstance, policy: CachingPolicy, k: int,
                         link_indicators: np.ndarray) -> tuple[float, float, float]:
    """(P_B, P_S, P_D) for active user k under instantaneous link indicators."""
    if k not in inst.active_set:
        raise ParameterError(f"user {k} is not active")
    ind = np.asarray(link_indicators, dtype=np.float64)
    if ind.shape != (inst.num_users,):
        raise ParameterError("link_indicators must have one entry per user")
    if ind[k] != 1:
        raise ParameterError("the self link indicator must equal 1")
    b = policy.entries
    a = inst.prefs.entries[k]
    only_bs = np.prod(1.0 - b * ind[:, None], axis=0)
    # clamp the float spill of near-unit preference mass so that
    # p_b + p_s + p_d == 1 holds exactly and each term stays in [0, 1]
    p_b = min(float((a * only_bs).sum()), 1.0)
    p_s = min(float((a * b[k]).sum()), 1.0 - p_b)
    p_d = 1.0 - (p_b + p_s)
    return p_b, p_s, p_d


def _payoff_row(inst: ClusterInstance, b: np.ndarray, user: int,
                u_b: float, u_d: float, u_s: float) -> np.ndarray:
    """Marginal payoff of caching each file for ``user``, all others fixed."""
    k_a = inst.num_active
    b_ex = b.copy()
    b_ex[user] = 0.0  # the product below must exclude l = user
    prod = _coverage_products(inst, b_ex)
    wa = (inst.weights / k_a)[:, None] * inst.prefs.entries[inst.active_set]
    l_col = inst.link_probs.entries[inst.active_set, user][:, None]
    payoff = (u_d - u_b) * (wa * l_col * prod).sum(axis=0)
    active_pos = np.flatnonzero(inst.active_set == user)
    if active_pos.size:
        w_user = inst.weights[active_pos[0]]
        payoff = payoff + (k_a * u_s - u_d) * w_user * inst.prefs.entries[user] / k_a
    return payoff


def utility_gradient(inst: ClusterInstance, policy: CachingPolicy) -> np.ndarray:
    """Partial derivatives of the network utility in every caching probability.

    Nonnegative whenever u_b <= u_d and K_A u_s >= u_d, which is why the
    optimum fills every cache to capacity.
    """
    u = _require_utility(inst)
    b = policy.entries
    grad = np.empty_like(b)
    for j in range(inst.num_users):
        grad[j] = _payoff_row(inst, b, j, u.u_b, u.u_d, u.u_s)
    return grad


def _top_s_row(payoff: np.ndarray, s: int) -> np.ndarray:
    """0/1 row caching the S largest payoffs; ties go to the lowest file index."""
    order = np.argsort(-payoff, kind="stable")
    row = np.zeros_like(payoff)
    row[order[:s]] = 1.0
    return row


def best_response(inst: ClusterInstance, policy: CachingPolicy, user: int) -> np.ndarray:
    """Optimal 0/1 cache row for one user with all other rows fixed."""
    u = _require_utility(inst)
    payoff = _payoff_row(inst, policy.entries, user, u.u_b, u.u_d, u.u_s)
    return _top_s_row(payoff, inst.cache_size)


def default_order(inst: ClusterInstance) -> np.ndarray:
    """Round-robin update order: active users first, then inactive."""
    return np.concatenate([inst.active_set, inst.inactive_set])


def _stationarity_residual(inst: ClusterInstance, b: np.ndarray,
                           u: UtilityTriple) -> float:
    worst = 0.0
    for j in range(inst.num_users):
        payoff = _payoff_row(inst, b, j, u.u_b, u.u_d, u.u_s)
        cached = b[j] > 0.5
        if not cached.any() or cached.all():
            continue
        worst = max(worst, float(payoff[~cached].max() - payoff[cached].min()))
    return max(0.0, worst)


def optimize(inst: ClusterInstance, init: Optional[CachingPolicy] = None,
             order: Optional[Sequence[int]] = None,
             max_rounds: Optional[int] = None) -> OptimizerReport:
    """Cycle best responses over users until a full round changes the policy
    by less than the convergence threshold (squared Frobenius norm)."""
    u = _require_utility(inst)
    if init is None:
        init = CachingPolicy.zeros(inst.num_users, inst.library_size)
    b = init.entries.copy()
    if b.shape != (inst.num_users, inst.library_size):
        raise ParameterError("initial policy shape does not match the instance")
    if np.any(b.sum(axis=1) > inst.cache_size + POLICY_BUDGET_TOL):
        raise ParameterError("initial policy exceeds the cache budget")
    users = np.asarray(order if order is not None else default_order(inst), dtype=np.intp)
    if sorted(users.tolist()) != list(range(inst.num_users)):
        raise ParameterError("update order must be a permutation of all users")
    if max_rounds is None:
        max_rounds = 10 * inst.num_users

    trace = [_net_value(inst, b, u.u_b, u.u_d, u.u_s)]
    iterations = 0
    rounds = 0
    converged = False
    for _ in range(max_rounds):
        previous = b.copy()
        for user in users:
            payoff = _payoff_row(inst, b, user, u.u_b, u.u_d, u.u_s)
            b[user] = _top_s_row(payoff, inst.cache_size)
            trace.append(_net_value(inst, b, u.u_b, u.u_d, u.u_s))
            iterations += 1
        rounds += 1
        if float(((b - previous) ** 2).sum()) <= CONVERGENCE_THRESHOLD:
            converged = True
            break

    return OptimizerReport(
        policy=CachingPolicy(b),
        utility_trace=np.asarray(trace),
        iterations=iterations,
        rounds=rounds,
        converged=converged,
        stationarity_residual=_stationarity_residual(inst, b, u),
    )


def evaluate_metrics(inst: ClusterInstance, policy: CachingPolicy,
                     mc: MetricConstants) -> tuple[float, float, float, float]:
    """(T_net, C_net, H_net, EE_net) of one policy under the metric constants."""
    b = policy.entries
    if b.shape != (inst.num_users, inst.library_size):
        raise ParameterError("policy shape does not match the instance")
    k_a = inst.num_active
    t_net = _net_value(inst, b, mc.t_b, mc.t_d, mc.t_s)
    c_net = _net_value(inst, b, mc.c_b, mc.c_d, mc.c_s)
    h_net = _net_value(inst, b, 0.0, 1.0, 1.0 / k_a)
    ee_net = t_net / c_net if c_net != 0.0 else math.inf
    return t_net, c_net, h_net, ee_net


def optimize_ee(inst: ClusterInstance, mc: MetricConstants, tol: float = 1e-6,
                order: Optional[Sequence[int]] = None,
                max_rounds: Optional[int] = None,
                max_outer: int = 50) -> tuple[OptimizerReport, float]:
    """Dinkelbach iteration for EE: solve T - t * C designs, updating t to the
    achieved ratio until |T - t C| <= tol * C."""
    if mc.c_b <= 0:
        raise ParameterError("positive BS cost required for a finite EE optimum")
    base = inst.with_utility(throughput_objective(mc))
    report = optimize(base, order=order, max_rounds=max_rounds)
    t_net, c_net, _, _ = evaluate_metrics(base, report.policy, mc)
    if c_net <= 0:
        raise NumericalError("throughput-optimal policy has nonpositive cost; EE unbounded")
    t = t_net / c_net
    for _ in range(max_outer):
        try:
            surrogate = inst.with_utility(ee_weighted_objective(mc, t))
        except SurrogateRangeError:
            raise
        except ParameterError as exc:
            raise SurrogateRangeError(t, f"surrogate unusable at t={t!r}: {exc}") from exc
        report = optimize(surrogate, init=report.policy, order=order,
                          max_rounds=max_rounds)
        t_net, c_net, _, _ = evaluate_metrics(surrogate, report.policy, mc)
        if c_net <= 0:
            raise NumericalError("policy with nonpositive cost encountered; EE unbounded")
        if abs(t_net - t * c_net) <= tol * c_net:
            return report, t_net / c_net
        t = t_net / c_net
    raise NumericalError(f"Dinkelbach loop did not reach tolerance {tol:.1e} "
                         f"within {max_outer} outer iterations")

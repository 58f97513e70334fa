"""Per-serve utility triples for the practical caching objectives.

A triple (u_b, u_d, u_s) assigns the payoff of serving one request via the
BS link, a D2D link, or the user's own cache. Coordinate ascent stays
monotone as long as u_b <= u_d and K_A * u_s >= u_d; the second, instance
level condition is checked when a triple is attached to a cluster.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import RadioParams, dbm_to_watts
from .errors import ParameterError, SurrogateRangeError

ORDER_TOL = 1e-12


@dataclass(frozen=True)
class UtilityTriple:
    u_b: float
    u_d: float
    u_s: float

    def __post_init__(self):
        if self.u_b > self.u_d + ORDER_TOL:
            raise ParameterError(
                f"BS utility must not exceed D2D utility (u_b={self.u_b}, u_d={self.u_d})")


@dataclass(frozen=True)
class MetricConstants:
    """Link throughputs (bits/s) and serve costs (J/s) plus the tradeoff weight."""

    t_b: float
    t_d: float
    t_s: float
    c_b: float
    c_d: float
    c_s: float = 0.0
    zeta: float = 0.0

    def __post_init__(self):
        if not self.t_b <= self.t_d <= self.t_s:
            raise ParameterError("throughputs must satisfy t_b <= t_d <= t_s")
        if not self.c_b >= self.c_d >= self.c_s >= 0:
            raise ParameterError("costs must satisfy c_b >= c_d >= c_s >= 0")

    @classmethod
    def from_radio(cls, rp: RadioParams, zeta: float = 0.0) -> "MetricConstants":
        """Default constants: rate-scaled bandwidths, RF transmit energy as cost."""
        r_min = rp.capacity_threshold
        t_d = rp.d2d_bandwidth_hz * r_min
        return cls(
            t_b=rp.bs_bandwidth_hz * r_min,
            t_d=t_d,
            t_s=2.0 * t_d,
            c_b=dbm_to_watts(rp.bs_tx_power_dbm),
            c_d=dbm_to_watts(rp.d2d_tx_power_dbm),
            c_s=0.0,
            zeta=zeta,
        )


def throughput_objective(mc: MetricConstants) -> UtilityTriple:
    return UtilityTriple(mc.t_b, mc.t_d, mc.t_s)


def cost_objective(mc: MetricConstants) -> UtilityTriple:
    """Maximizing this triple minimizes the expected network cost."""
    return UtilityTriple(-mc.c_b, -mc.c_d, -mc.c_s)


def hitrate_objective(num_active: int) -> UtilityTriple:
    if num_active < 1:
        raise ParameterError("num_active must be >= 1")
    return UtilityTriple(0.0, 1.0, 1.0 / num_active)


def weighted_objective(mc: MetricConstants, w_t: float, w_c: float) -> UtilityTriple:
    """Generic throughput-cost weighted difference w_t * T - w_c * C."""
    if w_t < 0 or w_c < 0:
        raise ParameterError("weights must be nonnegative")
    return UtilityTriple(w_t * mc.t_b - w_c * mc.c_b,
                         w_t * mc.t_d - w_c * mc.c_d,
                         w_t * mc.t_s - w_c * mc.c_s)


def tradeoff_objective(mc: MetricConstants, num_active: int) -> UtilityTriple:
    """Throughput--hit-rate tradeoff: maximizes T_net + zeta * T_D * K_A * H_net."""
    if num_active < 1:
        raise ParameterError("num_active must be >= 1")
    zeta = mc.zeta
    return UtilityTriple(mc.t_b,
                         mc.t_d + zeta * num_active * mc.t_d,
                         mc.t_s + zeta * mc.t_d)


def ee_weighted_objective(mc: MetricConstants, t: float) -> UtilityTriple:
    """Dinkelbach surrogate T - t * C for an energy-efficiency guess t (bits/J)."""
    if t < 0:
        raise ParameterError("ratio guess t must be >= 0")
    u_b = mc.t_b - t * mc.c_b
    u_d = mc.t_d - t * mc.c_d
    u_s = mc.t_s - t * mc.c_s
    if not (u_b <= u_d + ORDER_TOL and u_d <= u_s + ORDER_TOL):
        raise SurrogateRangeError(t)
    return UtilityTriple(u_b, u_d, u_s)


def check_instance_ordering(triple: UtilityTriple, num_active: int) -> None:
    """Require K_A * u_s >= u_d; together with u_b <= u_d this keeps the
    utility nondecreasing in every caching probability."""
    scale = max(1.0, abs(triple.u_d), abs(triple.u_s))
    if num_active * triple.u_s < triple.u_d - 1e-9 * scale:
        raise ParameterError(
            f"utility triple needs K_A * u_s >= u_d "
            f"(K_A={num_active}, u_d={triple.u_d}, u_s={triple.u_s})")

"""Pairwise D2D link success probabilities under three channel models.

Case 1: guaranteed links (effective link quality control).
Case 2: deterministic geometry and shadowing, Rayleigh small-scale fading.
Case 3: users marginalized over a uniform square, Suzuki (lognormal x
Rayleigh) fading; one scalar applies to every user pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericalError, ParameterError

SQRT2 = math.sqrt(2.0)
SHADOW_TRUNC_SIGMAS = 6.0  # lognormal integral truncated to mu +/- 6 sigma (dB)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(x_watts: float) -> float:
    if x_watts == 0.0:
        return -math.inf
    return 10.0 * math.log10(x_watts) + 30.0


@dataclass(frozen=True)
class RadioParams:
    carrier_freq_hz: float = 2e9
    breakpoint_d0_m: float = 10.0
    pathloss_exponent_alpha: float = 3.68
    shadow_mu_db: float = 0.0
    shadow_sigma_db: float = 8.0
    noise_psd_dbm_hz: float = -174.0
    d2d_bandwidth_hz: float = 20e6
    bs_bandwidth_hz: float = 200e3
    d2d_tx_power_dbm: float = 20.0
    bs_tx_power_dbm: float = 26.0
    min_snr_db: float = 5.0

    def __post_init__(self):
        if min(self.carrier_freq_hz, self.breakpoint_d0_m,
               self.d2d_bandwidth_hz, self.bs_bandwidth_hz) <= 0:
            raise ParameterError("frequencies, distances and bandwidths must be > 0")
        if self.pathloss_exponent_alpha <= 2:
            raise ParameterError("pathloss exponent must exceed 2")

    @property
    def wavelength_m(self) -> float:
        return 3e8 / self.carrier_freq_hz

    @property
    def d2d_noise_power_watts(self) -> float:
        """Thermal noise power over the D2D bandwidth."""
        return dbm_to_watts(self.noise_psd_dbm_hz) * self.d2d_bandwidth_hz

    @property
    def capacity_threshold(self) -> float:
        """Minimum D2D rate C = log2(1 + SNR_min) in bits/s/Hz."""
        return math.log2(1.0 + db_to_linear(self.min_snr_db))

    @property
    def snr_gap(self) -> float:
        """2^C - 1, the linear SNR a link must exceed."""
        return db_to_linear(self.min_snr_db)


@dataclass(frozen=True)
class UserLayout:
    """K user positions inside a side-D square (meters)."""

    positions: np.ndarray
    side_m: float

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ParameterError("positions must have shape (K, 2)")
        if self.side_m <= 0:
            raise ParameterError("square side must be > 0")
        if np.any(p < 0) or np.any(p > self.side_m):
            raise ParameterError("positions must lie inside the square")
        object.__setattr__(self, "positions", p)

    @property
    def num_users(self) -> int:
        return self.positions.shape[0]

    def pairwise_distances(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=2))


@dataclass(frozen=True)
class LinkProbabilityMatrix:
    """K x K matrix of D2D link success probabilities, unit diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ParameterError("link probabilities must form a square matrix")
        if np.any(e < 0) or np.any(e > 1):
            raise ParameterError("link probabilities must lie in [0, 1]")
        if np.any(np.diag(e) != 1.0):
            raise ParameterError("link probability diagonal must equal 1")
        object.__setattr__(self, "entries", e)

    @property
    def num_users(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def uniform(cls, num_users: int, value: float) -> "LinkProbabilityMatrix":
        e = np.full((num_users, num_users), float(value))
        np.fill_diagonal(e, 1.0)
        return cls(e)


def pathgain(d, rp: RadioParams):
    """Linear power gain of the distance-dependent pathloss model.

    Distances below the breakpoint are clamped to it; the model is a far-field
    one and would otherwise diverge as d -> 0.
    """
    d = np.maximum(np.asarray(d, dtype=np.float64), rp.breakpoint_d0_m)
    fixed_db = 20.0 * np.log10(4.0 * math.pi * rp.breakpoint_d0_m / rp.wavelength_m)
    pl_db = fixed_db + 10.0 * rp.pathloss_exponent_alpha * np.log10(d / rp.breakpoint_d0_m)
    gain = 10.0 ** (-pl_db / 10.0)
    return float(gain) if np.isscalar(gain) or gain.ndim == 0 else gain


def _snr_threshold_received_power(rp: RadioParams) -> float:
    """Required mean received power numerator: sigma_n^2 * (2^C - 1)."""
    return rp.d2d_noise_power_watts * rp.snr_gap


def link_prob_case1(num_users: int) -> LinkProbabilityMatrix:
    """Guaranteed links: every entry 1."""
    if num_users < 1:
        raise ParameterError("num_users must be >= 1")
    return LinkProbabilityMatrix(np.ones((num_users, num_users)))


def link_prob_case2(layout: UserLayout, shadow_gains: np.ndarray,
                    rp: RadioParams) -> LinkProbabilityMatrix:
    """Rayleigh-only outage for fixed positions and shadowing gains.

    Off-diagonal entry: exp(-sigma_n^2 (2^C - 1) / (E_D * s_kl * PG(d_kl))).
    """
    s = np.asarray(shadow_gains, dtype=np.float64)
    k = layout.num_users
    if s.shape != (k, k):
        raise ParameterError("shadow_gains must be K x K")
    off_diag = ~np.eye(k, dtype=bool)
    if np.any(s[off_diag] <= 0):
        raise ParameterError("shadow gains must be positive")
    e_d = dbm_to_watts(rp.d2d_tx_power_dbm)
    threshold = _snr_threshold_received_power(rp)
    d = layout.pairwise_distances()
    entries = np.ones((k, k))
    gain = pathgain(d[off_diag], rp)
    entries[off_diag] = np.exp(-threshold / (e_d * s[off_diag] * gain))
    return LinkProbabilityMatrix(entries)


def square_distance_pdf(x):
    """Density of the distance between two uniform points in the unit square."""
    scalar = np.isscalar(x) or np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(x < 0) or np.any(x > SQRT2 + 1e-12):
        raise DomainError("distance must lie in [0, sqrt(2)]")
    out = np.zeros_like(x, dtype=np.float64)
    near = x <= 1.0
    xn = x[near]
    out[near] = 2.0 * xn * (math.pi + xn ** 2 - 4.0 * xn)
    far = ~near
    xf = np.minimum(x[far], SQRT2)
    out[far] = 2.0 * xf * (-2.0 - xf ** 2 + 4.0 * np.sqrt(xf ** 2 - 1.0)
                           + 2.0 * np.arcsin((2.0 - xf ** 2) / xf ** 2))
    return float(out[0]) if scalar else out


def _rayleigh_success(threshold: float, mean_rx_power: float) -> float:
    return math.exp(-threshold / mean_rx_power)


def link_prob_case3(side_m: float, rp: RadioParams, tol: float = 1e-6) -> float:
    """Pair-independent link success probability for uniformly placed users.

    Nested adaptive quadrature: outer over the normalized pair distance,
    inner over the lognormal shadowing gain (in the dB domain, truncated to
    mu +/- 6 sigma). Degenerate shadowing (sigma == 0) drops the inner
    integral.
    """
    if side_m <= 0:
        raise ParameterError("side_m must be > 0")
    e_d = dbm_to_watts(rp.d2d_tx_power_dbm)
    threshold = _snr_threshold_received_power(rp)
    mu, sigma = rp.shadow_mu_db, rp.shadow_sigma_db

    if sigma == 0.0:
        s_fixed = db_to_linear(mu)

        def kernel(x: float) -> float:
            return (_rayleigh_success(threshold, e_d * s_fixed * pathgain(side_m * x, rp))
                    * square_distance_pdf(x))

        value, err = integrate.quad(kernel, 0.0, SQRT2, points=[1.0],
                                    epsabs=tol, epsrel=tol, limit=200)
        if err > 10 * tol:
            raise NumericalError(f"outer quadrature error {err:.3e} exceeds tolerance {tol:.1e}")
        return min(value, 1.0)

    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))

    def inner(x: float) -> float:
        gain = e_d * pathgain(side_m * x, rp)

        def shadow_kernel(g_db: float) -> float:
            s = 10.0 ** (g_db / 10.0)
            return (_rayleigh_success(threshold, gain * s)
                    * norm * math.exp(-((g_db - mu) ** 2) / (2.0 * sigma ** 2)))

        value, err = integrate.quad(shadow_kernel,
                                    mu - SHADOW_TRUNC_SIGMAS * sigma,
                                    mu + SHADOW_TRUNC_SIGMAS * sigma,
                                    epsabs=tol, epsrel=tol, limit=200)
        if err > 10 * tol:
            raise NumericalError(
                f"inner quadrature error {err:.3e} exceeds tolerance {tol:.1e} at x={x:.4f}")
        return value

    def outer_kernel(x: float) -> float:
        return inner(x) * square_distance_pdf(x)

    value, err = integrate.quad(outer_kernel, 0.0, SQRT2, points=[1.0],
                                epsabs=tol, epsrel=tol, limit=200)
    if err > 10 * tol:
        raise NumericalError(f"outer quadrature error {err:.3e} exceeds tolerance {tol:.1e}")
    return min(value, 1.0)


def power_control_watts(side_m: float, rp: RadioParams, reuse_factor: float) -> float:
    """D2D transmit power (Watts) holding inter-cluster interference at the noise level."""
    if side_m <= 0:
        raise ParameterError("side_m must be > 0")
    if reuse_factor < 1:
        raise ParameterError("reuse_factor must be >= 1")
    alpha = rp.pathloss_exponent_alpha
    nu = 2.0 ** (alpha / 2.0) * dbm_to_watts(rp.noise_psd_dbm_hz) * rp.d2d_bandwidth_hz
    geometry = ((math.sqrt(reuse_factor) - 1.0) * side_m / rp.breakpoint_d0_m) ** alpha
    antenna = (4.0 * math.pi * rp.breakpoint_d0_m / rp.wavelength_m) ** 2
    return geometry * antenna * nu


def power_control(side_m: float, rp: RadioParams, reuse_factor: float) -> float:
    """Power-controlled D2D transmit power in dBm (-inf for reuse_factor 1)."""
    return watts_to_dbm(power_control_watts(side_m, rp, reuse_factor))


def with_tx_power(rp: RadioParams, d2d_tx_power_dbm: float) -> RadioParams:
    """Copy of the radio parameters with a new D2D transmit power."""
    return replace(rp, d2d_tx_power_dbm=d2d_tx_power_dbm)

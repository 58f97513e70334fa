"""Synthetic individual file-preference distributions and derived global popularity.

Each user k has a request distribution over the M-file library; all users
share a common Zipf "head" whose weight is controlled by ``mixing_weight``,
while the remainder comes from a per-user rank-permuted Zipf tail.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class GeneratorParams:
    zipf_exponent: float = 0.8
    mixing_weight: float = 0.3
    rank_permutation_strength: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.zipf_exponent <= 0:
            raise ParameterError(f"zipf_exponent must be > 0, got {self.zipf_exponent}")
        if not 0.0 <= self.mixing_weight <= 1.0:
            raise ParameterError(f"mixing_weight must be in [0,1], got {self.mixing_weight}")
        if self.rank_permutation_strength < 0:
            raise ParameterError("rank_permutation_strength must be >= 0")


@dataclass(frozen=True)
class PreferenceMatrix:
    """K x M row-stochastic matrix; entry (k, m) is user k's request probability for file m."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.ndim != 2:
            raise ParameterError("preference entries must be a 2-D array")
        if np.any(e < -0.0) or np.any(e > 1.0 + ROW_SUM_TOL):
            raise ParameterError("preference entries must lie in [0, 1]")
        row_sums = e.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOL):
            worst = float(np.abs(row_sums - 1.0).max())
            raise ParameterError(f"preference rows must sum to 1 (worst deviation {worst:.3e})")
        object.__setattr__(self, "entries", e)

    @property
    def num_users(self) -> int:
        return self.entries.shape[0]

    @property
    def library_size(self) -> int:
        return self.entries.shape[1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"file_{m}" for m in range(self.library_size)])
            for row in self.entries:
                writer.writerow([format(v, ".17g") for v in row])

    @classmethod
    def from_csv(cls, path) -> "PreferenceMatrix":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)  # header
            rows = [[float(v) for v in row] for row in reader]
        return cls(np.asarray(rows, dtype=np.float64))


@dataclass(frozen=True)
class GlobalPopularity:
    """Length-M system popularity distribution (average of individual preferences)."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1:
            raise ParameterError("popularity must be a 1-D vector")
        if np.any(p < 0) or np.any(p > 1.0 + ROW_SUM_TOL):
            raise ParameterError("popularity entries must lie in [0, 1]")
        if abs(float(p.sum()) - 1.0) > ROW_SUM_TOL:
            raise ParameterError("popularity must sum to 1")
        object.__setattr__(self, "probs", p)

    @property
    def library_size(self) -> int:
        return self.probs.shape[0]


def zipf_distribution(library_size: int, exponent: float) -> np.ndarray:
    """Normalized Zipf pmf over ranks 1..library_size, p(r) ~ r^-exponent."""
    ranks = np.arange(1, library_size + 1, dtype=np.float64)
    weights = ranks ** (-float(exponent))
    return weights / weights.sum()


def generate_preferences(num_users: int, library_size: int,
                         params: GeneratorParams) -> PreferenceMatrix:
    """Draw a reproducible K x M preference matrix.

    Each row is ``w * base + (1 - w) * permuted``, where ``base`` is the Zipf
    pmf over file indices and ``permuted`` redistributes the same pmf over a
    per-user rank order obtained by jittering ranks with Gaussian noise of
    standard deviation ``rank_permutation_strength * M`` and re-sorting.
    """
    if num_users < 1:
        raise ParameterError(f"num_users must be >= 1, got {num_users}")
    if library_size < 2:
        raise ParameterError(f"library_size must be >= 2, got {library_size}")
    base = zipf_distribution(library_size, params.zipf_exponent)
    w = params.mixing_weight
    if w == 1.0:
        entries = np.tile(base, (num_users, 1))
        return PreferenceMatrix(entries)

    rng = np.random.default_rng(params.seed)
    noise_sd = params.rank_permutation_strength * library_size
    noisy_ranks = np.arange(library_size, dtype=np.float64)[None, :]
    noisy_ranks = noisy_ranks + rng.normal(0.0, noise_sd, size=(num_users, library_size))
    order = np.argsort(noisy_ranks, axis=1, kind="stable")

    permuted = np.empty((num_users, library_size), dtype=np.float64)
    np.put_along_axis(permuted, order, base[None, :], axis=1)
    entries = w * base[None, :] + (1.0 - w) * permuted
    return PreferenceMatrix(entries)


def global_popularity(prefs: PreferenceMatrix) -> GlobalPopularity:
    """Arithmetic mean of the individual preference rows."""
    return GlobalPopularity(prefs.entries.mean(axis=0))


def homogenize(pop: GlobalPopularity, num_users: int) -> PreferenceMatrix:
    """K identical rows, each equal to the popularity distribution."""
    if num_users < 1:
        raise ParameterError(f"num_users must be >= 1, got {num_users}")
    return PreferenceMatrix(np.tile(pop.probs, (num_users, 1)))

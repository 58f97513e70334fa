"""Reference caching designs the optimized policies are compared against."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .optimizer import (CachingPolicy, ClusterInstance, OptimizerReport,
                        _top_s_row, optimize)
from .preferences import GlobalPopularity, PreferenceMatrix, homogenize


def selfish_policy(inst: ClusterInstance) -> CachingPolicy:
    """Every active user caches its own S favorite files; inactive users,
    having no requests of their own to serve, cache nothing."""
    b = np.zeros((inst.num_users, inst.library_size))
    for user in inst.active_set:
        b[user] = _top_s_row(inst.prefs.entries[user].copy(), inst.cache_size)
    return CachingPolicy(b)


def global_popularity_policy(inst: ClusterInstance, pop: GlobalPopularity,
                             order: Optional[Sequence[int]] = None,
                             max_rounds: Optional[int] = None) -> OptimizerReport:
    """Coordinated design that pretends every user follows the global
    popularity; evaluate the returned policy against the true preferences."""
    surrogate_prefs = homogenize(pop, inst.num_users)
    return optimize(inst.with_prefs(surrogate_prefs), order=order,
                    max_rounds=max_rounds)


def homogeneous_model_instance(inst: ClusterInstance,
                               pop: GlobalPopularity) -> ClusterInstance:
    """Instance where users genuinely share the global popularity; designing
    and evaluating on it reproduces the fully homogeneous baseline."""
    return inst.with_prefs(homogenize(pop, inst.num_users))

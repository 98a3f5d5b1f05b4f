# -*- coding: utf-8 -*-
################################################################################
# semiot/_policy.py
# The semi-myopic selection rule and its forced-exploration schedules.

import math
from dataclasses import dataclass

import numpy as np

from ._model import (LinearCostModel, decide)


#===============================================================================
# ExplorationSchedule

# Short mode names used on the command line and in config files.
MODE_NAMES = {'det': 'deterministic', 'prob': 'probabilistic'}

@dataclass(frozen=True)
class ExplorationSchedule:
    """When the semi-myopic policy forces itself to explore.

    `mode='deterministic'` explores alternative `k` (1-based) at the times
    `ceil(exp(a * m^(1/9)))` for `m` a positive multiple of `k + 1`.
    `mode='probabilistic'` explores a uniformly random alternative with
    probability `min(1, (log(n) / a)^9 / n)` at time `n`.
    The short names `'det'` and `'prob'` are accepted for the modes.
    """
    mode: str = 'probabilistic'
    a: float = 4.5
    def __post_init__(self):
        object.__setattr__(self, 'mode', MODE_NAMES.get(self.mode, self.mode))
        if self.mode not in ('deterministic', 'probabilistic'):
            raise ValueError(f"unknown exploration mode {self.mode!r}")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"exploration parameter must be positive, got "
                             f"{self.a}")
    @classmethod
    def deterministic(cls, a=5.0):
        return cls('deterministic', float(a))
    @classmethod
    def probabilistic(cls, a=4.5):
        return cls('probabilistic', float(a))
    @property
    def tag(self):
        return f"{'det' if self.mode == 'deterministic' else 'prob'}({self.a!r})"


#===============================================================================
# Deterministic schedule

def exploration_time(a, m):
    """Returns `ceil(exp(a * m^(1/9)))`, the time generated by lattice point
    `m`."""
    return int(math.ceil(math.exp(a * m**(1.0/9.0))))

def _lattice_interval(a, n):
    # The m with exploration_time(a, m) == n form an interval; the float
    # estimates are corrected against the exact formula.
    hi = int(math.floor((math.log(n) / a)**9))
    while exploration_time(a, hi + 1) <= n:
        hi += 1
    while hi >= 1 and exploration_time(a, hi) > n:
        hi -= 1
    lo = max(1, int(math.floor((math.log(n - 1) / a)**9)))
    while lo > 1 and exploration_time(a, lo - 1) >= n:
        lo -= 1
    while lo <= hi and exploration_time(a, lo) < n:
        lo += 1
    return (lo, hi)

def forced_alternative(schedule, n, K):
    """Returns the 0-based alternative forced at time `n`, or `None`.

    When `n` belongs to several exploration sets, the smallest alternative
    is returned. Membership is decided by inverting the time formula over the
    lattice rather than by enumerating it.
    """
    n = int(n)
    if n < 2:
        return None
    (lo, hi) = _lattice_interval(schedule.a, n)
    if lo > hi:
        return None
    for k in range(1, int(K) + 1):
        q = (hi // (k + 1)) * (k + 1)
        if q >= lo:
            return k - 1
    return None

def forced_schedule_table(schedule, K, N):
    """Returns the dict mapping each forced time `n <= N` to its 0-based
    alternative, built by enumerating the lattice (smallest alternative wins
    on collisions)."""
    table = {}
    m = 1
    while True:
        t = exploration_time(schedule.a, m)
        if t > N:
            break
        for k in range(1, int(K) + 1):
            if m % (k + 1) == 0:
                if t not in table or table[t] > k - 1:
                    table[t] = k - 1
                break
        m += 1
    return table


#===============================================================================
# Probabilistic schedule

def exploration_probability(a, n):
    """Returns `min(1, (log(n) / a)^9 / n)` (zero for `n <= 1`)."""
    if n <= 1:
        return 0.0
    return min(1.0, (math.log(n) / a)**9 / n)

def exploration_budget(a, N):
    """Returns the mean and variance of the number of probabilistic
    exploration events among times `1..N`."""
    n = np.arange(1, int(N) + 1, dtype=float)
    with np.errstate(divide='ignore'):
        q = np.minimum(1.0, (np.log(n) / a)**9 / n)
    q[0] = 0.0
    return (float(np.sum(q)), float(np.sum(q * (1.0 - q))))

def maybe_explore(schedule, n, K, rng):
    """Returns a uniformly random 0-based alternative with the exploration
    probability of time `n`, else `None`.

    Exactly one uniform draw is consumed per call, plus one integer draw when
    exploring.
    """
    u = rng.random()
    if u < exploration_probability(schedule.a, n):
        return int(rng.integers(K))
    return None


#===============================================================================
# Selection

def select(schedule, model_hat, g, x, n, rng=None, plugin=None):
    """Returns the pair `(k, explored)` chosen by the semi-myopic policy at
    time `n`.

    `n` is the number of completed iterations. If the schedule fires, `k` is
    the forced alternative and `explored` is `True`; otherwise `k` is
    `decide(model_hat, g, x)` (or `plugin`, if it was already computed).
    `model_hat` is a `LinearCostModel` or a `K x d` coefficient matrix.
    """
    K = np.shape(getattr(model_hat, "beta", model_hat))[0]
    if schedule.mode == 'deterministic':
        forced = forced_alternative(schedule, n, K)
    else:
        if rng is None:
            raise ValueError("probabilistic exploration requires an rng")
        forced = maybe_explore(schedule, n, K, rng)
    if forced is not None:
        return (forced, True)
    if plugin is None:
        plugin = decide(LinearCostModel(model_hat), g, x)
    return (plugin, False)

# -*- coding: utf-8 -*-
################################################################################
# semiot/_sa.py
# Stochastic approximation for the dual weights when the costs are known.

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._model import (DualWeights, decide)
from ._trace import (TracePoint, TransientTrace, trace_schedule)

logger = logging.getLogger(__name__)


#===============================================================================
# Configuration

@dataclass(frozen=True)
class SAConfig:
    """Settings of the known-cost stochastic approximation.

    The stepsize of iteration `n` (0-based) is `alpha / (n + 1)`; `g0` is the
    initial iterate (zeros when `None`).
    """
    alpha: float = 50.0
    g0: Optional[DualWeights] = None
    n_iters: int = 100_000
    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if int(self.n_iters) < 1:
            raise ValueError(f"n_iters must be >= 1, got {self.n_iters}")
        if self.g0 is not None and not isinstance(self.g0, DualWeights):
            object.__setattr__(self, 'g0', DualWeights(self.g0))
    def initial(self, K):
        """Returns the initial iterate as a fresh writable array."""
        if self.g0 is None:
            return np.zeros(K)
        if self.g0.K != K:
            raise ValueError(f"g0 has {self.g0.K} entries, expected {K}")
        return np.array(self.g0.g)


#===============================================================================
# SA updates

def sa_step(g, x, model, p, alpha_n):
    """Returns the dual weights after one known-cost SA update.

    Every entry moves up by `alpha_n * p[k]`; the entry of the alternative
    selected by `decide(model, g, x)` additionally moves down by `alpha_n`.
    """
    if alpha_n < 0:
        raise ValueError(f"stepsize must be non-negative, got {alpha_n}")
    g = DualWeights(g)
    k = decide(model, g, x)
    new = g.g + alpha_n * np.asarray(p, dtype=float)
    new[k] -= alpha_n
    return DualWeights(new)

def sa_iterate(costs, p, alpha, g, n0=0, decisions=None, accumulate=None):
    """Runs the SA recursion in place over the rows of a cost matrix.

    Row `i` of `costs` holds the costs of all alternatives at the context of
    iteration `n0 + i` (0-based), which uses stepsize `alpha / (n0 + i + 1)`.
    `g` is updated in place and returned. If `decisions` is given, the
    selected alternatives are written into it; if `accumulate` is given, each
    new iterate is added into it.
    """
    p = np.asarray(p, dtype=float)
    for ii in range(costs.shape[0]):
        a = alpha / (n0 + ii + 1)
        k = (costs[ii] - g).argmin()
        g += a * p
        g[k] -= a
        if decisions is not None:
            decisions[ii] = k
        if accumulate is not None:
            accumulate += g
    return g

def run_known_costs(instance, alpha, horizon, g0=None, trace_every=None,
                    g_star=None, truth=None, steps=False, kind='sa',
                    extra=(), block=4096):
    """Runs SA online with the true costs of `instance` and returns the
    final weights (an array) and a `RunTrace`.

    `instance` needs `K`, `p`, `costs` (with `costs_many`) and `sampler`.
    When `steps` is true the per-iteration selections are recorded; when
    `truth` (a cost model and `g*`, as in `Truth`) is given, each selection is
    scored against the optimal policy. `g_star` adds `delta_norm` to the
    trace points (it defaults to the truth's `g*`); `extra` adds trace points.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    K = instance.K
    p = instance.p
    g = np.zeros(K) if g0 is None else np.array(DualWeights(g0).g)
    if g.shape != (K,):
        raise ValueError(f"g0 has {g.shape[0]} entries, expected {K}")
    if g_star is None and truth is not None:
        g_star = truth[1]
    gs = None
    if g_star is not None:
        gs = np.asarray(g_star, dtype=float)
        gs = gs - gs[0]
    stops = sorted(trace_schedule(horizon, trace_every, extra=extra))
    trace = TransientTrace(kind, K, g, instance.sampler, capacity=horizon,
                           steps=steps, truth=truth is not None)
    stream = instance.sampler.stream()
    decisions = np.zeros(block, dtype=np.int64) if steps else None
    n = 0
    si = 0
    while n < horizon:
        m = min(block, horizon - n)
        X = stream.draw_many(m)
        C = instance.costs.costs_many(X)
        start = 0
        while start < m:
            # Run up to the next trace point or the end of the block.
            stop = min(m, stops[si] - n) if si < len(stops) else m
            sa_iterate(C[start:stop], p, alpha, g, n0=n + start,
                       decisions=None if decisions is None else
                                 decisions[start:stop])
            start = stop
            if si < len(stops) and n + start == stops[si]:
                dn = math.nan if gs is None else \
                     float(np.linalg.norm(g - g[0] - gs))
                trace.record_point(TracePoint(n + start, g, delta_norm=dn))
                si += 1
        if steps:
            ks = decisions[:m]
            if truth is None:
                trace.record_block(ks, ks, np.zeros(m, dtype=np.int8))
            else:
                star = np.argmin(truth[0].costs_many(X) -
                                 np.asarray(truth[1], dtype=float), axis=1)
                ok = (ks == star).astype(np.int8)
                trace.record_block(ks, ks, np.zeros(m, dtype=np.int8), ok, ok)
        n += m
    logger.debug("%s run: %d iterations, final g=%s", kind, horizon, g)
    return (g, trace.persistent())

def run_sa(instance, cfg, trace_every=None, g_star=None):
    """Runs known-cost SA on `instance` for `cfg.n_iters` iterations.

    Returns the tuple `(g, trace)` of the final `DualWeights` and a `RunTrace`
    of kind `'sa'` holding trace points at the iterations chosen by
    `trace_schedule(n_iters, trace_every)`. When `g_star` is given, each trace
    point carries the normalized error norm `delta_norm`.
    """
    (g, trace) = run_known_costs(instance, cfg.alpha, cfg.n_iters,
                                 g0=cfg.initial(instance.K),
                                 trace_every=trace_every, g_star=g_star)
    return (DualWeights(g), trace)

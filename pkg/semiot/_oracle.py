# -*- coding: utf-8 -*-
################################################################################
# semiot/_oracle.py
# Ground truth: the optimal dual weights, target verification, and scoring of
# run traces against the optimal policy.

import json
import logging
import math
from typing import (NamedTuple, Optional)

import numpy as np

from .abc import Persistent
from .util import (freeze, derive_seed, write_csv)
from ._model import (DualWeights, decide_many, estimate_assignment_probs)
from ._regression import UnsupportedModeError
from ._sa import sa_iterate

logger = logging.getLogger(__name__)

ORACLE_VERSION = "semiot-oracle-v1"

# Stream number of the independent contexts used to check an oracle.
CHECK_STREAM = 7


class OracleError(RuntimeError):
    """Raised when an oracle's assignment proportions miss the targets.

    `residual` holds `|p_hat_k - p_k|`; `instance_index` is set when the
    failure happened inside a sweep.
    """
    def __init__(self, msg, residual=None, instance_index=None):
        RuntimeError.__init__(self, msg)
        self.residual = None if residual is None else np.asarray(residual)
        self.instance_index = instance_index
    def __reduce__(self):
        return (type(self), (self.args[0], self.residual, self.instance_index))
    def __str__(self):
        s = self.args[0]
        if self.instance_index is not None:
            s = f"instance {self.instance_index}: {s}"
        return s


#===============================================================================
# Oracle results

class OracleResult(Persistent):
    """The optimal dual weights of an instance.

    `g_star` is normalized so that its first entry is exactly 0; `method` is
    `'long-sa'` or `'quantile-k2'`; `n` counts the oracle iterations or
    samples; `residual` is `|p_hat_k - p_k|` at `g_star` on independent
    contexts.
    """
    __slots__ = ('g_star', 'method', 'n', 'residual', 'seed')
    _fields = ('g_star', 'method', 'n', 'residual', 'seed')
    methods = ('long-sa', 'quantile-k2')
    def __new__(cls, g_star, method, n, residual, seed=0):
        if method not in cls.methods:
            raise ValueError(f"unknown oracle method {method!r}")
        obj = object.__new__(cls)
        object.__setattr__(obj, 'g_star', DualWeights(g_star).normalized())
        object.__setattr__(obj, 'method', method)
        object.__setattr__(obj, 'n', int(n))
        object.__setattr__(obj, 'residual', freeze(residual))
        object.__setattr__(obj, 'seed', int(seed))
        return obj
    @property
    def K(self):
        return self.g_star.K
    @property
    def max_residual(self):
        return float(np.max(self.residual))
    def transient(self):
        return np.array(self.g_star.g)
    def to_json(self):
        return {"version": ORACLE_VERSION,
                "g_star": self.g_star.g.tolist(),
                "method": self.method,
                "n": self.n,
                "residual": self.residual.tolist(),
                "seed": self.seed}
    @classmethod
    def from_json(cls, doc):
        if doc.get("version") != ORACLE_VERSION:
            raise ValueError(f"unsupported oracle version {doc.get('version')!r}")
        return cls(doc["g_star"], doc["method"], doc["n"], doc["residual"],
                   doc.get("seed", 0))

def save_oracle(result, path, ident=None):
    """Writes an oracle result as JSON; `ident`, when given, is stored with it
    and identifies the problem it was solved for."""
    doc = result.to_json()
    if ident is not None:
        doc["ident"] = ident
    with open(path, 'wt', encoding='utf-8') as fl:
        json.dump(doc, fl, indent=2, sort_keys=True)
        fl.write('\n')
    return path

def load_oracle(path):
    with open(path, 'rt', encoding='utf-8') as fl:
        return OracleResult.from_json(json.load(fl))

class Truth(NamedTuple):
    """What scoring needs to know: the true cost `model` (applied to raw
    contexts), the optimal weights `g_star`, and, when the model is linear in
    the learner's features, the true coefficients `beta`."""
    model: object
    g_star: object
    beta: Optional[np.ndarray] = None
    @classmethod
    def of(cls, instance, oracle):
        """Returns the truth of an instance whose costs are a
        `LinearCostModel`."""
        g = oracle.g_star if isinstance(oracle, OracleResult) else oracle
        return cls(instance.costs, np.asarray(g, dtype=float),
                   instance.costs.beta)


#===============================================================================
# Target verification

class TargetCheck(NamedTuple):
    passed: bool
    residuals: np.ndarray
    probs: np.ndarray

def check_sampler(sampler):
    """Returns `sampler` reseeded to draw contexts independent of its own
    (array samplers are returned unchanged)."""
    if sampler.kind == 'array':
        return sampler
    return sampler.set(seed=derive_seed(sampler.seed, CHECK_STREAM))

def verify_targets(model, g, sampler, p, n_samples=1_000_000, tol=0.01):
    """Checks that `decide(model, g, X)` assigns alternative `k` with
    probability `p[k]`.

    Returns a `TargetCheck` whose `passed` is true iff the largest residual
    `|p_hat_k - p_k|` is at most `tol`.
    """
    probs = estimate_assignment_probs(model, g, sampler, n_samples)
    res = np.abs(probs - np.asarray(p, dtype=float))
    return TargetCheck(bool(np.max(res) <= tol), res, probs)


#===============================================================================
# Oracles

def solve_gstar_long_sa(instance, oracle_iters=10_000_000,
                        tail_average_fraction=0.5, alpha=50.0, tol=0.01,
                        n_check=1_000_000, block=65536):
    """Computes `g*` by running known-cost SA for `oracle_iters` iterations and
    averaging the final `tail_average_fraction` of the iterates.

    The result is checked with `verify_targets` on `n_check` independent
    contexts; an `OracleError` is raised if the largest residual exceeds
    `tol`.
    """
    oracle_iters = int(oracle_iters)
    if oracle_iters < 1:
        raise ValueError(f"oracle_iters must be >= 1, got {oracle_iters}")
    if not (0 < tail_average_fraction <= 1):
        raise ValueError(f"tail_average_fraction must be in (0, 1], got "
                         f"{tail_average_fraction}")
    K = instance.K
    if K == 1:
        return OracleResult(np.zeros(1), 'long-sa', 0, np.zeros(1),
                            instance.seed)
    p = np.asarray(instance.p, dtype=float)
    tail_start = oracle_iters - max(1, int(round(tail_average_fraction *
                                                 oracle_iters)))
    g = np.zeros(K)
    acc = np.zeros(K)
    stream = instance.sampler.stream()
    n = 0
    while n < oracle_iters:
        m = min(block, oracle_iters - n)
        C = instance.costs.costs_many(stream.draw_many(m))
        if n + m <= tail_start:
            sa_iterate(C, p, alpha, g, n0=n)
        else:
            split = max(0, tail_start - n)
            sa_iterate(C[:split], p, alpha, g, n0=n)
            sa_iterate(C[split:], p, alpha, g, n0=n + split, accumulate=acc)
        n += m
        logger.debug("long-sa oracle: %d/%d iterations", n, oracle_iters)
    g_avg = acc / (oracle_iters - tail_start)
    check = verify_targets(instance.costs, g_avg,
                           check_sampler(instance.sampler), p, n_check, tol)
    if not check.passed:
        raise OracleError(f"long-sa oracle residual {np.max(check.residuals):.4g}"
                          f" exceeds tolerance {tol}", check.residuals)
    logger.info("long-sa oracle solved: max residual %.4g",
                float(np.max(check.residuals)))
    return OracleResult(g_avg, 'long-sa', oracle_iters, check.residuals,
                        instance.seed)

def solve_gstar_quantile_k2(instance, n_samples=1_000_000, tol=None):
    """Computes `g*` for a two-alternative instance as `(0, q)`, where `q` is
    the empirical `p[1]`-quantile of `c_2(X) - c_1(X)` over `n_samples`
    contexts.

    Raises `UnsupportedModeError` unless `K == 2`. If `tol` is given, the
    residual on independent contexts is checked as in
    `solve_gstar_long_sa`.
    """
    if instance.K != 2:
        raise UnsupportedModeError(
            f"the quantile oracle requires K = 2, got K = {instance.K}")
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    p = np.asarray(instance.p, dtype=float)
    C = instance.costs.costs_many(instance.sampler.sample(n_samples))
    Z = C[:, 1] - C[:, 0]
    q = float(np.quantile(Z, p[1]))
    check = verify_targets(instance.costs, np.array([0.0, q]),
                           check_sampler(instance.sampler), p, n_samples,
                           math.inf if tol is None else tol)
    if not check.passed:
        raise OracleError(f"quantile oracle residual {np.max(check.residuals):.4g}"
                          f" exceeds tolerance {tol}", check.residuals)
    return OracleResult(np.array([0.0, q]), 'quantile-k2', n_samples,
                        check.residuals, instance.seed)

def cached_oracle(path, solve, instance, ident=None, **kw):
    """Returns the oracle stored at `path`, or solves it with
    `solve(instance, **kw)` and stores it there.

    When `ident` is given, a stored oracle is only used if it was saved with
    the same `ident`; otherwise it is solved again and overwritten.
    """
    try:
        with open(path, 'rt', encoding='utf-8') as fl:
            doc = json.load(fl)
    except FileNotFoundError:
        doc = None
    if doc is not None:
        if ident is None or doc.get("ident") == ident:
            return OracleResult.from_json(doc)
        logger.warning("%s holds the oracle of another problem; solving again",
                       path)
    result = solve(instance, **kw)
    save_oracle(result, path, ident)
    return result


#===============================================================================
# Scoring

def windowed_mean(flags, window=100):
    """Returns the trailing moving average of `flags`; entry `i` averages the
    last `min(i + 1, window)` entries."""
    flags = np.asarray(flags, dtype=float)
    cs = np.concatenate([[0.0], np.cumsum(flags)])
    ii = np.arange(1, flags.shape[0] + 1)
    lo = np.maximum(0, ii - window)
    return (cs[ii] - cs[lo]) / (ii - lo)

class ScoreReport(Persistent):
    """The scores of one run against the optimal policy.

    Per-iteration arrays: `correct_hat` and `correct` (the plug-in choice and
    the selection agree with the optimal policy), their windowed averages
    `pcs_hat` and `pcs`, and the cumulative incorrect-selection counts
    `incorrect_hat` and `incorrect`. Per trace point: `ns`, `delta_norm`,
    and `Delta_max` (all `nan` when unavailable).
    """
    __slots__ = ('n0', 'window', 'correct_hat', 'correct', 'pcs_hat', 'pcs',
                 'incorrect_hat', 'incorrect', 'ns', 'delta_norm', 'Delta_max')
    _fields = __slots__
    def __new__(cls, n0, window, correct_hat, correct, ns, delta_norm,
                Delta_max):
        obj = object.__new__(cls)
        object.__setattr__(obj, 'n0', int(n0))
        object.__setattr__(obj, 'window', int(window))
        for (k,v) in (('correct_hat', correct_hat), ('correct', correct)):
            object.__setattr__(obj, k, freeze(v, np.int8))
        object.__setattr__(obj, 'pcs_hat', freeze(windowed_mean(correct_hat, window)))
        object.__setattr__(obj, 'pcs', freeze(windowed_mean(correct, window)))
        object.__setattr__(obj, 'incorrect_hat',
                           freeze(np.cumsum(1 - obj.correct_hat), np.int64))
        object.__setattr__(obj, 'incorrect',
                           freeze(np.cumsum(1 - obj.correct), np.int64))
        object.__setattr__(obj, 'ns', freeze(ns, np.int64))
        object.__setattr__(obj, 'delta_norm', freeze(delta_norm))
        object.__setattr__(obj, 'Delta_max', freeze(Delta_max))
        return obj
    def __len__(self):
        return self.correct.shape[0]
    def transient(self):
        return dict((k, np.array(getattr(self, k))) for k in self._fields[2:])
    def terminal_pcs(self, plugin=True):
        """The correct-selection rate over the final window."""
        flags = self.correct_hat if plugin else self.correct
        return float(np.mean(flags[-self.window:]))
    def write_csv(self, path):
        """Writes `n,correct_hat,correct,pcs_hat,pcs,incorrect_hat,incorrect`
        rows, one per iteration."""
        header = ['n', 'correct_hat', 'correct', 'pcs_hat', 'pcs',
                  'incorrect_hat', 'incorrect']
        cols = [self.correct_hat, self.correct, self.pcs_hat, self.pcs,
                self.incorrect_hat, self.incorrect]
        rows = ([self.n0 + ii + 1] + [c[ii] for c in cols]
                for ii in range(len(self)))
        return write_csv(path, header, rows)
    def write_points_csv(self, path):
        """Writes `n,delta_norm,Delta_max` rows, one per trace point."""
        rows = ([int(n), float(a), float(b)]
                for (n,a,b) in zip(self.ns, self.delta_norm, self.Delta_max))
        return write_csv(path, ['n', 'delta_norm', 'Delta_max'], rows)

def score_run(trace, truth, window=100):
    """Scores a `RunTrace` against a `Truth` and returns a `ScoreReport`.

    The contexts are replayed from the trace's sampler; the result depends
    only on `(trace, truth)`.
    """
    if truth is None:
        raise ValueError("score_run requires the truth")
    if trace.pi is None:
        raise ValueError("trace does not record per-iteration selections")
    if isinstance(truth, tuple) and not isinstance(truth, Truth):
        truth = Truth(*truth)
    g_star = truth.g_star
    if isinstance(g_star, OracleResult):
        g_star = g_star.g_star
    g_star = np.asarray(g_star, dtype=float)
    X = trace.contexts()
    star = decide_many(truth.model, g_star, X)
    correct_hat = (trace.pi_hat == star)
    correct = (trace.pi == star)
    ns = trace.ns
    dn = trace.delta_norms(g_star) if len(ns) > 0 else np.empty(0)
    pts = trace.points()
    if truth.beta is not None and len(pts) > 0 and pts[0].beta_hat is not None:
        dm = trace.Delta_maxes(truth.beta)
    else:
        dm = np.full(len(ns), math.nan)
    return ScoreReport(trace.n0, window, correct_hat, correct, ns, dn, dm)

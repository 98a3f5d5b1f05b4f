# -*- coding: utf-8 -*-
################################################################################
# semiot/_experiments.py
# Synthetic benchmark sweeps: instance generation, correct-selection
# trajectories of the learner against the known-cost benchmark, and empirical
# convergence-rate diagnostics.

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import (dataclass, field, asdict)
from typing import NamedTuple

import numpy as np
from scipy.stats import linregress

from .util import (derive_seed, make_generator, write_csv, json_digest)
from ._model import (INSTANCE_STREAM, TransportInstance, save_instance)
from ._regression import RidgePolicy
from ._policy import (ExplorationSchedule, MODE_NAMES)
from ._sa import run_known_costs
from ._learner import (LearnerConfig, Learner)
from ._oracle import (OracleError, Truth, solve_gstar_long_sa, cached_oracle,
                      save_oracle)
from ._lazy import LazyCache

logger = logging.getLogger(__name__)

# Key from which the seeds of the replications of an instance are derived.
REPLICATION_KEY = 100


#===============================================================================
# SyntheticSpec

@dataclass(frozen=True)
class SyntheticSpec:
    """The configuration of a synthetic sweep.

    The defaults reproduce the unit-sphere study (`d = 10`, `alpha = 50`,
    constant `rho = 0.001`, probabilistic exploration with `a = 4.5`, noise
    levels 0.02 and 0.2) at desk scale. `K = 10` is an assumption; the number
    of alternatives of the original study is not known. `explore_as` lists
    the exploration parameters swept (one learner column each).
    """
    d: int = 10
    K: int = 10
    n_instances: int = 100
    n_runs_per_instance: int = 10
    horizon: int = 1000
    noise_sigmas: tuple = (0.02, 0.2)
    sa_alpha: float = 50.0
    explore_mode: str = 'probabilistic'
    explore_as: tuple = (4.5,)
    rho: RidgePolicy = field(default_factory=lambda: RidgePolicy.constant(0.001))
    master_seed: int = 0
    oracle_iters: int = 1_000_000
    oracle_tol: float = 0.03
    oracle_tail: float = 0.5
    window: int = 100
    rate_instances: int = 20
    rate_horizon: int = 100_000
    profile: str = 'desk'
    profiles = {
        'desk': dict(n_instances=100, oracle_iters=1_000_000, oracle_tol=0.03),
        'paper': dict(n_instances=1000, oracle_iters=10_000_000,
                      oracle_tol=0.01)}
    def __post_init__(self):
        object.__setattr__(self, 'explore_mode',
                           MODE_NAMES.get(self.explore_mode, self.explore_mode))
        object.__setattr__(self, 'noise_sigmas',
                           tuple(float(s) for s in self.noise_sigmas))
        object.__setattr__(self, 'explore_as',
                           tuple(float(a) for a in self.explore_as))
        if isinstance(self.rho, dict):
            object.__setattr__(self, 'rho', RidgePolicy(**self.rho))
        for k in ('d', 'K', 'n_instances', 'n_runs_per_instance', 'horizon',
                  'oracle_iters', 'window', 'rate_instances', 'rate_horizon'):
            if int(getattr(self, k)) < 1:
                raise ValueError(f"{k} must be positive, got {getattr(self, k)}")
        if not (self.sa_alpha > 0):
            raise ValueError(f"sa_alpha must be positive, got {self.sa_alpha}")
        if not (self.oracle_tol > 0):
            raise ValueError(f"oracle_tol must be positive, got {self.oracle_tol}")
        if len(self.noise_sigmas) == 0 or min(self.noise_sigmas) < 0:
            raise ValueError("noise_sigmas must be a non-empty list of values >= 0")
        if len(self.explore_as) == 0:
            raise ValueError("explore_as must not be empty")
        for a in self.explore_as:
            ExplorationSchedule(self.explore_mode, a)
        if self.profile not in self.profiles:
            raise ValueError(f"unknown profile {self.profile!r}")
    @classmethod
    def from_profile(cls, profile='desk', **kw):
        """Returns the spec of a named scale profile, with overrides."""
        if profile not in cls.profiles:
            raise ValueError(f"unknown profile {profile!r}")
        return cls(**dict(cls.profiles[profile], profile=profile, **kw))
    @classmethod
    def desk(cls, **kw):
        return cls.from_profile('desk', **kw)
    @classmethod
    def paper(cls, **kw):
        return cls.from_profile('paper', **kw)
    def schedules(self):
        return [ExplorationSchedule(self.explore_mode, a)
                for a in self.explore_as]
    def learner_config(self, schedule):
        return LearnerConfig(sa_alpha=self.sa_alpha, schedule=schedule,
                             ridge=self.rho)
    def policies(self):
        """The names of the policy columns, benchmark first."""
        return ['benchmark'] + [f'semi-myopic[{s.tag}]'
                                for s in self.schedules()]
    def to_json(self):
        doc = asdict(self)
        doc['noise_sigmas'] = list(self.noise_sigmas)
        doc['explore_as'] = list(self.explore_as)
        return doc
    @classmethod
    def from_json(cls, doc):
        return cls(**doc)


#===============================================================================
# Instances

def instance_seed(spec, index):
    return derive_seed(spec.master_seed, index)

def generate_instance(spec, index):
    """Returns instance `index` of a sweep.

    The coefficient vectors are uniform on the unit sphere in `R^d`, `p` is
    uniform on the simplex (normalized exponential spacings), contexts are
    uniform on the unit sphere, and the noise is Gaussian with the first of
    `spec.noise_sigmas`. All seeds derive from `(master_seed, index)`.
    """
    index = int(index)
    if not (0 <= index < spec.n_instances):
        raise IndexError(f"instance index {index} out of range for "
                         f"{spec.n_instances} instances")
    seed = instance_seed(spec, index)
    rng = make_generator(seed, INSTANCE_STREAM)
    beta = rng.standard_normal((spec.K, spec.d))
    beta /= np.linalg.norm(beta, axis=1, keepdims=True)
    e = rng.standard_exponential(spec.K)
    p = e / np.sum(e)
    return TransportInstance.seeded(p, beta, 'sphere', spec.noise_sigmas[0],
                                    seed)

def replication(instance, r):
    """Returns replication `r` of an instance: the same problem with all
    stream seeds re-derived."""
    return instance.reseed(derive_seed(instance.seed, REPLICATION_KEY, r))

def oracle_key(instance, **settings):
    """Returns the cache key of the oracle of `instance` under the given
    solver settings.

    The key covers everything the oracle depends on: `p`, the cost
    coefficients, the context sampler (kind, dimension, and seed or data),
    and the settings. Noise does not enter, so noise variants of one problem
    share their oracle.
    """
    return json_digest({"p": instance.p.tolist(),
                        "beta": instance.costs.beta.tolist(),
                        "sampler": instance.sampler.to_json(),
                        "settings": settings})

# Oracles solved in this process; the oldest are evicted first.
_oracles = LazyCache(maxsize=32)

def clear_oracle_cache():
    """Forgets every oracle solved in this process."""
    _oracles.clear()

def instance_oracle(spec, instance, index, oracle_dir=None):
    """Returns the long-SA oracle of an instance.

    Each oracle is solved at most once while it stays in the process cache
    and only when first requested; with `oracle_dir` it is also read from or
    written to `oracle_NNNN.json` there. Oracle failures are tagged with the
    instance index.
    """
    kw = dict(oracle_iters=spec.oracle_iters,
              tail_average_fraction=spec.oracle_tail, alpha=spec.sa_alpha,
              tol=spec.oracle_tol)
    key = oracle_key(instance, method='long-sa', **kw)
    try:
        if oracle_dir is None:
            _oracles.put(key, solve_gstar_long_sa, instance, **kw)
            return _oracles[key]
        path = os.path.join(oracle_dir, f"oracle_{index:04d}.json")
        _oracles.put(key, cached_oracle, path, solve_gstar_long_sa, instance,
                     ident=key, **kw)
        result = _oracles[key]
        if not os.path.exists(path):
            save_oracle(result, path, key)
        return result
    except OracleError as e:
        e.instance_index = index
        raise

def write_instances(spec, directory):
    """Writes every instance of a sweep as `instance_NNNN.json` and returns
    the list of paths."""
    os.makedirs(directory, exist_ok=True)
    return [save_instance(generate_instance(spec, ii),
                          os.path.join(directory, f'instance_{ii:04d}.json'))
            for ii in range(spec.n_instances)]


#===============================================================================
# Benchmark policy

def run_benchmark_policy(instance, horizon, sa_alpha=50.0, truth=None):
    """Runs the known-cost SA policy online and returns its `RunTrace`, with
    per-step selections (never explored) scored against `truth` when it is
    given."""
    (_, trace) = run_known_costs(instance, sa_alpha, horizon, truth=truth,
                                 steps=True, kind='benchmark',
                                 trace_every=horizon)
    return trace


#===============================================================================
# PCS trajectories

class PcsTable:
    """Average correct-selection trajectories, one column per policy and
    noise level.

    `columns[(policy, sigma)]` is the pair `(pcs, se)` of arrays indexed by
    `n - 1`; `se` is the binomial standard error over the `count` runs.
    """
    __slots__ = ('horizon', 'count', 'columns', 'spec')
    def __init__(self, spec, sums, count):
        self.spec = spec
        self.horizon = spec.horizon
        self.count = int(count)
        self.columns = {}
        for (key, s) in sums.items():
            pcs = s / count
            se = np.sqrt(pcs * (1.0 - pcs) / count)
            self.columns[key] = (pcs, se)
    def pcs(self, policy, sigma):
        return self.columns[(policy, float(sigma))][0]
    def terminal(self, policy, sigma, window=None):
        """The average PCS over the final `window` iterations."""
        window = self.spec.window if window is None else window
        return float(np.mean(self.pcs(policy, sigma)[-window:]))
    def gap(self, sigma, policy=None, window=None):
        """The terminal PCS of the benchmark minus that of a learner column
        (the first one by default)."""
        policy = self.spec.policies()[1] if policy is None else policy
        return (self.terminal('benchmark', sigma, window) -
                self.terminal(policy, sigma, window))
    def write_csv(self, path):
        """Writes the long-format `n,policy,sigma,pcs,se` table."""
        def _rows():
            for policy in self.spec.policies():
                for sigma in self.spec.noise_sigmas:
                    (pcs, se) = self.columns[(policy, sigma)]
                    for ii in range(self.horizon):
                        yield [ii + 1, policy, sigma, float(pcs[ii]),
                               float(se[ii])]
        return write_csv(path, ['n', 'policy', 'sigma', 'pcs', 'se'], _rows())

def _instance_pcs(spec, index, oracle_dir=None):
    # The correct-selection counts of one instance, summed over its runs.
    inst = generate_instance(spec, index)
    oracle = instance_oracle(spec, inst, index, oracle_dir)
    truth = Truth.of(inst, oracle)
    policies = spec.policies()
    sums = {(pol, s): np.zeros(spec.horizon, dtype=np.int64)
            for pol in policies for s in spec.noise_sigmas}
    for r in range(spec.n_runs_per_instance):
        rep = replication(inst, r)
        for sigma in spec.noise_sigmas:
            noisy = rep.with_noise(sigma)
            tr = run_benchmark_policy(noisy, spec.horizon, spec.sa_alpha, truth)
            sums[('benchmark', sigma)] += tr.correct
            for (pol, sched) in zip(policies[1:], spec.schedules()):
                learner = Learner(noisy, spec.learner_config(sched))
                tr = learner.run(spec.horizon, truth=truth,
                                 trace_every=spec.horizon)
                sums[(pol, sigma)] += tr.correct_hat
    logger.debug("instance %d done", index)
    return sums

def _map(fn, args, jobs):
    # Results come back in the order of `args`.
    if jobs == 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*args)))

def pcs_trajectory(spec, jobs=None, oracle_dir=None):
    """Runs the sweep of `spec` and returns its `PcsTable`.

    Each instance (with its oracle and all of its runs) is one unit of work;
    with `jobs > 1` the units run in a process pool. Counts are reduced in
    instance order, so the result does not depend on `jobs`. Oracles are
    read from and written to `oracle_dir` when it is given.
    """
    jobs = (os.cpu_count() or 1) if jobs is None else int(jobs)
    t0 = time.perf_counter()
    parts = _map(_instance_pcs,
                 [(spec, ii, oracle_dir) for ii in range(spec.n_instances)],
                 jobs)
    sums = {k: np.zeros(spec.horizon, dtype=np.int64) for k in parts[0]}
    for part in parts:
        for (k,v) in part.items():
            sums[k] += v
    table = PcsTable(spec, sums, spec.n_instances * spec.n_runs_per_instance)
    logger.info("pcs sweep: %d instances x %d runs in %.1f s",
                spec.n_instances, spec.n_runs_per_instance,
                time.perf_counter() - t0)
    return table


#===============================================================================
# Rate fitting

class RateFit(NamedTuple):
    slope: float
    stderr: float
    intercept: float
    n_points: int

def fit_rate(ns, values, window=None):
    """Fits `log(value) = intercept + slope * log(n)` by ordinary least
    squares and returns a `RateFit`.

    `window = (lo, hi)` restricts the fit to `lo <= n <= hi`. At least 10
    points are required and every value must be positive.
    """
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if ns.shape != values.shape or ns.ndim != 1:
        raise ValueError("ns and values must be 1D arrays of the same length")
    if window is not None:
        (lo, hi) = window
        ii = (ns >= lo) & (ns <= hi)
        (ns, values) = (ns[ii], values[ii])
    if ns.shape[0] < 10:
        raise ValueError(f"fit_rate requires at least 10 points, got "
                         f"{ns.shape[0]}")
    if np.any(values <= 0) or np.any(ns <= 0):
        raise ValueError("fit_rate requires positive n and values")
    res = linregress(np.log(ns), np.log(values))
    return RateFit(float(res.slope), float(res.stderr), float(res.intercept),
                   int(ns.shape[0]))

def log_grid(horizon, points_per_decade=20, start=10):
    """Returns the sorted integer iterations spaced logarithmically between
    `start` and `horizon`."""
    m = max(2, int(math.ceil(math.log10(horizon / start) * points_per_decade)) + 1)
    return np.unique(np.round(np.geomspace(start, horizon, m)).astype(np.int64))

def _binned_means(flags, edges):
    # Means of `flags` over [edges[i], edges[i+1]) in 1-based iterations.
    cs = np.concatenate([[0.0], np.cumsum(flags)])
    lo = edges[:-1] - 1
    hi = edges[1:] - 1
    return (cs[hi] - cs[lo]) / (hi - lo)

def _instance_rates(spec, index, sigma, oracle_dir=None):
    inst = generate_instance(spec, index).with_noise(sigma)
    oracle = instance_oracle(spec, inst, index, oracle_dir)
    truth = Truth.of(inst, oracle)
    grid = log_grid(spec.rate_horizon)
    (_, bench) = run_known_costs(inst, spec.sa_alpha, spec.rate_horizon,
                                 trace_every=spec.rate_horizon, extra=grid,
                                 truth=truth)
    learner = Learner(inst, spec.learner_config(spec.schedules()[0]))
    tr = learner.run(spec.rate_horizon, truth=truth,
                     trace_every=spec.rate_horizon, extra=grid)
    pts = tr.points()
    return {"ns": tr.ns,
            "sa_delta2": np.array([p.delta_norm**2 for p in bench.points()]),
            "delta2": np.array([p.delta_norm**2 for p in pts]),
            "Delta2": np.array([p.Delta_max**2 for p in pts]),
            "pics": 1.0 - _binned_means(tr.correct_hat, grid),
            "incorrect": np.cumsum(1 - tr.correct)[tr.ns - 1]}

def rate_diagnostics(spec, sigma=None, jobs=None, oracle_dir=None,
                     fit_window=(1000, None)):
    """Fits the empirical convergence rates of a sweep.

    Runs the known-cost SA and the learner for `spec.rate_horizon` iterations
    on the first `spec.rate_instances` instances and returns a dict from
    series name to `RateFit`: `sa_delta2` and `delta2` (mean squared dual
    weight error), `Delta2` (mean squared largest coefficient error),
    `pics` (plug-in incorrect-selection probability, averaged over
    logarithmic bins; empty bins are left out), and `incorrect` (mean
    cumulative incorrect selections).
    """
    sigma = spec.noise_sigmas[0] if sigma is None else float(sigma)
    jobs = (os.cpu_count() or 1) if jobs is None else int(jobs)
    nn = min(spec.rate_instances, spec.n_instances)
    parts = _map(_instance_rates,
                 [(spec, ii, sigma, oracle_dir) for ii in range(nn)], jobs)
    grid = log_grid(spec.rate_horizon)
    (lo, hi) = fit_window
    hi = spec.rate_horizon if hi is None else hi
    fits = {}
    for name in ('sa_delta2', 'delta2', 'Delta2', 'pics', 'incorrect'):
        mean = np.mean([part[name] for part in parts], axis=0)
        ns = grid[:-1] if name == 'pics' else parts[0]["ns"]
        keep = mean > 0
        fits[name] = fit_rate(ns[keep], mean[keep], (lo, hi))
        logger.info("rate %s: slope %.3f +- %.3f", name, fits[name].slope,
                    fits[name].stderr)
    return fits

def write_rates_csv(fits, path):
    """Writes `series,slope,stderr,intercept,n_points` rows."""
    rows = ([name, f.slope, f.stderr, f.intercept, f.n_points]
            for (name, f) in fits.items())
    return write_csv(path, ['series', 'slope', 'stderr', 'intercept',
                            'n_points'], rows)

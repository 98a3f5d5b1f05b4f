# -*- coding: utf-8 -*-
################################################################################
# semiot/_voronoi.py
# Geographical partitioning: learning facility locations from noisy distance
# observations through a linearizing feature transform, and rasterizing the
# resulting additively weighted Voronoi partitions.

import json
import logging
import math
import os
from dataclasses import (dataclass, field)
from typing import NamedTuple

import numpy as np

from .abc import Persistent
from .util import (freeze, derive_seed, make_generator, write_csv)
from ._model import (INSTANCE_VERSION, CONTEXT_STREAM, NOISE_STREAM,
                     POLICY_STREAM, INSTANCE_STREAM, InstanceFormatError,
                     ContextSampler, NoiseModel)
from ._learner import (LearnerConfig, Learner)
from ._oracle import (Truth, solve_gstar_long_sa, score_run)

logger = logging.getLogger(__name__)


#===============================================================================
# The feature transform

def transform_features(U):
    """Returns the features `(1, -2 u_1, -2 u_2)` of a location or of each row
    of an `n x 2` array of locations."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        return np.array([1.0, -2.0 * U[0], -2.0 * U[1]])
    out = np.empty((U.shape[0], 3))
    out[:, 0] = 1.0
    out[:, 1:] = -2.0 * U
    return out

def transform_observation(x, w):
    """Returns `(features, response)` for a distance observation `w` made at
    location `x`: the features are `(1, -2 x_1, -2 x_2)` and the response is
    `w^2 - (x_1^2 + x_2^2)`."""
    x = np.asarray(x, dtype=float)
    return (transform_features(x), float(w)**2 - float(x @ x))

def facility_beta(locations, sigma=0.0):
    """Returns the `K x 3` coefficient matrix `[sigma^2 + |x_k|^2, x_k]` of the
    transformed linear model."""
    X = np.atleast_2d(np.asarray(locations, dtype=float))
    return np.column_stack([sigma**2 + np.sum(X**2, axis=1), X])

def extract_location(beta_hat, sigma=0.0):
    """Returns `(x_hat, intercept_residual)` for an estimated coefficient
    vector: `x_hat` is its last two entries and the residual is
    `beta_hat[0] - (sigma^2 + |x_hat|^2)`."""
    b = np.asarray(beta_hat, dtype=float)
    x_hat = np.array(b[1:3])
    return (x_hat, float(b[0] - (sigma**2 + x_hat @ x_hat)))


#===============================================================================
# FacilityCostModel

class FacilityCostModel(Persistent):
    """The costs of serving locations in the unit square from `K` facilities.

    `metric='distance'` gives the Euclidean distances `|u - x_k|`;
    `metric='linear'` gives the transformed linear costs `features(u) @
    beta[k]`, which equal `|u - x_k|^2 - |u|^2 + sigma^2` when `beta` is the
    true coefficient matrix. Costs are evaluated at raw locations `u`.
    """
    __slots__ = ('beta', 'metric')
    _fields = ('beta', 'metric')
    metrics = ('linear', 'distance')
    def __new__(cls, locations, sigma=0.0, metric='linear'):
        return cls.from_beta(facility_beta(locations, sigma), metric)
    @classmethod
    def from_beta(cls, beta, metric='linear'):
        """Returns the model with a given (true or estimated) `K x 3`
        coefficient matrix."""
        if metric not in cls.metrics:
            raise ValueError(f"unknown metric {metric!r}")
        beta = np.atleast_2d(np.asarray(beta, dtype=float))
        if beta.shape[1] != 3:
            raise ValueError(f"facility coefficients must be K x 3, got "
                             f"{beta.shape}")
        obj = object.__new__(cls)
        object.__setattr__(obj, 'beta', freeze(beta))
        object.__setattr__(obj, 'metric', metric)
        return obj
    @property
    def K(self):
        return self.beta.shape[0]
    @property
    def locations(self):
        return self.beta[:, 1:]
    def costs(self, u):
        u = np.asarray(u, dtype=float)
        if self.metric == 'distance':
            return np.linalg.norm(self.locations - u, axis=1)
        return self.beta @ transform_features(u)
    def costs_many(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        if self.metric == 'distance':
            return np.linalg.norm(U[:, None, :] - self.locations[None, :, :],
                                  axis=2)
        return transform_features(U) @ self.beta.T
    def transient(self):
        return np.array(self.beta)

def weighted_sqdist_decide(locations, g, U):
    """Returns `argmin_k |u - x_k|^2 - g_k` at each row of `U` (smallest index
    on ties)."""
    L = np.asarray(locations, dtype=float)
    U = np.atleast_2d(np.asarray(U, dtype=float))
    D = np.sum((U[:, None, :] - L[None, :, :])**2, axis=2)
    return np.argmin(D - np.asarray(g, dtype=float), axis=1)


#===============================================================================
# FacilityInstance

class ProblemView(NamedTuple):
    """A facility instance seen as a known-cost problem under one metric."""
    K: int
    p: np.ndarray
    costs: FacilityCostModel
    sampler: ContextSampler
    seed: int

class FacilityInstance(Persistent):
    """A partitioning problem: `K` facilities at `locations` in the unit
    square, target proportions `p`, users uniform on the square, and Gaussian
    noise of standard deviation `sigma` on observed distances.

    To a learner the instance is a linear problem in the features
    `(1, -2 u_1, -2 u_2)`; `observe(k, u, eps)` returns the response
    `(|u - x_k| + eps)^2 - |u|^2`.
    """
    __slots__ = ('locations', 'p', 'sampler', 'noise', 'seed')
    _fields = ('locations', 'p', 'sampler', 'noise', 'seed')
    ptol = 1e-12
    def __new__(cls, locations, p, sampler=None, noise=None, seed=0):
        L = np.atleast_2d(np.asarray(locations, dtype=float))
        if L.ndim != 2 or L.shape[1] != 2:
            raise ValueError(f"locations must be K x 2, got {L.shape}")
        if np.any(L < 0) or np.any(L > 1):
            raise ValueError("facilities must lie in the unit square")
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape[0] != L.shape[0]:
            raise ValueError(f"p has {p.shape[0]} entries for {L.shape[0]} "
                             f"facilities")
        if not np.all(p > 0) or abs(float(np.sum(p)) - 1.0) > cls.ptol:
            raise ValueError("p must be positive and sum to 1")
        seed = int(seed)
        if sampler is None:
            sampler = ContextSampler.box(2, derive_seed(seed, CONTEXT_STREAM))
        if sampler.d != 2:
            raise ValueError("facility samplers must be 2-dimensional")
        if noise is None:
            noise = NoiseModel.gaussian(0.02, derive_seed(seed, NOISE_STREAM))
        obj = object.__new__(cls)
        object.__setattr__(obj, 'locations', freeze(L))
        object.__setattr__(obj, 'p', freeze(p))
        object.__setattr__(obj, 'sampler', sampler)
        object.__setattr__(obj, 'noise', noise)
        object.__setattr__(obj, 'seed', seed)
        return obj
    @property
    def K(self):
        return self.locations.shape[0]
    @property
    def d(self):
        return 3
    @property
    def sigma(self):
        return self.noise.sigma
    @property
    def beta(self):
        """The true coefficients of the transformed linear model."""
        return facility_beta(self.locations, self.sigma)
    @property
    def costs(self):
        """The transformed linear costs (the learner's cost model)."""
        return FacilityCostModel(self.locations, self.sigma, 'linear')
    @property
    def distances(self):
        return FacilityCostModel(self.locations, self.sigma, 'distance')
    @property
    def policy_seed(self):
        return derive_seed(self.seed, POLICY_STREAM)
    def view(self, metric='linear'):
        """Returns the known-cost problem of the instance under `metric`."""
        costs = self.costs if metric == 'linear' else self.distances
        return ProblemView(self.K, self.p, costs, self.sampler, self.seed)
    def features(self, u):
        return transform_features(u)
    def observe(self, k, u, eps):
        w = math.hypot(u[0] - self.locations[k, 0],
                       u[1] - self.locations[k, 1]) + eps
        return w * w - float(u[0] * u[0] + u[1] * u[1])
    def reseed(self, seed):
        seed = int(seed)
        return self.set(
            sampler=self.sampler.set(seed=derive_seed(seed, CONTEXT_STREAM)),
            noise=self.noise.set(seed=derive_seed(seed, NOISE_STREAM)),
            seed=seed)
    def with_noise(self, sigma):
        kind = 'gaussian' if sigma > 0 else 'none'
        return self.set(noise=NoiseModel(kind, sigma, self.noise.seed))
    def transient(self):
        return self.sampler.stream()
    def to_json(self):
        return {"version": INSTANCE_VERSION,
                "kind": "facility",
                "K": self.K,
                "locations": self.locations.tolist(),
                "p": self.p.tolist(),
                "sampler": self.sampler.to_json(),
                "noise": self.noise.to_json(),
                "seed": self.seed}
    @classmethod
    def from_json(cls, doc):
        """Builds an instance from a `semiot-instance-v1` document of kind
        `'facility'`; raises `InstanceFormatError` if it is malformed."""
        if not isinstance(doc, dict) or doc.get("version") != INSTANCE_VERSION:
            raise InstanceFormatError("not a semiot-instance-v1 document")
        if doc.get("kind") != "facility":
            raise InstanceFormatError("not a facility instance")
        try:
            seed = int(doc.get("seed", 0))
            sampler = ContextSampler.from_json(
                doc.get("sampler", {"kind": "box"}), 2,
                derive_seed(seed, CONTEXT_STREAM))
            noise = NoiseModel.from_json(
                doc.get("noise", {"kind": "gaussian", "sigma": 0.02}),
                derive_seed(seed, NOISE_STREAM))
            inst = cls(doc["locations"], doc["p"], sampler, noise, seed)
        except (KeyError, TypeError, ValueError) as e:
            raise InstanceFormatError(f"malformed facility instance: {e}") from e
        if "K" in doc and int(doc["K"]) != inst.K:
            raise InstanceFormatError("K does not match the locations")
        return inst

def load_facility_instance(path):
    try:
        with open(path, 'rt', encoding='utf-8') as fl:
            doc = json.load(fl)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"{path}: invalid JSON: {e}") from e
    return FacilityInstance.from_json(doc)

def save_facility_instance(instance, path):
    with open(path, 'wt', encoding='utf-8') as fl:
        json.dump(instance.to_json(), fl, indent=2, sort_keys=True)
        fl.write('\n')
    return path

def generate_facility_instance(K=4, seed=0, min_separation=0.25, p=None,
                               sigma=0.02, margin=0.05, max_tries=10_000):
    """Returns a facility instance with `K` locations drawn uniformly from
    `[margin, 1 - margin]^2` and pairwise at least `min_separation` apart.

    `p` defaults to equal proportions. Raises `ValueError` if no valid
    placement is found in `max_tries` draws.
    """
    K = int(K)
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    rng = make_generator(seed, INSTANCE_STREAM)
    locs = []
    tries = 0
    while len(locs) < K:
        if tries >= max_tries:
            raise ValueError(f"could not place {K} facilities {min_separation}"
                             f" apart")
        tries += 1
        u = rng.uniform(margin, 1.0 - margin, 2)
        if all(np.linalg.norm(u - v) >= min_separation for v in locs):
            locs.append(u)
    p = np.full(K, 1.0 / K) if p is None else np.asarray(p, dtype=float)
    kind = 'gaussian' if sigma > 0 else 'none'
    return FacilityInstance(np.array(locs), p,
                            ContextSampler.box(2, derive_seed(seed, CONTEXT_STREAM)),
                            NoiseModel(kind, sigma, derive_seed(seed, NOISE_STREAM)),
                            seed)


#===============================================================================
# Learning

@dataclass(frozen=True)
class VoronoiConfig:
    """Settings of the partitioning study.

    The learner settings match the synthetic study. `checkpoints` lists the
    iterations at which learned partitions are rasterized (the horizon is
    always included); `window` is the number of final iterations over which
    the reported PCS is averaged.
    """
    horizon: int = 100_000
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    resolution: int = 512
    checkpoints: tuple = (10_000,)
    window: int = 10_000
    oracle_iters: int = 1_000_000
    oracle_tol: float = 0.03
    def __post_init__(self):
        if int(self.horizon) < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if int(self.resolution) < 16:
            raise ValueError(f"resolution must be >= 16, got {self.resolution}")
        object.__setattr__(self, 'checkpoints', tuple(
            sorted(set(int(n) for n in self.checkpoints
                       if 1 <= int(n) <= self.horizon) | {int(self.horizon)})))
    @classmethod
    def paper(cls, **kw):
        return cls(**dict(dict(horizon=1_000_000, oracle_iters=10_000_000,
                               oracle_tol=0.01), **kw))

def truths(instance, oracle_iters=1_000_000, tol=0.03, alpha=50.0):
    """Returns `(linear, distance)`: the `Truth` of the transformed linear
    costs (with the true coefficients) and of the Euclidean distances."""
    lin = solve_gstar_long_sa(instance.view('linear'), oracle_iters,
                              alpha=alpha, tol=tol)
    dist = solve_gstar_long_sa(instance.view('distance'), oracle_iters,
                               alpha=alpha, tol=tol)
    return (Truth(instance.costs, lin.g_star.g, instance.beta),
            Truth(instance.distances, dist.g_star.g, None))

def run_partition_learning(instance, horizon=None, config=None, truth=None):
    """Runs the learner on a facility instance and returns `(state, trace)`.

    Decisions use the transformed linear costs of the current estimates.
    Trace points (with `g` and the estimates) are recorded at the configured
    checkpoints. `truth` scores the run as in `Learner.run`.
    """
    config = VoronoiConfig() if config is None else config
    horizon = config.horizon if horizon is None else int(horizon)
    learner = Learner(instance, config.learner)
    trace = learner.run(horizon, truth=truth, trace_every=horizon,
                        extra=config.checkpoints)
    return (learner.persistent(), trace)


#===============================================================================
# Rasterization

def grid_centers(resolution):
    """Returns the `resolution^2 x 2` array of cell centers, row-major with
    row 0 at the top of the square."""
    r = int(resolution)
    c = (np.arange(r) + 0.5) / r
    (yy, xx) = np.meshgrid(c[::-1], c, indexing='ij')
    return np.column_stack([xx.ravel(), yy.ravel()])

def rasterize_partition(model, g, resolution=512, rows_per_block=64):
    """Returns the `resolution x resolution` integer grid whose cell `(i, j)`
    holds the alternative chosen at the cell center under `model` and `g`.

    `model` is any cost model with `K` and `costs_many` on raw locations.
    Row 0 is the top of the unit square.
    """
    r = int(resolution)
    if r < 16:
        raise ValueError(f"resolution must be >= 16, got {r}")
    g = np.asarray(g, dtype=float)
    U = grid_centers(r)
    out = np.empty(r * r, dtype=np.int32)
    step = rows_per_block * r
    for start in range(0, r * r, step):
        C = model.costs_many(U[start:start + step])
        out[start:start + step] = np.argmin(C - g, axis=1)
    return out.reshape(r, r)

def hamming_fraction(a, b):
    """The fraction of cells on which two partitions disagree."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"grid shapes differ: {a.shape} and {b.shape}")
    return float(np.mean(a != b))

def write_pgm(grid, path, K):
    """Writes a partition as a binary (P5) PGM with alternative `k` drawn at
    gray level `round(255 k / (K - 1))`."""
    grid = np.asarray(grid)
    (h, w) = grid.shape
    scale = 0.0 if K <= 1 else 255.0 / (K - 1)
    px = np.round(grid * scale).astype(np.uint8)
    with open(path, 'wb') as fl:
        fl.write(f"P5\n{w} {h}\n255\n".encode('ascii'))
        fl.write(px.tobytes())
    return path

def write_partition_csv(grid, path):
    """Writes `row,col,x,y,k` rows (1-based alternatives), row 0 at the
    top."""
    grid = np.asarray(grid)
    r = grid.shape[0]
    U = grid_centers(r)
    rows = ([ii // r, ii % r, float(U[ii, 0]), float(U[ii, 1]),
             int(k) + 1] for (ii, k) in enumerate(grid.ravel()))
    return write_csv(path, ['row', 'col', 'x', 'y', 'k'], rows)

def location_errors(trace, instance):
    """Returns `[n, k, x_hat_1, x_hat_2, error, intercept_residual]` rows for
    every trace point and facility (1-based `k`)."""
    rows = []
    for pt in trace.points():
        for k in range(instance.K):
            (xh, res) = extract_location(pt.beta_hat[k], instance.sigma)
            err = float(np.linalg.norm(xh - instance.locations[k]))
            rows.append([pt.n, k + 1, float(xh[0]), float(xh[1]), err, res])
    return rows


#===============================================================================
# The partitioning study

def partition_study(instance, config, out_dir):
    """Learns the partition of a facility instance and writes the outputs.

    Writes `true.pgm` and `true.csv` (transformed linear costs at their
    oracle weights), `true_distance.pgm` (Euclidean distances at theirs),
    `learned_<n>.pgm` and `learned_<n>.csv` per checkpoint, `locations.csv`,
    and `summary.csv`. Returns the summary as a dict.
    """
    os.makedirs(out_dir, exist_ok=True)
    (lin, dist) = truths(instance, config.oracle_iters, config.oracle_tol,
                         config.learner.sa_alpha)
    res = config.resolution
    true_grid = rasterize_partition(lin.model, lin.g_star, res)
    write_pgm(true_grid, os.path.join(out_dir, 'true.pgm'), instance.K)
    write_partition_csv(true_grid, os.path.join(out_dir, 'true.csv'))
    write_pgm(rasterize_partition(dist.model, dist.g_star, res),
              os.path.join(out_dir, 'true_distance.pgm'), instance.K)
    (state, trace) = run_partition_learning(instance, config=config, truth=lin)
    summary = {}
    for pt in trace.points():
        if pt.n not in config.checkpoints:
            continue
        model = FacilityCostModel.from_beta(pt.beta_hat)
        grid = rasterize_partition(model, pt.g, res)
        write_pgm(grid, os.path.join(out_dir, f'learned_{pt.n}.pgm'),
                  instance.K)
        write_partition_csv(grid, os.path.join(out_dir, f'learned_{pt.n}.csv'))
        summary[f'hamming_{pt.n}'] = hamming_fraction(grid, true_grid)
    write_csv(os.path.join(out_dir, 'locations.csv'),
              ['n', 'k', 'x_hat_1', 'x_hat_2', 'error', 'intercept_residual'],
              location_errors(trace, instance))
    w = min(config.window, len(trace))
    summary['pcs_linear'] = float(np.mean(trace.correct_hat[-w:]))
    summary['pcs_distance'] = score_run(trace, dist, w).terminal_pcs()
    summary['Delta_max'] = float(np.max(np.linalg.norm(
        state.beta_hat - instance.beta, axis=1)))
    write_csv(os.path.join(out_dir, 'summary.csv'), ['metric', 'value'],
              sorted(summary.items()))
    logger.info("partition study: pcs %.4f (linear), %.4f (distance)",
                summary['pcs_linear'], summary['pcs_distance'])
    return summary

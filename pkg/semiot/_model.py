# -*- coding: utf-8 -*-
################################################################################
# semiot/_model.py
# Problem definitions, cost evaluation, the decision rule, and seeded context
# and noise streams.

import json
import math
from numbers import Integral

import numpy as np

from .abc import Persistent
from .util import (
    freeze,
    derive_seed,
    make_generator,
    generator_state,
    restore_generator)


INSTANCE_VERSION = "semiot-instance-v1"

# Stream numbers used to derive the sampler, noise, and exploration seeds from
# an instance seed.
CONTEXT_STREAM = 0
NOISE_STREAM = 1
POLICY_STREAM = 2
# Stream number of the random instance parameters of generated instances.
INSTANCE_STREAM = 3


class InstanceFormatError(ValueError):
    """Raised when an instance or configuration document is malformed."""


#===============================================================================
# Linear Cost Model and Dual Weights

class LinearCostModel(Persistent):
    """A linear cost model `c(x, k) = beta[k] @ x`.

    `LinearCostModel(beta)` takes a `K x d` matrix whose row `k` holds the
    coefficient vector of alternative `k` (0-based).
    """
    __slots__ = ('beta',)
    _fields = ('beta',)
    def __new__(cls, beta):
        if isinstance(beta, LinearCostModel):
            return beta
        b = np.array(beta, dtype=float)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise ValueError(f"beta must be a non-empty K x d matrix, got "
                             f"shape {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("beta must be finite")
        obj = object.__new__(cls)
        object.__setattr__(obj, 'beta', freeze(b))
        return obj
    @property
    def K(self):
        return self.beta.shape[0]
    @property
    def d(self):
        return self.beta.shape[1]
    def costs(self, x):
        """Returns the vector of costs of all alternatives at context `x`."""
        return self.beta @ x
    def costs_many(self, X):
        """Returns the `n x K` matrix of costs at the rows of `X`."""
        return np.asarray(X, dtype=float) @ self.beta.T
    def transient(self):
        return np.array(self.beta)
    @classmethod
    def zeros(cls, K, d):
        return cls(np.zeros((K, d)))

class DualWeights(Persistent):
    """The vector `g` of per-alternative bonuses subtracted from the costs.

    `DualWeights(g)` accepts any length-`K` sequence of finite reals.
    """
    __slots__ = ('g',)
    _fields = ('g',)
    def __new__(cls, g):
        if isinstance(g, DualWeights):
            return g
        arr = np.array(g, dtype=float).reshape(-1)
        if arr.shape[0] < 1:
            raise ValueError("dual weights must have at least one entry")
        if not np.all(np.isfinite(arr)):
            raise ValueError("dual weights must be finite")
        obj = object.__new__(cls)
        object.__setattr__(obj, 'g', freeze(arr))
        return obj
    @classmethod
    def zeros(cls, K):
        return cls(np.zeros(K))
    @property
    def K(self):
        return self.g.shape[0]
    def __len__(self):
        return self.g.shape[0]
    def __array__(self, dtype=None, copy=None):
        return np.array(self.g, dtype=dtype)
    def normalized(self):
        """Returns the weights shifted so that the first entry is exactly 0."""
        return DualWeights(self.g - self.g[0])
    def transient(self):
        return np.array(self.g)

def _weights(g, K):
    g = g.g if isinstance(g, DualWeights) else np.asarray(g, dtype=float)
    if g.shape != (K,):
        raise ValueError(f"dual weights must have {K} entries, got {g.shape}")
    return g


#===============================================================================
# Cost evaluation and the decision rule

def evaluate_cost(model, x, k):
    """Returns the cost `beta[k] @ x` of alternative `k` at context `x`.

    Raises an `IndexError` if `k` is not a valid 0-based alternative index.
    """
    if not isinstance(k, Integral) or isinstance(k, bool):
        raise TypeError(f"alternative index must be an integer, not {type(k)}")
    if k < 0 or k >= model.K:
        raise IndexError(f"alternative index {k} out of range for K={model.K}")
    return float(model.beta[k] @ np.asarray(x, dtype=float))

def decide(model, g, x):
    """Returns the alternative minimizing `beta[j] @ x - g[j]`.

    Ties are broken in favor of the smallest index.
    """
    g = _weights(g, model.K)
    return int(np.argmin(model.beta @ np.asarray(x, dtype=float) - g))

def decide_many(model, g, X):
    """Vectorized `decide` over the rows of `X`; returns an integer array."""
    g = _weights(g, model.K)
    return np.argmin(model.costs_many(X) - g, axis=1)

def dual_objective_sample(model, g, x):
    """Returns `F(g, x) = min_j beta[j] @ x - g[j]`."""
    g = _weights(g, model.K)
    return float(np.min(model.beta @ np.asarray(x, dtype=float) - g))

def dual_objective(model, g, p, contexts):
    """Returns the Monte Carlo estimate `mean_i F(g, X_i) + p @ g` of the dual
    objective over the rows of `contexts`."""
    g = _weights(g, model.K)
    F = np.min(model.costs_many(contexts) - g, axis=1)
    return float(np.mean(F) + np.asarray(p, dtype=float) @ g)

def estimate_assignment_probs(model, g, sampler, n_samples, chunk=65536):
    """Returns the Monte Carlo estimate of `P(decide(model, g, X) = k)`.

    `sampler` may be a `ContextSampler` (a fresh stream is opened) or an open
    `ContextStream` (which is advanced by `n_samples` draws).
    """
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    g = _weights(g, model.K)
    stream = sampler.stream() if isinstance(sampler, ContextSampler) else sampler
    counts = np.zeros(model.K, dtype=np.int64)
    left = n_samples
    while left > 0:
        m = min(chunk, left)
        ks = decide_many(model, g, stream.draw_many(m))
        counts += np.bincount(ks, minlength=model.K)
        left -= m
    return counts / n_samples


#===============================================================================
# Context Samplers and Streams

class ContextSampler(Persistent):
    """A seeded description of the context distribution.

    `kind` is one of `'sphere'` (uniform on the unit sphere in `R^d`), `'box'`
    (uniform on `[0,1]^d`), or `'array'` (the rows of a user-supplied array,
    in order). Identical samplers always produce bit-identical streams.
    """
    __slots__ = ('kind', 'd', 'seed', 'data')
    _fields = ('kind', 'd', 'seed', 'data')
    kinds = ('sphere', 'box', 'array')
    def __new__(cls, kind, d, seed=0, data=None):
        if kind not in cls.kinds:
            raise ValueError(f"unknown sampler kind {kind!r}")
        d = int(d)
        if d < 1:
            raise ValueError(f"context dimension must be positive, got {d}")
        if kind == 'array':
            if data is None:
                raise ValueError("array samplers require data")
            data = freeze(np.atleast_2d(np.asarray(data, dtype=float)))
            if data.shape[1] != d:
                raise ValueError(f"sampler data must have {d} columns")
        else:
            data = None
        obj = object.__new__(cls)
        object.__setattr__(obj, 'kind', kind)
        object.__setattr__(obj, 'd', d)
        object.__setattr__(obj, 'seed', int(seed))
        object.__setattr__(obj, 'data', data)
        return obj
    @classmethod
    def sphere(cls, d, seed=0):
        return cls('sphere', d, seed)
    @classmethod
    def box(cls, d, seed=0):
        return cls('box', d, seed)
    @classmethod
    def from_array(cls, data):
        data = np.atleast_2d(np.asarray(data, dtype=float))
        return cls('array', data.shape[1], 0, data)
    def stream(self):
        """Opens a new `ContextStream` at the start of the sequence."""
        return ContextStream(self)
    def transient(self):
        return self.stream()
    def sample(self, n):
        """Returns the first `n` contexts of the sequence as an `n x d`
        array."""
        return self.stream().draw_many(n)
    def to_json(self):
        if self.kind == 'array':
            return {"kind": "array", "d": self.d, "data": self.data.tolist()}
        return {"kind": self.kind, "d": self.d, "seed": self.seed}
    @classmethod
    def from_json(cls, doc, d=None, seed=0):
        """Builds a sampler from its JSON form; `d` and `seed` fill in missing
        entries."""
        if doc["kind"] == "array":
            return cls.from_array(doc["data"])
        return cls(doc["kind"], doc.get("d", d), doc.get("seed", seed))

class ContextStream:
    """A single-owner cursor over the contexts of a `ContextSampler`.

    Contexts are generated in blocks of `block` rows; the sequence does not
    depend on how draws are interleaved between `draw` and `draw_many`.
    """
    block = 1024
    __slots__ = ('sampler', 'count', '_gen', '_buf', '_pos', '_block_state')
    def __init__(self, sampler):
        self.sampler = sampler
        self.count = 0
        self._gen = (None if sampler.kind == 'array' else
                     make_generator(sampler.seed, CONTEXT_STREAM))
        self._buf = np.empty((0, sampler.d))
        self._pos = 0
        self._block_state = None
    def _refill(self):
        s = self.sampler
        if s.kind == 'array':
            if self._buf.shape[0] > 0:
                raise IndexError("user-supplied context stream exhausted")
            self._buf = s.data
            self._pos = 0
            return
        self._block_state = generator_state(self._gen)
        if s.kind == 'sphere':
            z = self._gen.standard_normal((self.block, s.d))
            z /= np.linalg.norm(z, axis=1, keepdims=True)
        else:
            z = self._gen.random((self.block, s.d))
        z.flags.writeable = False
        self._buf = z
        self._pos = 0
    def draw(self):
        """Returns the next context (a read-only length-`d` array)."""
        if self._pos >= self._buf.shape[0]:
            self._refill()
        x = self._buf[self._pos]
        self._pos += 1
        self.count += 1
        return x
    def draw_many(self, n):
        """Returns the next `n` contexts as an `n x d` array."""
        n = int(n)
        parts = []
        while n > 0:
            if self._pos >= self._buf.shape[0]:
                self._refill()
            m = min(n, self._buf.shape[0] - self._pos)
            parts.append(self._buf[self._pos:self._pos + m])
            self._pos += m
            self.count += m
            n -= m
        if len(parts) == 0:
            return np.empty((0, self.sampler.d))
        return np.concatenate(parts, axis=0)
    def state(self):
        """Returns a JSON-compatible snapshot of the cursor position."""
        return {"count": self.count,
                "pos": self._pos,
                "block_state": self._block_state}
    @classmethod
    def from_state(cls, sampler, state):
        """Reopens a stream of `sampler` at a position saved by `state()`."""
        s = cls(sampler)
        s.count = int(state["count"])
        if sampler.kind == 'array':
            if s.count > 0:
                s._buf = sampler.data
                s._pos = int(state["pos"])
        elif state["block_state"] is not None:
            s._gen = restore_generator(state["block_state"])
            s._refill()
            s._pos = int(state["pos"])
        return s


#===============================================================================
# Noise Models and Streams

class NoiseModel(Persistent):
    """A seeded description of the observation noise: `'gaussian'` with
    standard deviation `sigma`, or `'none'`."""
    __slots__ = ('kind', 'sigma', 'seed')
    _fields = ('kind', 'sigma', 'seed')
    kinds = ('gaussian', 'none')
    def __new__(cls, kind='gaussian', sigma=0.0, seed=0):
        if kind not in cls.kinds:
            raise ValueError(f"unknown noise kind {kind!r}")
        sigma = float(sigma)
        if not math.isfinite(sigma) or sigma < 0:
            raise ValueError(f"noise sigma must be finite and >= 0: {sigma}")
        if kind == 'none':
            sigma = 0.0
        obj = object.__new__(cls)
        object.__setattr__(obj, 'kind', kind)
        object.__setattr__(obj, 'sigma', sigma)
        object.__setattr__(obj, 'seed', int(seed))
        return obj
    @classmethod
    def gaussian(cls, sigma, seed=0):
        return cls('gaussian', sigma, seed)
    @classmethod
    def none(cls):
        return cls('none')
    @property
    def variance(self):
        return self.sigma * self.sigma
    def stream(self):
        return NoiseStream(self)
    def transient(self):
        return self.stream()
    def to_json(self):
        return {"kind": self.kind, "sigma": self.sigma, "seed": self.seed}
    @classmethod
    def from_json(cls, doc, seed=0):
        return cls(doc["kind"], doc.get("sigma", 0.0), doc.get("seed", seed))

class NoiseStream:
    """A single-owner cursor over the noise draws of a `NoiseModel`."""
    block = 1024
    __slots__ = ('noise', 'count', '_gen', '_buf', '_pos', '_block_state')
    def __init__(self, noise):
        self.noise = noise
        self.count = 0
        self._gen = (None if noise.kind == 'none' else
                     make_generator(noise.seed, NOISE_STREAM))
        self._buf = np.empty(0)
        self._pos = 0
        self._block_state = None
    def _refill(self):
        self._block_state = generator_state(self._gen)
        self._buf = self.noise.sigma * self._gen.standard_normal(self.block)
        self._pos = 0
    def draw(self):
        """Returns the next noise value."""
        self.count += 1
        if self._gen is None:
            return 0.0
        if self._pos >= self._buf.shape[0]:
            self._refill()
        e = self._buf[self._pos]
        self._pos += 1
        return float(e)
    def state(self):
        return {"count": self.count,
                "pos": self._pos,
                "block_state": self._block_state}
    @classmethod
    def from_state(cls, noise, state):
        s = cls(noise)
        s.count = int(state["count"])
        if s._gen is not None and state["block_state"] is not None:
            s._gen = restore_generator(state["block_state"])
            s._refill()
            s._pos = int(state["pos"])
        return s


#===============================================================================
# Transport Instances

class TransportInstance(Persistent):
    """A semidiscrete transport problem with linear costs.

    `TransportInstance(p, costs, sampler, noise, seed=0)` bundles the target
    proportions `p` (length `K`, positive, summing to 1), the true
    `LinearCostModel`, the `ContextSampler`, and the `NoiseModel`.
    """
    __slots__ = ('d', 'K', 'p', 'costs', 'sampler', 'noise', 'seed')
    _fields = ('d', 'K', 'p', 'costs', 'sampler', 'noise', 'seed')
    ptol = 1e-12
    def __new__(cls, p, costs, sampler, noise=None, seed=0):
        costs = LinearCostModel(costs)
        p = np.array(p, dtype=float).reshape(-1)
        (K, d) = costs.beta.shape
        if p.shape[0] != K:
            raise ValueError(f"p has {p.shape[0]} entries but costs has K={K}")
        if not np.all(p > 0):
            raise ValueError("target proportions must be positive")
        if abs(float(np.sum(p)) - 1.0) > cls.ptol:
            raise ValueError(f"target proportions must sum to 1, got "
                             f"{float(np.sum(p))!r}")
        if not isinstance(sampler, ContextSampler):
            raise TypeError("sampler must be a ContextSampler")
        if sampler.d != d:
            raise ValueError(f"sampler dimension {sampler.d} != d={d}")
        if noise is None:
            noise = NoiseModel.none()
        obj = object.__new__(cls)
        object.__setattr__(obj, 'd', d)
        object.__setattr__(obj, 'K', K)
        object.__setattr__(obj, 'p', freeze(p))
        object.__setattr__(obj, 'costs', costs)
        object.__setattr__(obj, 'sampler', sampler)
        object.__setattr__(obj, 'noise', noise)
        object.__setattr__(obj, 'seed', int(seed))
        return obj
    @classmethod
    def seeded(cls, p, beta, sampler_kind='sphere', sigma=0.0, seed=0):
        """Builds an instance whose context and noise seeds are derived from
        the single seed `seed`."""
        beta = np.asarray(beta, dtype=float)
        sampler = ContextSampler(sampler_kind, beta.shape[1],
                                 derive_seed(seed, CONTEXT_STREAM))
        kind = 'gaussian' if sigma > 0 else 'none'
        noise = NoiseModel(kind, sigma, derive_seed(seed, NOISE_STREAM))
        return cls(p, beta, sampler, noise, seed)
    @property
    def policy_seed(self):
        """The seed of the exploration stream of learners on this instance."""
        return derive_seed(self.seed, POLICY_STREAM)
    def reseed(self, seed):
        """Returns a copy with all stream seeds re-derived from `seed`."""
        seed = int(seed)
        sampler = self.sampler
        if sampler.kind != 'array':
            sampler = sampler.set(seed=derive_seed(seed, CONTEXT_STREAM))
        noise = self.noise.set(seed=derive_seed(seed, NOISE_STREAM))
        return self.set(sampler=sampler, noise=noise, seed=seed)
    def with_noise(self, sigma):
        """Returns a copy with Gaussian noise of standard deviation `sigma`;
        the context stream is left untouched."""
        kind = 'gaussian' if sigma > 0 else 'none'
        return self.set(noise=NoiseModel(kind, sigma, self.noise.seed))
    def features(self, x):
        """Returns the regression features of a raw context (the context
        itself for linear instances)."""
        return x
    def observe(self, k, x, eps):
        """Returns the observed cost `beta[k] @ x + eps` of alternative `k`."""
        return float(self.costs.beta[k] @ x) + eps
    def transient(self):
        return self.sampler.stream()
    def to_json(self):
        return {"version": INSTANCE_VERSION,
                "d": self.d,
                "K": self.K,
                "p": self.p.tolist(),
                "beta": self.costs.beta.tolist(),
                "sampler": self.sampler.to_json(),
                "noise": self.noise.to_json(),
                "seed": self.seed}
    @classmethod
    def from_json(cls, doc):
        """Builds an instance from a `semiot-instance-v1` document.

        Missing sampler and noise seeds are derived from the document seed.
        Raises `InstanceFormatError` if the document is malformed.
        """
        if not isinstance(doc, dict):
            raise InstanceFormatError("instance document must be an object")
        if doc.get("version") != INSTANCE_VERSION:
            raise InstanceFormatError(
                f"unsupported instance version {doc.get('version')!r}")
        try:
            seed = int(doc.get("seed", 0))
            beta = np.array(doc["beta"], dtype=float)
            p = np.array(doc["p"], dtype=float)
            if int(doc["d"]) != beta.shape[1] or int(doc["K"]) != beta.shape[0]:
                raise InstanceFormatError("d and K do not match beta's shape")
            sampler = ContextSampler.from_json(
                doc.get("sampler", {"kind": "sphere"}), beta.shape[1],
                derive_seed(seed, CONTEXT_STREAM))
            noise = NoiseModel.from_json(doc.get("noise", {"kind": "none"}),
                                         derive_seed(seed, NOISE_STREAM))
            return cls(p, beta, sampler, noise, seed)
        except InstanceFormatError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise InstanceFormatError(f"malformed instance document: {e}") from e

def load_instance(path):
    """Reads a `TransportInstance` from a JSON instance file."""
    try:
        with open(path, 'rt', encoding='utf-8') as fl:
            doc = json.load(fl)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"{path}: invalid JSON: {e}") from e
    return TransportInstance.from_json(doc)

def save_instance(instance, path):
    """Writes a `TransportInstance` to a JSON instance file."""
    with open(path, 'wt', encoding='utf-8') as fl:
        json.dump(instance.to_json(), fl, indent=2, sort_keys=True)
        fl.write('\n')
    return path

# -*- coding: utf-8 -*-
################################################################################
# semiot/_learner.py
# The online learner for unknown linear costs: semi-myopic selection, the dual
# weight update with estimated costs, and per-alternative ridge estimation.

import json
import logging
import math
from dataclasses import (dataclass, field)
from typing import (NamedTuple, Optional)

import numpy as np

from .abc import (Persistent, Transient)
from .util import (freeze, make_generator, generator_state, restore_generator)
from ._model import (POLICY_STREAM, ContextStream, NoiseStream)
from ._regression import (RidgePolicy, RidgeAccumulator, TransientAccumulator,
                          RLSState, TransientRLS, solve_beta)
from ._policy import (ExplorationSchedule, select)
from ._trace import (TracePoint, TransientTrace, trace_schedule)

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = "semiot-checkpoint-v1"


class CheckpointError(ValueError):
    """Raised when a learner checkpoint cannot be restored."""

class CheckpointVersionError(CheckpointError):
    """Raised when a checkpoint has a different format version or ridge mode
    than the one requested."""

class CorruptCheckpointError(CheckpointError):
    """Raised when a checkpoint is truncated or malformed."""


#===============================================================================
# Configuration

@dataclass(frozen=True)
class LearnerConfig:
    """Settings of the online learner.

    `sa_alpha` is the dual-weight stepsize constant; `schedule` decides when
    the policy explores; `ridge` is the regularization schedule. `g0` and
    `beta0` are the initial dual weights and cost estimates (zeros when
    `None`); an alternative keeps its `beta0` row until it is first
    observed.
    """
    sa_alpha: float = 50.0
    schedule: ExplorationSchedule = field(default_factory=ExplorationSchedule)
    ridge: RidgePolicy = field(default_factory=RidgePolicy)
    g0: Optional[tuple] = None
    beta0: Optional[tuple] = None
    def __post_init__(self):
        if not (self.sa_alpha > 0 and math.isfinite(self.sa_alpha)):
            raise ValueError(f"sa_alpha must be positive, got {self.sa_alpha}")
        if self.g0 is not None:
            object.__setattr__(self, 'g0',
                               tuple(float(u) for u in np.ravel(self.g0)))
        if self.beta0 is not None:
            object.__setattr__(self, 'beta0', tuple(
                tuple(float(u) for u in row) for row in np.atleast_2d(self.beta0)))
    def initial(self, K, d):
        """Returns writable copies of the initial `g` and `beta_hat`."""
        g = np.zeros(K) if self.g0 is None else np.array(self.g0)
        b = np.zeros((K, d)) if self.beta0 is None else np.array(self.beta0)
        if g.shape != (K,):
            raise ValueError(f"g0 has shape {g.shape}, expected ({K},)")
        if b.shape != (K, d):
            raise ValueError(f"beta0 has shape {b.shape}, expected ({K}, {d})")
        return (g, b)
    def to_json(self):
        return {"sa_alpha": self.sa_alpha,
                "schedule": {"mode": self.schedule.mode, "a": self.schedule.a},
                "ridge": {"mode": self.ridge.mode, "rho": self.ridge.rho},
                "g0": None if self.g0 is None else list(self.g0),
                "beta0": None if self.beta0 is None else [list(r) for r in self.beta0]}
    @classmethod
    def from_json(cls, doc):
        return cls(sa_alpha=float(doc["sa_alpha"]),
                   schedule=ExplorationSchedule(**doc["schedule"]),
                   ridge=RidgePolicy(**doc["ridge"]),
                   g0=doc.get("g0"),
                   beta0=doc.get("beta0"))


#===============================================================================
# LearnerState and StepRecord

class StepRecord(NamedTuple):
    """What happened at iteration `n`: the raw context `x`, its regression
    `features`, the selected alternative `pi`, the plug-in choice `pi_hat`,
    whether the selection was forced, and the observed cost `w`."""
    n: int
    x: np.ndarray
    features: np.ndarray
    pi: int
    pi_hat: int
    explored: bool
    w: float

class LearnerState(Persistent):
    """A snapshot of the learner after `n` iterations.

    `estimators` holds one `RidgeAccumulator` (growing rho schedule) or
    `RLSState` (constant rho) per alternative; `rho_used[k]` is the
    regularization with which `beta_hat[k]` was last solved. `streams` holds the
    JSON states of the context, noise and exploration streams.
    """
    __slots__ = ('n', 'g', 'beta_hat', 'rho_used', 'estimators', 'config',
                 'streams')
    _fields = ('n', 'g', 'beta_hat', 'rho_used', 'estimators', 'config',
               'streams')
    def __new__(cls, n, g, beta_hat, rho_used, estimators, config, streams):
        n = int(n)
        if n < 0:
            raise ValueError(f"iteration counter must be >= 0, got {n}")
        obj = object.__new__(cls)
        object.__setattr__(obj, 'n', n)
        object.__setattr__(obj, 'g', freeze(g))
        object.__setattr__(obj, 'beta_hat', freeze(beta_hat))
        object.__setattr__(obj, 'rho_used', freeze(rho_used))
        object.__setattr__(obj, 'estimators', tuple(estimators))
        object.__setattr__(obj, 'config', config)
        # Streams are stored as canonical JSON text so the state stays hashable.
        object.__setattr__(obj, 'streams',
                           streams if isinstance(streams, str) else
                           json.dumps(streams, sort_keys=True))
        return obj
    @property
    def K(self):
        return self.beta_hat.shape[0]
    @property
    def d(self):
        return self.beta_hat.shape[1]
    @property
    def counts(self):
        """The number of observations absorbed by each alternative."""
        return np.array([e.count for e in self.estimators], dtype=np.int64)
    def stream_states(self):
        return json.loads(self.streams)
    def rederive(self):
        """Re-solves every estimator with the regularization it last used and
        returns the resulting `K x d` matrix."""
        out = np.array(self.beta_hat)
        for (k,e) in enumerate(self.estimators):
            if e.count == 0:
                continue
            out[k] = e.beta if isinstance(e, RLSState) else \
                     solve_beta(e, self.rho_used[k])
        return out


#===============================================================================
# Learner

class Learner(Transient):
    """The single-owner, mutable online learner.

    `Learner(instance, config)` starts at `n = 0`. The instance supplies `K`,
    `p`, `sampler`, `noise`, `policy_seed`, and the methods `features(x)`
    and `observe(k, x, eps)`; the learner never reads the true costs.
    """
    __slots__ = ('instance', 'config', 'n', 'g', 'beta_hat', 'rho_used',
                 'estimators', '_ctx', '_noise', '_rng', '_p')
    def __init__(self, instance, config=None):
        config = LearnerConfig() if config is None else config
        self.instance = instance
        self.config = config
        d = _feature_dim(instance)
        K = instance.K
        (self.g, self.beta_hat) = config.initial(K, d)
        self.n = 0
        self.rho_used = np.full(K, config.ridge.rho_at(0))
        if config.ridge.mode == 'constant':
            self.estimators = [TransientRLS(d, config.ridge.rho)
                               for _ in range(K)]
        else:
            self.estimators = [TransientAccumulator(k, d) for k in range(K)]
        self._ctx = instance.sampler.stream()
        self._noise = instance.noise.stream()
        self._rng = make_generator(instance.policy_seed, POLICY_STREAM)
        self._p = np.asarray(instance.p, dtype=float)
    @classmethod
    def from_state(cls, instance, state):
        """Resumes a learner on `instance` from a `LearnerState`."""
        if state.K != instance.K or state.d != _feature_dim(instance):
            raise ValueError(f"state is {state.K} x {state.d} but the instance "
                             f"is {instance.K} x {_feature_dim(instance)}")
        obj = cls.__new__(cls)
        obj.instance = instance
        obj.config = state.config
        obj.n = state.n
        obj.g = np.array(state.g)
        obj.beta_hat = np.array(state.beta_hat)
        obj.rho_used = np.array(state.rho_used)
        obj.estimators = [e.transient() for e in state.estimators]
        streams = state.stream_states()
        obj._ctx = ContextStream.from_state(instance.sampler, streams["context"])
        obj._noise = NoiseStream.from_state(instance.noise, streams["noise"])
        obj._rng = restore_generator(streams["policy"])
        obj._p = np.asarray(instance.p, dtype=float)
        return obj
    def step(self):
        """Runs one iteration and returns its `StepRecord`."""
        n = self.n
        cfg = self.config
        x = self._ctx.draw()
        f = self.instance.features(x)
        g = self.g
        plugin = int(np.argmin(self.beta_hat @ f - g))
        (k, explored) = select(cfg.schedule, self.beta_hat, g, f, n,
                               rng=self._rng, plugin=plugin)
        # The dual update uses the plug-in choice even on forced steps.
        a = cfg.sa_alpha / (n + 1)
        g += a * self._p
        g[plugin] -= a
        w = self.instance.observe(k, x, self._noise.draw())
        if math.isfinite(w):
            est = self.estimators[k]
            est.update(f, w)
            rho = cfg.ridge.rho_at(n + 1)
            self.beta_hat[k] = est.solve(rho)
            self.rho_used[k] = rho
        else:
            logger.warning("non-finite observation at n=%d dropped", n + 1)
        self.n = n + 1
        return StepRecord(n + 1, x, f, k, plugin, explored, w)
    def run(self, horizon, truth=None, hooks=(), trace_every=None, extra=()):
        """Runs `horizon` iterations and returns their `RunTrace`.

        Each hook is called as `hook(learner, record)` after every step. If
        `truth` (a `Truth`) is given, the correct-selection columns and the
        error norms of the trace points are filled in.
        """
        horizon = int(horizon)
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        n0 = self.n
        stops = set(n0 + n for n in trace_schedule(horizon, trace_every,
                                                   extra=extra))
        trace = TransientTrace('learner', self.instance.K, self.g,
                               self.instance.sampler, capacity=horizon,
                               steps=True, truth=truth is not None, n0=n0)
        if truth is not None:
            tg = np.asarray(truth.g_star, dtype=float)
            tg = tg - tg[0]
            tbeta = None if truth.beta is None else \
                    np.asarray(truth.beta, dtype=float)
        for _ in range(horizon):
            rec = self.step()
            if truth is None:
                trace.record_step(rec.pi, rec.pi_hat, rec.explored)
            else:
                star = int(np.argmin(truth.model.costs(rec.x) - tg))
                trace.record_step(rec.pi, rec.pi_hat, rec.explored,
                                  rec.pi_hat == star, rec.pi == star)
            for hook in hooks:
                hook(self, rec)
            if rec.n in stops:
                (dn, dm) = (math.nan, math.nan)
                if truth is not None:
                    dn = float(np.linalg.norm(self.g - self.g[0] - tg))
                    if tbeta is not None:
                        dm = float(np.max(np.linalg.norm(self.beta_hat - tbeta,
                                                         axis=1)))
                trace.record_point(TracePoint(rec.n, self.g, self.beta_hat,
                                              dn, dm))
                logger.debug("learner n=%d delta_norm=%s Delta_max=%s",
                             rec.n, dn, dm)
        return trace.persistent()
    def persistent(self):
        streams = {"context": self._ctx.state(),
                   "noise": self._noise.state(),
                   "policy": generator_state(self._rng)}
        return LearnerState(self.n, self.g, self.beta_hat, self.rho_used,
                            [e.persistent() for e in self.estimators],
                            self.config, streams)

def _feature_dim(instance):
    return int(np.shape(instance.features(np.zeros(instance.sampler.d)))[0])


#===============================================================================
# Functional interface

def learner_step(state, instance):
    """Returns `(state, record)` after running one iteration from `state`."""
    learner = Learner.from_state(instance, state)
    rec = learner.step()
    return (learner.persistent(), rec)

def run_learner(instance, config=None, horizon=1000, hooks=(), truth=None,
                trace_every=None):
    """Runs a fresh learner for `horizon` iterations and returns its
    `RunTrace`."""
    learner = Learner(instance, config)
    trace = learner.run(horizon, truth=truth, hooks=hooks,
                        trace_every=trace_every)
    logger.info("learner run finished: n=%d, explored %d times", learner.n,
                int(np.sum(trace.explored)))
    return trace


#===============================================================================
# Checkpoints

def _estimator_json(e):
    if isinstance(e, RLSState):
        return dict(e.to_json(), type="rls")
    return dict(e.to_json(), type="ridge")

def _estimator_from_json(doc):
    if doc["type"] == "rls":
        return RLSState.from_json(doc)
    elif doc["type"] == "ridge":
        return RidgeAccumulator.from_json(doc)
    raise KeyError(f"unknown estimator type {doc['type']!r}")

def checkpoint(state):
    """Serializes a `LearnerState` to UTF-8 JSON bytes.

    The document holds `version`, `ridge_mode`, `n`, `g`, `beta_hat`,
    `rho_used`, `estimators` (one object per alternative), `config`, and
    `streams`. Floats are written with their shortest round-trip repr, so
    a restored learner continues bit-identically.
    """
    doc = {"version": CHECKPOINT_VERSION,
           "ridge_mode": state.config.ridge.mode,
           "n": state.n,
           "g": state.g.tolist(),
           "beta_hat": state.beta_hat.tolist(),
           "rho_used": state.rho_used.tolist(),
           "estimators": [_estimator_json(e) for e in state.estimators],
           "config": state.config.to_json(),
           "streams": state.stream_states()}
    return json.dumps(doc, sort_keys=True).encode('utf-8')

def restore(blob, ridge=None):
    """Rebuilds a `LearnerState` from bytes written by `checkpoint`.

    If `ridge` (a `RidgePolicy` or mode string) is given, it must match the
    checkpoint's ridge mode. Raises `CheckpointVersionError` on a version or
    mode mismatch and `CorruptCheckpointError` on a malformed blob.
    """
    try:
        doc = json.loads(blob.decode('utf-8') if isinstance(blob, bytes)
                         else blob)
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptCheckpointError(f"checkpoint is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise CorruptCheckpointError("checkpoint must be a JSON object")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"unsupported checkpoint version {doc.get('version')!r}")
    if ridge is not None:
        mode = ridge.mode if isinstance(ridge, RidgePolicy) else str(ridge)
        if doc.get("ridge_mode") != mode:
            raise CheckpointVersionError(
                f"checkpoint uses ridge mode {doc.get('ridge_mode')!r}, "
                f"not {mode!r}")
    try:
        config = LearnerConfig.from_json(doc["config"])
        if config.ridge.mode != doc["ridge_mode"]:
            raise CorruptCheckpointError("inconsistent ridge mode")
        streams = doc["streams"]
        missing = {"context", "noise", "policy"} - set(streams)
        if missing:
            raise CorruptCheckpointError(f"missing stream states: {sorted(missing)}")
        return LearnerState(doc["n"], doc["g"], doc["beta_hat"],
                            doc["rho_used"],
                            [_estimator_from_json(e) for e in doc["estimators"]],
                            config, streams)
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise CorruptCheckpointError(f"malformed checkpoint: {e}") from e

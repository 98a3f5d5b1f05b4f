# -*- coding: utf-8 -*-
################################################################################
# semiot/_trace.py
# The persistent run trace type and its transient builder.

import math

import numpy as np
from phamt import (PHAMT, THAMT)

from .abc import (Persistent, Transient)
from .util import (freeze, array_hash, write_csv)


#===============================================================================
# Trace schedules

def trace_schedule(horizon, every=None, dense_until=10_000, per_decade=20,
                   extra=()):
    """Returns the frozenset of iteration numbers at which a run of length
    `horizon` records a `TracePoint`.

    If `every` is an integer, every `every`-th iteration is recorded.
    Otherwise every iteration up to `dense_until` is recorded, followed by
    `per_decade` logarithmically spaced iterations per decade. The final
    iteration and any iterations in `extra` are always included.
    """
    horizon = int(horizon)
    if every is not None:
        every = int(every)
        if every < 1:
            raise ValueError(f"trace interval must be >= 1, got {every}")
        ns = set(range(every, horizon + 1, every))
    else:
        ns = set(range(1, min(horizon, dense_until) + 1))
        if horizon > dense_until:
            decades = math.log10(horizon / dense_until)
            m = max(2, int(math.ceil(decades * per_decade)) + 1)
            ns.update(int(round(u)) for u in np.geomspace(dense_until, horizon, m))
    ns.add(horizon)
    ns.update(int(n) for n in extra if 1 <= int(n) <= horizon)
    return frozenset(ns)


#===============================================================================
# TracePoint

class TracePoint(Persistent):
    """A snapshot of a run after iteration `n`: the dual weights `g`, the
    cost estimates `beta_hat` (learner runs only), and, when the truth was
    supplied during the run, the error norms `delta_norm` (of the normalized
    weights) and `Delta_max` (largest per-alternative coefficient error)."""
    __slots__ = ('n', 'g', 'beta_hat', 'delta_norm', 'Delta_max')
    _fields = ('n', 'g', 'beta_hat', 'delta_norm', 'Delta_max')
    def __new__(cls, n, g, beta_hat=None, delta_norm=math.nan,
                Delta_max=math.nan):
        obj = object.__new__(cls)
        object.__setattr__(obj, 'n', int(n))
        object.__setattr__(obj, 'g', freeze(g))
        object.__setattr__(obj, 'beta_hat',
                           None if beta_hat is None else freeze(beta_hat))
        object.__setattr__(obj, 'delta_norm', float(delta_norm))
        object.__setattr__(obj, 'Delta_max', float(Delta_max))
        return obj
    def transient(self):
        return dict((k, getattr(self, k)) for k in self._fields)


#===============================================================================
# RunTrace

class RunTrace(Persistent):
    """The log of a single run.

    Per-iteration columns (`pi`, `pi_hat`, `explored`, and, when a truth was
    supplied, `correct_hat` and `correct`) are stored as read-only arrays whose
    entry `i` describes iteration `n = n0 + i + 1` (`n0` is nonzero only for
    runs resumed from a checkpoint); alternatives are 0-based.
    Snapshots are stored sparsely in a `PHAMT` keyed by iteration number.
    `sampler` is the context sampler of the run, from which the contexts can
    be replayed in order.
    """
    __slots__ = ('kind', 'K', 'g0', 'sampler', 'n0', 'pi', 'pi_hat',
                 'explored', 'correct_hat', 'correct', '_points', '_hashcode')
    _fields = ('kind', 'K', 'g0', 'sampler', 'n0', 'pi', 'pi_hat', 'explored',
               'correct_hat', 'correct')
    _columns = ('pi', 'pi_hat', 'explored', 'correct_hat', 'correct')
    @classmethod
    def _new(cls, kind, K, g0, sampler, n0, pi, pi_hat, explored,
             correct_hat, correct, points):
        obj = object.__new__(cls)
        object.__setattr__(obj, 'kind', kind)
        object.__setattr__(obj, 'K', int(K))
        object.__setattr__(obj, 'g0', freeze(g0))
        object.__setattr__(obj, 'sampler', sampler)
        object.__setattr__(obj, 'n0', int(n0))
        for (k,v) in (('pi', pi), ('pi_hat', pi_hat), ('explored', explored),
                      ('correct_hat', correct_hat), ('correct', correct)):
            object.__setattr__(obj, k, None if v is None else freeze(v, None))
        object.__setattr__(obj, '_points', points)
        object.__setattr__(obj, '_hashcode', None)
        return obj
    def __len__(self):
        """Returns the number of iterations in the run."""
        return 0 if self.pi is None else self.pi.shape[0]
    @property
    def horizon(self):
        if self.pi is not None:
            return self.n0 + self.pi.shape[0]
        ns = self.ns
        return int(ns[-1]) if len(ns) > 0 else 0
    @property
    def has_truth(self):
        return self.correct_hat is not None
    def point(self, n):
        """Returns the `TracePoint` recorded after iteration `n`."""
        try:
            return self._points[int(n)]
        except KeyError:
            raise KeyError(f"no trace point at n={n}") from None
    def points(self):
        """Returns the list of trace points in increasing order of `n`."""
        return [v for (_,v) in sorted(self._points, key=lambda kv: kv[0])]
    @property
    def ns(self):
        return np.array(sorted(k for (k,_) in self._points), dtype=np.int64)
    def g_series(self):
        """Returns the `m x K` matrix of dual weights at the trace points."""
        pts = self.points()
        if len(pts) == 0:
            return np.empty((0, self.K))
        return np.stack([pt.g for pt in pts])
    def delta_norms(self, g_star):
        """Returns `||g^n - g^n_1 - g*||_2` at each trace point, where `g*` is
        normalized so that its first entry is 0."""
        g_star = np.asarray(g_star, dtype=float)
        g_star = g_star - g_star[0]
        G = self.g_series()
        return np.linalg.norm(G - G[:, :1] - g_star, axis=1)
    def Delta_maxes(self, beta):
        """Returns `max_j ||beta_hat^n_j - beta_j||_2` at each trace point."""
        beta = np.asarray(beta, dtype=float)
        return np.array([np.max(np.linalg.norm(pt.beta_hat - beta, axis=1))
                         for pt in self.points()])
    def contexts(self):
        """Replays the contexts of the run as an `n x d` array."""
        stream = self.sampler.stream()
        stream.draw_many(self.n0)
        return stream.draw_many(len(self))
    def transient(self):
        return TransientTrace._from(self)
    def _key(self):
        return Persistent._key(self) + tuple(
            (pt.n,) + pt._key() for pt in self.points())
    def __hash__(self):
        if self._hashcode is None:
            object.__setattr__(self, '_hashcode', Persistent.__hash__(self))
        return self._hashcode
    # CSV output.
    def write_points_csv(self, path, g_star=None):
        """Writes `n,g_1..g_K,delta_norm` rows, one per trace point; the
        `delta_norm` column is present only when `g_star` is given."""
        header = ['n'] + [f'g_{k+1}' for k in range(self.K)]
        if g_star is not None:
            header.append('delta_norm')
            dn = self.delta_norms(g_star)
        rows = []
        for (ii,pt) in enumerate(self.points()):
            row = [pt.n] + [float(u) for u in pt.g]
            if g_star is not None:
                row.append(float(dn[ii]))
            rows.append(row)
        return write_csv(path, header, rows)
    def write_steps_csv(self, path):
        """Writes one `n,x_hash,pi,pi_hat,explored,correct,delta_norm,
        Delta_max` row per iteration (alternatives 1-based; `correct` is the
        plug-in correct-selection flag; empty cells where a value was not
        recorded)."""
        header = ['n', 'x_hash', 'pi', 'pi_hat', 'explored', 'correct',
                  'delta_norm', 'Delta_max']
        X = self.contexts()
        pts = self._points
        def _rows():
            for ii in range(len(self)):
                n = self.n0 + ii + 1
                corr = '' if self.correct_hat is None else int(self.correct_hat[ii])
                (dn, dm) = ('', '')
                try:
                    pt = pts[n]
                    if not math.isnan(pt.delta_norm): dn = pt.delta_norm
                    if not math.isnan(pt.Delta_max): dm = pt.Delta_max
                except KeyError:
                    pass
                yield [n, array_hash(X[ii]), int(self.pi[ii]) + 1,
                       int(self.pi_hat[ii]) + 1, int(self.explored[ii]),
                       corr, dn, dm]
        return write_csv(path, header, _rows())


#===============================================================================
# TransientTrace

class TransientTrace(Transient):
    """A transient builder for `RunTrace` objects.

    `TransientTrace(kind, K, g0, sampler, capacity)` preallocates per-step
    columns for `capacity` iterations; `truth=True` also allocates the
    correct-selection columns.
    """
    __slots__ = ('kind', 'K', 'g0', 'sampler', 'n0', 'count', '_cols',
                 '_thamt')
    def __init__(self, kind, K, g0, sampler, capacity=0, steps=True,
                 truth=False, n0=0):
        self.kind = kind
        self.K = int(K)
        self.g0 = np.array(g0, dtype=float)
        self.sampler = sampler
        self.n0 = int(n0)
        self.count = 0
        self._thamt = THAMT(PHAMT.empty)
        if steps:
            names = ['pi', 'pi_hat', 'explored']
            if truth:
                names += ['correct_hat', 'correct']
            dtypes = {'pi': np.int32, 'pi_hat': np.int32}
            self._cols = {k: np.zeros(capacity, dtype=dtypes.get(k, np.int8))
                          for k in names}
        else:
            self._cols = None
    @classmethod
    def _from(cls, trace):
        t = cls.__new__(cls)
        t.kind = trace.kind
        t.K = trace.K
        t.g0 = np.array(trace.g0)
        t.sampler = trace.sampler
        t.n0 = trace.n0
        t.count = len(trace)
        t._thamt = THAMT(trace._points)
        if trace.pi is None:
            t._cols = None
        else:
            t._cols = {k: np.array(getattr(trace, k))
                       for k in RunTrace._columns
                       if getattr(trace, k) is not None}
        return t
    def _grow(self, n):
        for (k,v) in self._cols.items():
            if v.shape[0] < n:
                new = np.zeros(max(n, 2 * v.shape[0]), dtype=v.dtype)
                new[:v.shape[0]] = v
                self._cols[k] = new
    def record_step(self, pi, pi_hat, explored, correct_hat=None, correct=None):
        """Appends the columns of one iteration."""
        ii = self.count
        cols = self._cols
        if cols['pi'].shape[0] <= ii:
            self._grow(ii + 1)
        cols['pi'][ii] = pi
        cols['pi_hat'][ii] = pi_hat
        cols['explored'][ii] = explored
        if correct_hat is not None and 'correct_hat' in cols:
            cols['correct_hat'][ii] = correct_hat
            cols['correct'][ii] = correct
        self.count = ii + 1
    def record_block(self, pi, pi_hat, explored, correct_hat=None,
                     correct=None):
        """Appends the columns of a block of iterations."""
        ii = self.count
        m = len(pi)
        cols = self._cols
        if cols['pi'].shape[0] < ii + m:
            self._grow(ii + m)
        cols['pi'][ii:ii+m] = pi
        cols['pi_hat'][ii:ii+m] = pi_hat
        cols['explored'][ii:ii+m] = explored
        if correct_hat is not None and 'correct_hat' in cols:
            cols['correct_hat'][ii:ii+m] = correct_hat
            cols['correct'][ii:ii+m] = correct
        self.count = ii + m
    def record_point(self, point):
        """Stores a `TracePoint` under its iteration number."""
        self._thamt[point.n] = point
    def persistent(self):
        cols = self._cols
        n = self.count
        if cols is None:
            cols = {}
        else:
            cols = {k: v[:n] for (k,v) in cols.items()}
        return RunTrace._new(
            self.kind, self.K, self.g0, self.sampler, self.n0,
            cols.get('pi'), cols.get('pi_hat'), cols.get('explored'),
            cols.get('correct_hat'), cols.get('correct'),
            self._thamt.persistent())

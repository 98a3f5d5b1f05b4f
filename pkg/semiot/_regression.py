# -*- coding: utf-8 -*-
################################################################################
# semiot/_regression.py
# Ridge-like estimation of the cost coefficients, in batch and recursive form.

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import (cho_factor, cho_solve, LinAlgError)

from .abc import (Persistent, Transient)
from .util import freeze


class NumericError(ArithmeticError):
    """Raised when a numerical routine receives non-finite data or fails."""

class UnsupportedModeError(ValueError):
    """Raised when an operation is requested in a mode that cannot support
    it."""


#===============================================================================
# RidgePolicy

@dataclass(frozen=True)
class RidgePolicy:
    """The regularization schedule of the ridge estimator.

    `mode='paper'` uses `rho^n = 1 + (log n)^3` (natural log, `rho^0 = 1`);
    `mode='constant'` uses `rho^n = rho` for all `n` and enables recursive
    least squares.
    """
    mode: str = 'constant'
    rho: float = 0.001
    def __post_init__(self):
        if self.mode not in ('paper', 'constant'):
            raise ValueError(f"unknown ridge mode {self.mode!r}")
        if self.mode == 'constant' and not (self.rho > 0):
            raise ValueError(f"constant rho must be positive, got {self.rho}")
    @classmethod
    def paper(cls):
        return cls('paper', 0.0)
    @classmethod
    def constant(cls, rho):
        return cls('constant', float(rho))
    @property
    def tag(self):
        return 'paper' if self.mode == 'paper' else f'constant({self.rho!r})'
    def rho_at(self, n):
        """Returns the regularization used at global time `n`."""
        if self.mode == 'constant':
            return self.rho
        elif n <= 1:
            return 1.0
        else:
            return 1.0 + math.log(n)**3


#===============================================================================
# Batch accumulators

class RidgeAccumulator(Persistent):
    """The sufficient statistics of alternative `k`'s observations:
    `V = sum x x^T`, `b = sum w x`, and the observation `count`."""
    __slots__ = ('k', 'V', 'b', 'count')
    _fields = ('k', 'V', 'b', 'count')
    def __new__(cls, k, V, b, count):
        V = np.asarray(V, dtype=float)
        b = np.asarray(b, dtype=float)
        d = b.shape[0]
        if V.shape != (d, d):
            raise ValueError(f"V must be {d} x {d}, got {V.shape}")
        obj = object.__new__(cls)
        object.__setattr__(obj, 'k', int(k))
        object.__setattr__(obj, 'V', freeze(V))
        object.__setattr__(obj, 'b', freeze(b))
        object.__setattr__(obj, 'count', int(count))
        return obj
    @classmethod
    def empty(cls, k, d):
        return cls(k, np.zeros((d, d)), np.zeros(d), 0)
    @property
    def d(self):
        return self.b.shape[0]
    def transient(self):
        return TransientAccumulator(self.k, self.d, self.V, self.b, self.count)
    def to_json(self):
        return {"k": self.k, "V": self.V.tolist(), "b": self.b.tolist(),
                "count": self.count}
    @classmethod
    def from_json(cls, doc):
        return cls(doc["k"], doc["V"], doc["b"], doc["count"])

class TransientAccumulator(Transient):
    """The in-place counterpart of `RidgeAccumulator`."""
    __slots__ = ('k', 'V', 'b', 'count')
    def __init__(self, k, d, V=None, b=None, count=0):
        self.k = int(k)
        self.V = np.zeros((d, d)) if V is None else np.array(V, dtype=float)
        self.b = np.zeros(d) if b is None else np.array(b, dtype=float)
        self.count = int(count)
    def update(self, x, w):
        self.V += np.outer(x, x)
        self.b += w * x
        self.count += 1
    def solve(self, rho):
        return _ridge_solve(self.V, self.b, self.count, rho)
    def persistent(self):
        return RidgeAccumulator(self.k, self.V, self.b, self.count)

def absorb(acc, x, w):
    """Returns the accumulator with the observation `(x, w)` added."""
    x = np.asarray(x, dtype=float)
    w = float(w)
    if not (np.all(np.isfinite(x)) and math.isfinite(w)):
        raise NumericError("observations must be finite")
    return RidgeAccumulator(acc.k, acc.V + np.outer(x, x), acc.b + w * x,
                            acc.count + 1)

def _ridge_solve(V, b, count, rho):
    if not (rho > 0):
        raise ValueError(f"rho must be positive, got {rho}")
    if count == 0:
        return np.zeros(b.shape[0])
    A = 0.5 * (V + V.T)
    A[np.diag_indices_from(A)] += rho
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise NumericError("ridge solve received non-finite data")
    try:
        return cho_solve(cho_factor(A, lower=True, check_finite=False), b,
                         check_finite=False)
    except LinAlgError as e:
        raise NumericError(f"ridge solve failed: {e}") from e

def solve_beta(acc, rho):
    """Returns the ridge estimate `(rho I + V)^-1 b` of an accumulator.

    The solve uses a Cholesky factorization of the symmetrized matrix; an
    empty accumulator yields the zero vector.
    """
    return _ridge_solve(acc.V, acc.b, acc.count, float(rho))


#===============================================================================
# Recursive least squares

class RLSState(Persistent):
    """The recursive least-squares state of one alternative under constant
    regularization `rho`: `P = (rho I + V)^-1`, `b = sum w x`, and the
    current estimate `beta = P b`."""
    __slots__ = ('rho', 'P', 'b', 'beta', 'count')
    _fields = ('rho', 'P', 'b', 'beta', 'count')
    def __new__(cls, rho, P, b, beta, count):
        obj = object.__new__(cls)
        object.__setattr__(obj, 'rho', float(rho))
        object.__setattr__(obj, 'P', freeze(P))
        object.__setattr__(obj, 'b', freeze(b))
        object.__setattr__(obj, 'beta', freeze(beta))
        object.__setattr__(obj, 'count', int(count))
        return obj
    @classmethod
    def initial(cls, d, policy):
        """Returns the state with no observations.

        `policy` is a positive float or a `RidgePolicy`; the paper schedule
        raises `UnsupportedModeError` since its regularization changes at
        every step.
        """
        if isinstance(policy, RidgePolicy):
            if policy.mode != 'constant':
                raise UnsupportedModeError(
                    "recursive least squares requires a constant rho")
            rho = policy.rho
        else:
            rho = float(policy)
        if not (rho > 0):
            raise ValueError(f"rho must be positive, got {rho}")
        return cls(rho, np.eye(d) / rho, np.zeros(d), np.zeros(d), 0)
    @property
    def d(self):
        return self.b.shape[0]
    def transient(self):
        return TransientRLS(self.d, self.rho, self.P, self.b, self.beta,
                            self.count)
    def to_json(self):
        return {"rho": self.rho, "P": self.P.tolist(), "b": self.b.tolist(),
                "beta": self.beta.tolist(), "count": self.count}
    @classmethod
    def from_json(cls, doc):
        return cls(doc["rho"], np.array(doc["P"]), np.array(doc["b"]),
                   np.array(doc["beta"]), doc["count"])

class TransientRLS(Transient):
    """The in-place counterpart of `RLSState`."""
    __slots__ = ('rho', 'P', 'b', 'beta', 'count')
    def __init__(self, d, rho, P=None, b=None, beta=None, count=0):
        self.rho = float(rho)
        self.P = np.eye(d) / self.rho if P is None else np.array(P)
        self.b = np.zeros(d) if b is None else np.array(b)
        self.beta = np.zeros(d) if beta is None else np.array(beta)
        self.count = int(count)
    def update(self, x, w):
        # Sherman-Morrison rank-one update of P = A^-1.
        Px = self.P @ x
        self.P -= np.outer(Px, Px) / (1.0 + x @ Px)
        self.b += w * x
        self.beta = self.P @ self.b
        self.count += 1
    def solve(self, rho=None):
        return self.beta
    def persistent(self):
        return RLSState(self.rho, self.P, self.b, self.beta, self.count)

def rls_update(state, x, w):
    """Returns the recursive least-squares state after observing `(x, w)`.

    The result equals `solve_beta` on the batch accumulator of the same
    observations (up to floating-point error).
    """
    if isinstance(state, RidgePolicy):
        raise UnsupportedModeError(
            "rls_update requires an RLSState, not a ridge policy")
    x = np.asarray(x, dtype=float)
    w = float(w)
    if not (np.all(np.isfinite(x)) and math.isfinite(w)):
        raise NumericError("observations must be finite")
    t = state.transient()
    t.update(x, w)
    return t.persistent()

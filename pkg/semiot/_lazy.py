# -*- coding: utf-8 -*-
################################################################################
# semiot/_lazy.py
# Lazily computed values and the per-instance oracle cache built on them.

from collections import deque
from functools import partial
from threading import RLock

from phamt import (PHAMT, THAMT)


#===============================================================================
# Lazy Value Type

class LazyError(RuntimeError):
    """A runtime error that occurs while evaluating a lazy value.

    The original exception is chained as `__cause__`.

    See also: `lazy`.
    """
    def __init__(self, partial):
        RuntimeError.__init__(self)
        self.partial = partial
    def __str__(self):
        (fn, args, kwargs) = self.partial
        fnname = getattr(fn, '__name__', '<anonymous>')
        errmsg = f'lazy raised error during call to {fnname}{tuple(args)}'
        if len(kwargs) > 0:
            opts = ', '.join([f'{k}={v}' for (k,v) in kwargs.items()])
            errmsg = f'{errmsg[:-1]}, {opts})'
        return errmsg
    def __repr__(self):
        return str(self)

class lazy:
    """A callable like `partial` for lazily-computed values.

    `l = lazy(fn, *args, **kwargs)` stores the given callable `fn` with the
    given `args` and `kwargs` as arguments. When the value of `l` is first
    requested (via `l()`), it is computed and cached, and the partial data is
    forgotten. Evaluation is guarded by a lock, so concurrent callers compute
    the value only once.

    Errors raised by `fn` are re-raised as a `LazyError` naming the deferred
    call, with the original error as its cause.
    """
    __slots__ = ('partial', 'value')
    def __new__(cls, fn, *args, **kw):
        if not callable(fn):
            raise TypeError(f"lazy({fn}) must be given a callable function")
        obj = object.__new__(cls)
        object.__setattr__(obj, 'partial', (partial(fn, *args, **kw), RLock(),
                                            (fn, args, kw)))
        object.__setattr__(obj, 'value', None)
        return obj
    def __setattr__(self, k, v):
        raise TypeError("lazy values are immutable")
    def __call__(self):
        part = self.partial
        if part is None:
            return self.value
        (part, rlock, call) = part
        with rlock:
            # Re-check: another caller may have finished while we waited.
            if self.partial is None:
                return self.value
            try:
                val = part()
            except Exception as e:
                raise LazyError(call) from e
            object.__setattr__(self, 'value', val)
            object.__setattr__(self, 'partial', None)
            return val
    def __repr__(self):
        s = 'ready' if self.is_ready() else 'waiting'
        return f"lazy(<{id(self)}>: {s})"
    def is_ready(self):
        """Returns `True` if the lazy value is cached and `False` otherwise."""
        return self.partial is None

def unlazy(obj):
    """Returns the cached value of a lazy object or the object if not lazy."""
    if isinstance(obj, lazy):
        return obj()
    else:
        return obj


#===============================================================================
# Lazy Caches

class LazyCache:
    """An integer-keyed cache of `lazy` values.

    `cache.put(key, fn, *args, **kw)` registers a deferred computation for
    `key` unless one is already registered; `cache[key]` evaluates it on first
    access and returns the cached value afterwards. The entries are held in a
    `THAMT`; `snapshot()` returns a persistent `PHAMT` of the lazy objects
    without evaluating them.

    With `maxsize`, registering a new key beyond `maxsize` entries evicts the
    oldest registered entry; `clear()` drops every entry.
    """
    __slots__ = ('_thamt', '_order', '_lock', 'maxsize')
    def __init__(self, maxsize=None):
        if maxsize is not None and int(maxsize) < 1:
            raise ValueError(f"maxsize must be positive, got {maxsize}")
        self.maxsize = None if maxsize is None else int(maxsize)
        self._thamt = THAMT(PHAMT.empty)
        self._order = deque()
        self._lock = RLock()
    def put(self, key, fn, *args, **kw):
        """Registers `lazy(fn, *args, **kw)` under `key` and returns the
        registered lazy object (the existing one if `key` is present)."""
        key = int(key)
        with self._lock:
            lz = self._thamt.get(key, None)
            if lz is None:
                lz = lazy(fn, *args, **kw)
                self._thamt[key] = lz
                self._order.append(key)
                while self.maxsize is not None and len(self._order) > self.maxsize:
                    del self._thamt[self._order.popleft()]
            return lz
    def __getitem__(self, key):
        """Returns the value of `key`, computing it if needed; an error raised
        by the computation propagates unwrapped."""
        with self._lock:
            lz = self._thamt[int(key)]
        try:
            return lz()
        except LazyError as e:
            raise e.__cause__ from None
    def __contains__(self, key):
        with self._lock:
            return self._thamt.get(int(key), None) is not None
    def __len__(self):
        return len(self._thamt)
    def is_ready(self, key):
        """Returns `True` if the value of `key` has already been computed."""
        with self._lock:
            return self._thamt[int(key)].is_ready()
    def clear(self):
        with self._lock:
            self._thamt = THAMT(PHAMT.empty)
            self._order.clear()
    def snapshot(self):
        with self._lock:
            return self._thamt.persistent()


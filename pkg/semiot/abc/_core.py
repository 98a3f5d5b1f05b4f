# -*- coding: utf-8 -*-
################################################################################
# semiot/abc/_core.py
# The definitions of the abstract base classes for the persistent value types.

from collections.abc import Hashable

import numpy as np

from ..util import (freeze, fieldstr)


#===============================================================================
# Persistent

class Persistent(Hashable):
    """The base class of the immutable value objects of `semiot`.

    Subclasses declare the names of their fields in the class attribute
    `_fields` and fill them in via `object.__setattr__` (usually in a `_new`
    classmethod). Array-valued fields are stored as read-only numpy arrays.

    The following methods must be implemented by children:
     * `transient()`

    `Persistent` includes default implementations of `__eq__`, `__hash__`,
    `__repr__`, `copy()`, and `set(**changes)`, all of which operate on the
    fields named in `_fields`.
    """
    __slots__ = ()
    _fields = ()
    # Abstract methods.
    def transient(self):
        """Efficiently returns a transient copy of the persistent object."""
        raise NotImplementedError()
    # Methods that should throw errors in children.
    def __setattr__(self, k, v):
        raise TypeError(f"{type(self)} is immutable")
    def __setitem__(self, k, v):
        raise TypeError(f"{type(self)} is immutable")
    def __delitem__(self, k):
        raise TypeError(f"{type(self)} is immutable")
    # Implementation methods that are probably fine in all children.
    def copy(self):
        """Returns the persistent object (persistent objects needn't be
        copied)."""
        return self
    def set(self, **changes):
        """Returns a copy of the object with the given fields replaced."""
        for k in changes:
            if k not in self._fields:
                raise TypeError(f"{type(self).__name__} has no field {k!r}")
        obj = object.__new__(type(self))
        for k in self._fields:
            v = changes[k] if k in changes else getattr(self, k)
            if isinstance(v, np.ndarray):
                v = freeze(v)
            object.__setattr__(obj, k, v)
        return obj
    def _key(self):
        return tuple(
            (v.shape, v.tobytes()) if isinstance(v, np.ndarray) else v
            for v in (getattr(self, k) for k in self._fields))
    def __eq__(self, other):
        if other is self:
            return True
        elif type(other) is not type(self):
            return False
        else:
            return self._key() == other._key()
    def __ne__(self, other):
        return not (self == other)
    def __hash__(self):
        return hash((type(self).__name__,) + self._key())
    def __repr__(self):
        s = fieldstr(((k, getattr(self, k)) for k in self._fields), maxlen=120)
        return f"{type(self).__name__}({s})"


#===============================================================================
# Transient

class Transient:
    """The base class of the single-owner mutable counterparts of `semiot`'s
    persistent types (streams, accumulators, running learners, and trace
    builders)."""
    __slots__ = ()
    def persistent(self):
        """Efficiently returns a persistent copy of the transient object."""
        raise NotImplementedError()
    # Implementations that are probably fine for most children.
    def copy(self):
        """Returns a copy of the transient object."""
        return self.persistent().transient()

# -*- coding: utf-8 -*-
################################################################################
# semiot/util/_core.py
# Implementation of the core semiot utilities.

import csv
import hashlib
import json

import numpy as np


#===============================================================================
# Utility Functions

def shortrepr(v, maxitems=6):
    """Returns a compact repr of a field value.

    Numeric arrays with at most `maxitems` entries are printed with 4 digits
    of precision; larger arrays are summarized by shape and dtype.
    """
    if isinstance(v, np.ndarray):
        if v.size <= maxitems:
            return np.array2string(v, precision=4, separator=', ')
        return f"<{'x'.join(map(str, v.shape))} {v.dtype} array>"
    elif isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    else:
        return repr(v)

def fieldstr(fields, maxlen=None):
    """Returns `"name=value, ..."` for the `(name, value)` pairs in `fields`,
    formatting the values with `shortrepr`.

    If `maxlen` is given, trailing fields are dropped and replaced by `"..."`
    until the string fits.
    """
    parts = [f"{k}={shortrepr(v)}" for (k,v) in fields]
    s = ", ".join(parts)
    if maxlen is None or len(s) <= maxlen:
        return s
    elif maxlen < 3:
        raise ValueError(f"maxlen must be at least 3, got {maxlen}")
    while parts and len(", ".join(parts + ["..."])) > maxlen:
        parts.pop()
    return ", ".join(parts + ["..."])

def json_digest(doc, bits=63):
    """Returns a non-negative integer of at most `bits` bits drawn from the
    blake2b digest of the canonical JSON form of `doc`.

    Equal documents give equal digests regardless of key order.
    """
    text = json.dumps(doc, sort_keys=True, separators=(',', ':'))
    h = hashlib.blake2b(text.encode('utf-8'), digest_size=8).digest()
    return int.from_bytes(h, 'big') >> (64 - int(bits))


def freeze(arr, dtype=float):
    """Returns a read-only, contiguous numpy copy of `arr`.

    Arrays that are already read-only and of the requested dtype are returned
    as-is.
    """
    if (isinstance(arr, np.ndarray) and not arr.flags.writeable
        and (dtype is None or arr.dtype == dtype)):
        return arr
    a = np.array(arr, dtype=dtype, copy=True, order='C')
    a.flags.writeable = False
    return a

def seed_sequence(*keys):
    """Returns a `numpy.random.SeedSequence` derived from the given
    non-negative integer keys.

    The same keys always produce the same sequence; this is the only way
    `semiot` turns user seeds into random streams.
    """
    keys = [int(k) for k in keys]
    if any(k < 0 for k in keys):
        raise ValueError(f"seed keys must be non-negative, got {keys}")
    return np.random.SeedSequence(keys)

def derive_seed(*keys):
    """Returns a 63-bit integer seed derived deterministically from the given
    non-negative integer keys."""
    (word,) = seed_sequence(*keys).generate_state(1, dtype=np.uint64)
    return int(word) >> 1

def make_generator(seed, stream):
    """Returns a `numpy.random.Generator` over the counter-based `Philox` bit
    generator for the given seed and stream number."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, stream)))

def array_hash(arr, nchars=16):
    """Returns a short hexadecimal blake2b digest of the bytes of `arr`."""
    a = np.ascontiguousarray(arr, dtype=float)
    return hashlib.blake2b(a.tobytes(), digest_size=nchars // 2).hexdigest()

def file_checksum(path):
    """Returns the sha256 hexadecimal digest of the file at `path`."""
    h = hashlib.sha256()
    with open(path, 'rb') as fl:
        for chunk in iter(lambda: fl.read(1 << 16), b''):
            h.update(chunk)
    return h.hexdigest()

def fmtnum(x):
    """Formats a number for CSV output (shortest round-trip repr; `nan` and
    `inf` spelled as such)."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    elif isinstance(x, (int, np.integer)):
        return str(int(x))
    else:
        return repr(float(x))

def write_csv(path, header, rows):
    """Writes an RFC-4180 CSV file (UTF-8, CRLF line endings) with the given
    header and rows; numeric cells are formatted with `fmtnum`."""
    with open(path, 'w', encoding='utf-8', newline='') as fl:
        w = csv.writer(fl, lineterminator='\r\n')
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else fmtnum(c) for c in row])
    return path

def generator_state(gen):
    """Returns the state of a `numpy.random.Generator` as a JSON-compatible
    dict (numpy arrays are stored as `{"dtype": ..., "data": [...]}`)."""
    def _enc(v):
        if isinstance(v, np.ndarray):
            return {"dtype": str(v.dtype), "data": v.tolist()}
        elif isinstance(v, dict):
            return {k: _enc(u) for (k,u) in v.items()}
        elif isinstance(v, np.integer):
            return int(v)
        else:
            return v
    return _enc(gen.bit_generator.state)

def restore_generator(state):
    """Returns a `numpy.random.Generator` whose bit generator has been set to
    the state returned previously by `generator_state`."""
    def _dec(v):
        if isinstance(v, dict):
            if set(v.keys()) == {"dtype", "data"}:
                return np.array(v["data"], dtype=v["dtype"])
            return {k: _dec(u) for (k,u) in v.items()}
        else:
            return v
    state = _dec(state)
    name = state.get("bit_generator")
    bitgen_type = getattr(np.random, str(name), None)
    if bitgen_type is None:
        raise ValueError(f"unknown bit generator: {name!r}")
    bitgen = bitgen_type(0)
    bitgen.state = state
    return np.random.Generator(bitgen)

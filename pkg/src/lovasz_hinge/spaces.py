"""Label and report spaces and their integer encodings.

Labels ``y`` live in ``{-1, 1}^k`` and are indexed by the bitmask of their
positive coordinates (bit ``i`` set iff ``y[i] = +1``).  Reports ``v`` live in
``{-1, 0, 1}^k`` and are indexed in base 3 with digit ``v[i] + 1`` at
position ``i``.  Strings use one character per coordinate: ``+``, ``0``,
``-`` (a Unicode minus is accepted on input).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

_CHARS = {1: "+", 0: "0", -1: "-"}
_PARSE = {"+": 1, "0": 0, "-": -1, "−": -1}


@lru_cache(maxsize=None)
def labels(k: int) -> np.ndarray:
    """All 2^k labels as a float array, row ``b`` is the label with bitmask ``b``."""
    idx = np.arange(1 << k)[:, None]
    Y = np.where((idx >> np.arange(k)[None, :]) & 1, 1.0, -1.0)
    Y.setflags(write=False)
    return Y


@lru_cache(maxsize=None)
def reports(k: int) -> np.ndarray:
    """All 3^k reports as an int array, row ``r`` has base-3 index ``r``."""
    idx = np.arange(3 ** k)[:, None]
    V = (idx // (3 ** np.arange(k))[None, :]) % 3 - 1
    V = V.astype(np.int64)
    V.setflags(write=False)
    return V


@lru_cache(maxsize=None)
def label_reports(k: int) -> np.ndarray:
    """Base-3 report index of every label, in label-bitmask order."""
    return report_index(labels(k).astype(np.int64))


def label_index(y) -> int | np.ndarray:
    y = np.asarray(y)
    bits = (y > 0).astype(np.int64)
    return bits @ (1 << np.arange(y.shape[-1], dtype=np.int64))


def report_index(v) -> int | np.ndarray:
    v = np.asarray(v, dtype=np.int64)
    return (v + 1) @ (3 ** np.arange(v.shape[-1], dtype=np.int64))


def is_label(y) -> bool:
    y = np.asarray(y)
    return bool(np.all((y == 1) | (y == -1)))


def is_report(v) -> bool:
    v = np.asarray(v)
    return bool(np.all((v == 1) | (v == 0) | (v == -1)))


def as_label(y) -> np.ndarray:
    if isinstance(y, str):
        y = parse(y)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if not is_label(y):
        raise ValueError(f"label must have every coordinate in {{-1, 1}}, got {y.tolist()}")
    return y


def as_report(v) -> np.ndarray:
    if isinstance(v, str):
        v = parse(v)
    v = np.asarray(v).reshape(-1)
    if not is_report(v):
        raise ValueError(f"report must have every coordinate in {{-1, 0, 1}}, got {v.tolist()}")
    return v.astype(np.int64)


def fmt(v) -> str:
    return "".join(_CHARS[int(round(c))] for c in np.asarray(v).reshape(-1))


def parse(s: str) -> np.ndarray:
    try:
        return np.array([_PARSE[ch] for ch in s.strip()], dtype=np.int64)
    except KeyError as e:
        raise ValueError(f"bad character {e.args[0]!r} in {s!r}; use '+', '0', '-'") from None


def label_from_index(k: int, b: int) -> np.ndarray:
    return labels(k)[b]

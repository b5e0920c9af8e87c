"""Census-specific attribute transforms for VALUEH and INCWAGE.

VALUEH is bucketed into 5003 values. INCWAGE is split into a coarse part
INCWAGE_A (hundreds, 52 values) and a digit-pattern class INCWAGE_B (8 values)
that records the first of 100, 20, 50, 25, 10, 5, 2 dividing the wage.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .domain import Dataset, Domain
from .errors import MissingAttribute, NonIntegerLabel

VALUEH = "VALUEH"
INCWAGE = "INCWAGE"
INCWAGE_A = "INCWAGE_A"
INCWAGE_B = "INCWAGE_B"

MISSING_CODE = 9999998
NA_CODE = 9999999
MODULI = (100, 20, 50, 25, 10, 5, 2, 1)


def valueh_bucket(v: int) -> int:
    if v <= 25000:
        return v // 5
    if v == MISSING_CODE:
        return 5001
    if v == NA_CODE:
        return 5002
    return 5000


def incwage_a(v: int) -> int:
    if v <= 5000:
        return v // 100
    if v < MISSING_CODE:
        return 50
    # the missing code and anything above it share the top bucket
    return 51


def incwage_b(v: int) -> int:
    for k, mod in enumerate(MODULI[:-1]):
        if v % mod == 0:
            return k
    return 7


def digit_sets() -> list[list[int]]:
    """The residual classes L_0..L_7: peel off multiples of each modulus in turn from 0..99."""
    rest = list(range(100))
    out = []
    for mod in MODULI:
        layer = [v for v in rest if v % mod == 0]
        rest = [v for v in rest if v % mod != 0]
        out.append(layer)
    return out


_DIGITS = digit_sets()


def incwage_b_to_digits(k: int, rng: np.random.Generator) -> int:
    """Uniform draw from the two-digit endings in class ``k``."""
    if not 0 <= k < len(_DIGITS):
        raise NonIntegerLabel(f"INCWAGE_B class must lie in 0..7, got {k}")
    layer = _DIGITS[k]
    return layer[int(rng.integers(len(layer)))]


def _int_labels(domain: Domain, attr: str) -> np.ndarray:
    if attr not in domain.names:
        raise MissingAttribute(f"attribute {attr!r} is required")
    labels = domain.labels[domain.index(attr)]
    try:
        return np.array([int(v) for v in labels], dtype=np.int64)
    except ValueError:
        raise NonIntegerLabel(f"attribute {attr!r} has non-integer labels") from None


def _str_labels(n: int) -> tuple[str, ...]:
    return tuple(str(v) for v in range(n))


def transform(data: Dataset) -> Dataset:
    """Bucket VALUEH and replace INCWAGE by INCWAGE_A and INCWAGE_B (in that position)."""
    domain = data.domain
    vh = _int_labels(domain, VALUEH)
    iw = _int_labels(domain, INCWAGE)
    i_vh, i_iw = domain.index(VALUEH), domain.index(INCWAGE)

    vh_map = np.array([valueh_bucket(int(v)) for v in vh], dtype=np.int64)
    a_map = np.array([incwage_a(int(v)) for v in iw], dtype=np.int64)
    b_map = np.array([incwage_b(int(v)) for v in iw], dtype=np.int64)

    names, labels, cols = [], [], []
    for i, name in enumerate(domain.names):
        col = data.rows[:, i]
        if i == i_vh:
            names.append(name)
            labels.append(_str_labels(5003))
            cols.append(vh_map[col])
        elif i == i_iw:
            names += [INCWAGE_A, INCWAGE_B]
            labels += [_str_labels(52), _str_labels(8)]
            cols += [a_map[col], b_map[col]]
        else:
            names.append(name)
            labels.append(domain.labels[i])
            cols.append(col)
    new = Domain(tuple(names), tuple(labels))
    rows = np.stack(cols, axis=1) if cols else np.zeros((data.m, 0), dtype=np.int64)
    return Dataset(new, rows.reshape(data.m, len(new)))


@lru_cache(maxsize=None)
def valueh_labels() -> tuple[str, ...]:
    return tuple(str(5 * v) for v in range(5001)) + (str(MISSING_CODE), str(NA_CODE))


@lru_cache(maxsize=None)
def incwage_labels() -> tuple[str, ...]:
    return tuple(str(v) for v in range(5100)) + (str(MISSING_CODE),)


@lru_cache(maxsize=None)
def _label_index(labels: tuple[str, ...]) -> dict[int, int]:
    return {int(v): k for k, v in enumerate(labels)}


def reverse_transform(data: Dataset, rng: np.random.Generator) -> Dataset:
    """Undo :func:`transform`; INCWAGE's last two digits are drawn from its INCWAGE_B class.

    The output labels of VALUEH and INCWAGE are every value the reversal can
    produce, in increasing order.
    """
    domain = data.domain
    for attr in (VALUEH, INCWAGE_A, INCWAGE_B):
        if attr not in domain.names:
            raise MissingAttribute(f"attribute {attr!r} is required")
    i_vh, i_a, i_b = (domain.index(a) for a in (VALUEH, INCWAGE_A, INCWAGE_B))
    a_vals = _int_labels(domain, INCWAGE_A)[data.rows[:, i_a]]
    b_vals = _int_labels(domain, INCWAGE_B)[data.rows[:, i_b]]
    vh_vals = _int_labels(domain, VALUEH)[data.rows[:, i_vh]]

    vh_out = np.where(vh_vals <= 5000, 5 * vh_vals, np.where(vh_vals == 5001, MISSING_CODE, NA_CODE))
    digits = np.array([incwage_b_to_digits(int(b), rng) for b in b_vals], dtype=np.int64)
    iw_out = np.where(a_vals <= 50, 100 * a_vals + digits, MISSING_CODE)

    vh_labels, iw_labels = valueh_labels(), incwage_labels()
    vh_index, iw_index = _label_index(vh_labels), _label_index(iw_labels)

    names, labels, cols = [], [], []
    for i, name in enumerate(domain.names):
        if i == i_vh:
            names.append(name)
            labels.append(vh_labels)
            cols.append(np.array([vh_index[int(v)] for v in vh_out], dtype=np.int64))
        elif i == i_a:
            names.append(INCWAGE)
            labels.append(iw_labels)
            cols.append(np.array([iw_index[int(v)] for v in iw_out], dtype=np.int64))
        elif i == i_b:
            continue
        else:
            names.append(name)
            labels.append(domain.labels[i])
            cols.append(data.rows[:, i])
    new = Domain(tuple(names), tuple(labels))
    rows = np.stack(cols, axis=1) if data.m else np.zeros((0, len(new)), dtype=np.int64)
    return Dataset(new, rows)

"""Seeded random instances and allocations."""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .model import Allocation, Instance, ItemKind

DEFAULT_RANGES = {ItemKind.GOODS: (0, 20), ItemKind.CHORES: (-20, 0)}


def gen_random_instance(kind, n: int, m: int, low=None, high=None, seed: int = 0) -> Instance:
    """Integer valuations drawn uniformly from ``[low, high]``.

    The same arguments always give the same instance (numpy PCG64 seeded by
    ``seed``).  Goods need ``low >= 0``, chores need ``high <= 0``.
    """
    kind = ItemKind.coerce(kind)
    dlow, dhigh = DEFAULT_RANGES[kind]
    low = dlow if low is None else int(low)
    high = dhigh if high is None else int(high)
    if n < 1 or m < 0:
        raise InputError(f"need n >= 1 and m >= 0, got n={n}, m={m}")
    if low > high:
        raise InputError(f"empty value range [{low}, {high}]")
    if kind is ItemKind.GOODS and low < 0:
        raise InputError("goods values must be non-negative")
    if kind is ItemKind.CHORES and high > 0:
        raise InputError("chores values must be non-positive")
    rng = np.random.default_rng(seed)
    values = rng.integers(low, high + 1, size=(n, m), dtype=np.int64)
    return Instance(kind, values.tolist())


def random_allocation(n: int, m: int, rng: np.random.Generator) -> Allocation:
    return Allocation.from_owners((rng.integers(0, n, size=m) + 1).tolist(), n)


def all_allocations(n: int, m: int):
    """Every allocation of m items to n agents, in base-n order."""
    if m == 0:
        yield Allocation([[] for _ in range(n)])
        return
    owners = [1] * m
    while True:
        yield Allocation.from_owners(owners, n)
        k = m - 1
        while k >= 0 and owners[k] == n:
            owners[k] = 1
            k -= 1
        if k < 0:
            return
        owners[k] += 1

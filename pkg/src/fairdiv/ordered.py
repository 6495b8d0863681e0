"""Reduction to ordered instances and the picking-sequence lift back.

``to_ordered`` sorts every agent's row into non-increasing order (ties by
ascending item id); ``pick_by_seq`` replays an allocation of the ordered twin
as a picking sequence on the original instance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError
from .model import Allocation, Instance, validate_allocation

_INT64_SAFE = 2**62
_NUMPY_MIN_ITEMS = 256


@dataclass(frozen=True, eq=False)
class OrderedInstance:
    """The ordered twin of an instance.

    ``rank_to_item[i][r]`` is the original id of the item that agent ``i+1``
    ranks ``r+1``-th.  This is also that agent's picking preference order.
    """

    instance: Instance
    rank_to_item: tuple[Sequence[int], ...]
    source: Instance


def _order_row(row) -> tuple[list[int], list[int]]:
    """(sorted row, 1-based ids in that order): non-increasing value,
    ties by ascending id."""
    if len(row) >= _NUMPY_MIN_ITEMS and -_INT64_SAFE < min(row) and max(row) < _INT64_SAFE:
        arr = np.asarray(row, dtype=np.int64)
        order = np.argsort(-arr, kind="stable")
        return arr[order].tolist(), (order + 1).tolist()
    # sort is stable even with reverse=True, so equal values keep ascending ids
    order = sorted(range(len(row)), key=row.__getitem__, reverse=True)
    return [row[g] for g in order], [g + 1 for g in order]


def to_ordered(inst: Instance) -> OrderedInstance:
    rows, ranks = [], []
    for row in inst.rows:
        values, ids = _order_row(row)
        rows.append(tuple(values))
        ranks.append(ids)
    twin = Instance._from_scaled(inst.kind, rows, inst.scales)
    return OrderedInstance(twin, tuple(ranks), inst)


def _pick(prefs, sequence, n: int) -> list[list[int]]:
    """Run a picking sequence (0-based agents) over per-agent preference lists."""
    taken = bytearray(len(sequence) + 1)
    # each generator resumes where that agent last stopped and skips taken items
    pickers = [(g for g in pref if not taken[g]).__next__ for pref in prefs]
    bundles = [[] for _ in range(n)]
    appends = [b.append for b in bundles]
    for a in sequence:
        item = pickers[a]()
        taken[item] = 1
        appends[a](item)
    return bundles


def pick_by_seq(
    inst: Instance,
    ordered_alloc: Allocation,
    ordered: OrderedInstance | None = None,
) -> Allocation:
    """Lift an allocation of ``to_ordered(inst)`` back to ``inst``.

    At turn ``t`` the owner of ordered item ``t`` takes their favourite
    remaining original item (largest signed value, smallest id on ties).
    Each agent's preference list is sorted once and scanned at most once
    overall.  Pass ``ordered`` to reuse a previously computed
    ``to_ordered(inst)``.
    """
    if ordered is None or ordered.source is not inst:
        ordered = to_ordered(inst)
    problem = validate_allocation(ordered.instance, ordered_alloc)
    if problem is not None:
        raise InputError(f"invalid ordered allocation: {problem}")
    sequence = [a - 1 for a in ordered_alloc.owners(inst.m)]
    return Allocation(_pick(ordered.rank_to_item, sequence, inst.n))


def pick_by_owners(ordered: OrderedInstance, owners: Sequence[int]) -> Allocation:
    """``pick_by_seq`` for a twin given as 0-based owners per ordered item."""
    return Allocation(_pick(ordered.rank_to_item, owners, ordered.instance.n))

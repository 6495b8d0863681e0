"""Two-agent randomized ECE: ex-post EFX and ex-ante EF lotteries.

``ece_g_two`` / ``ece_c_two`` run two coupled envy-cycle-elimination
instances on an ordered instance so that every item lands with agent 1 in
one allocation and with agent 2 in the other.  ``bobw_goods`` /
``bobw_chores`` wrap them with the ordered reduction and return the
half/half lottery over the two lifted allocations.

Each round does O(1) work on incrementally maintained bundle values; the
final bundles are rebuilt from the per-round choices and swap positions.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError, InvariantViolation
from .model import Allocation, Instance, ItemKind, Lottery
from .ordered import pick_by_owners, to_ordered


@dataclass(frozen=True)
class TwinAllocations:
    A: Allocation
    B: Allocation

    def __iter__(self):
        return iter((self.A, self.B))


def _require(inst: Instance, kind: ItemKind, ordered: bool) -> None:
    if inst.n != 2:
        raise InputError(f"two-agent algorithm called with n={inst.n}")
    if inst.kind is not kind:
        raise InputError(f"expected a {kind.value} instance, got {inst.kind.value}")
    if ordered and not inst.is_ordered():
        raise InputError("instance is not ordered; apply to_ordered first")


def _dump(item, diffs, branches, swaps):
    dA1, dA2, dB1, dB2 = diffs
    return {
        "item": item,
        "v1(A1)-v1(A2)": dA1,
        "v2(A2)-v2(A1)": dA2,
        "v1(B1)-v1(B2)": dB1,
        "v2(B2)-v2(B1)": dB2,
        "rounds_done": len(branches),
        "swaps": swaps,
    }


def _core(u, w, chores: bool):
    """Shared round loop over ordered integer rows ``u`` (agent 1), ``w`` (agent 2).

    Per allocation C only the two differences ``v_1(C_1) - v_1(C_2)`` and
    ``v_2(C_2) - v_2(C_1)`` are kept; every test in the algorithm compares
    an agent's values for the two bundles of one allocation.  A swap negates
    both.  Returns per-round branch bits (0: A_1 and B_2 receive, 1: A_2 and
    B_1 receive) and the rounds after which A resp. B swapped bundles.
    """
    dA1 = dA2 = dB1 = dB2 = 0
    branches = bytearray()
    mark = branches.append
    swaps_a, swaps_b = [], []
    if chores:
        rounds = zip(range(len(u), 0, -1), reversed(u), reversed(w))
    else:
        rounds = zip(range(1, len(u) + 1), u, w)
    t = 0
    for g, x, y in rounds:
        if chores:
            # agent i envy-free in C iff v_i(C_i) >= v_i(C_other) (signed)
            first = dA1 >= 0 and dB2 >= 0
            second = not first and dA2 >= 0 and dB1 >= 0
        else:
            # agent 1 unenvied in C iff v_2(C_2) >= v_2(C_1); agent 2 iff v_1(C_1) >= v_1(C_2)
            first = dA2 >= 0 and dB1 >= 0
            second = not first and dA1 >= 0 and dB2 >= 0
        if first:
            dA1 += x
            dA2 -= y
            dB1 -= x
            dB2 += y
            mark(0)
        elif second:
            dA1 -= x
            dA2 += y
            dB1 += x
            dB2 -= y
            mark(1)
        else:
            what = "envy-free" if chores else "unenvied"
            raise InvariantViolation(
                f"two-agent ECE found no {what} agent pair",
                state=_dump(g, (dA1, dA2, dB1, dB2), branches, (swaps_a, swaps_b)),
            )
        # envy cycle: each agent strictly prefers the other bundle
        if dA1 < 0 and dA2 < 0:
            dA1, dA2 = -dA1, -dA2
            swaps_a.append(t)
        if dB1 < 0 and dB2 < 0:
            dB1, dB2 = -dB1, -dB2
            swaps_b.append(t)
        t += 1
    return branches, swaps_a, swaps_b


def _suffix_parity(swaps, m):
    flags = np.zeros(m, dtype=np.int64)
    flags[swaps] = 1
    return np.cumsum(flags[::-1])[::-1] & 1


def _twin_owners(u, w, chores: bool):
    """0-based owner of each ordered item (in id order) in A and in B."""
    m = len(u)
    branches, swaps_a, swaps_b = _core(u, w, chores)
    bits = np.frombuffer(bytes(branches), dtype=np.uint8).astype(np.int64)
    own_a = bits ^ _suffix_parity(swaps_a, m)
    own_b = (1 - bits) ^ _suffix_parity(swaps_b, m)
    if chores:
        own_a, own_b = own_a[::-1], own_b[::-1]
    return own_a, own_b


def _as_allocation(owners) -> Allocation:
    return Allocation([(np.flatnonzero(owners == a) + 1).tolist() for a in (0, 1)])


def _twins(inst: Instance, chores: bool) -> tuple[TwinAllocations, tuple]:
    own_a, own_b = _twin_owners(*inst.rows, chores)
    return TwinAllocations(_as_allocation(own_a), _as_allocation(own_b)), (own_a, own_b)


def ece_g_two(inst: Instance) -> TwinAllocations:
    """Coupled ECE for two agents on an ordered goods instance."""
    _require(inst, ItemKind.GOODS, ordered=True)
    return _twins(inst, chores=False)[0]


def ece_c_two(inst: Instance) -> TwinAllocations:
    """Coupled ECE for two agents on an ordered chores instance
    (non-increasing signed values)."""
    _require(inst, ItemKind.CHORES, ordered=True)
    return _twins(inst, chores=True)[0]


@dataclass(frozen=True)
class BobwResult:
    lottery: Lottery
    sample: Allocation
    ordered_twins: TwinAllocations
    coin: int


def _bobw(inst: Instance, kind: ItemKind, seed: int, timings: dict | None) -> BobwResult:
    _require(inst, kind, ordered=False)
    t0 = time.perf_counter()
    ordered = to_ordered(inst)
    t1 = time.perf_counter()
    twins, (own_a, own_b) = _twins(ordered.instance, chores=kind is ItemKind.CHORES)
    t2 = time.perf_counter()
    A = pick_by_owners(ordered, own_a.tolist())
    B = pick_by_owners(ordered, own_b.tolist())
    t3 = time.perf_counter()
    coin = random.Random(seed).getrandbits(1)
    if timings is not None:
        timings["to_ordered"] = t1 - t0
        timings["core_loop"] = t2 - t1
        timings["pick_by_seq"] = t3 - t2
    half = Fraction(1, 2)
    return BobwResult(Lottery([(half, A), (half, B)]), (A, B)[coin], twins, coin)


def bobw_goods(inst: Instance, seed: int = 0, timings: dict | None = None) -> BobwResult:
    """Half/half lottery over the two lifted twins of ``ece_g_two``.

    The sampled allocation is chosen by one bit drawn from
    ``random.Random(seed)``; no other randomness is consumed.  If ``timings``
    is a dict it receives per-phase wall times in seconds.
    """
    return _bobw(inst, ItemKind.GOODS, seed, timings)


def bobw_chores(inst: Instance, seed: int = 0, timings: dict | None = None) -> BobwResult:
    """Chores counterpart of :func:`bobw_goods`."""
    return _bobw(inst, ItemKind.CHORES, seed, timings)

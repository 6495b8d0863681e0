"""Exact data model: instances, allocations, lotteries and their JSON forms.

Agents and items are 1-based everywhere in the public API.  Valuations are
exact rationals (:class:`fractions.Fraction`).  Internally each agent's row is
stored as integers over a common per-agent denominator, so that the
algorithms compare and add plain ``int`` values; scaling one agent's row by a
positive constant leaves every comparison that agent makes unchanged.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InputError, ParseError

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


class ItemKind(enum.Enum):
    GOODS = "goods"
    CHORES = "chores"

    @classmethod
    def coerce(cls, kind) -> "ItemKind":
        if isinstance(kind, cls):
            return kind
        try:
            return cls(str(kind).lower())
        except ValueError:
            raise InputError(f"unknown item kind {kind!r} (expected 'goods' or 'chores')") from None


def parse_rational(token, field: str | None = None) -> Fraction:
    """Parse an integer or a ``"p/q"`` string into a normalized Fraction.

    >>> parse_rational("14/8")
    Fraction(7, 4)
    """
    if isinstance(token, bool):
        raise ParseError(f"expected a rational, got boolean {token!r}", field=field)
    if isinstance(token, int):
        return Fraction(token)
    if isinstance(token, Fraction):
        return token
    if isinstance(token, str):
        match = _RATIONAL_RE.match(token)
        if match is None:
            raise ParseError(f"malformed rational {token!r}", field=field)
        num = int(match.group(1))
        den = int(match.group(2)) if match.group(2) is not None else 1
        if den == 0:
            raise ParseError(f"zero denominator in {token!r}", field=field)
        return Fraction(num, den)
    raise ParseError(
        f"expected an integer or a 'p/q' string, got {type(token).__name__} {token!r}",
        field=field,
    )


def format_rational(value) -> int | str:
    """JSON token for a rational: an int when integral, else ``"p/q"``."""
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


class Instance:
    """An additive fair division instance with exact rational valuations.

    ``Instance("goods", [[3, 2, 1], [1, 2, 3]])`` builds a two-agent,
    three-good instance.  Entries may be ints, Fractions or ``"p/q"`` strings.
    """

    __slots__ = ("kind", "rows", "scales", "_values")

    def __init__(self, kind, values: Sequence[Sequence]):
        kind = ItemKind.coerce(kind)
        if len(values) == 0:
            raise InputError("an instance needs at least one agent")
        m = len(values[0])
        rows = []
        scales = []
        for i, raw in enumerate(values):
            if len(raw) != m:
                raise InputError(
                    f"agent {i + 1} has {len(raw)} values, expected {m} (dimension mismatch)"
                )
            if all(type(x) is int for x in raw):
                row = list(raw)
                scale = 1
            else:
                fracs = [parse_rational(x, field=f"values[{i}][{g}]") for g, x in enumerate(raw)]
                scale = 1
                for f in fracs:
                    scale = math.lcm(scale, f.denominator)
                row = [f.numerator * (scale // f.denominator) for f in fracs]
            _check_signs(kind, i, row)
            rows.append(tuple(row))
            scales.append(scale)
        self.kind = kind
        self.rows = tuple(rows)
        self.scales = tuple(scales)
        self._values = None

    @classmethod
    def _from_scaled(cls, kind: ItemKind, rows, scales) -> "Instance":
        # Trusted constructor: rows are integer tuples already in canonical scale.
        self = cls.__new__(cls)
        self.kind = kind
        self.rows = tuple(rows)
        self.scales = tuple(scales)
        self._values = None
        return self

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def m(self) -> int:
        return len(self.rows[0])

    @property
    def is_goods(self) -> bool:
        return self.kind is ItemKind.GOODS

    @property
    def values(self) -> tuple[tuple[Fraction, ...], ...]:
        if self._values is None:
            self._values = tuple(
                tuple(Fraction(x, s) for x in row) for row, s in zip(self.rows, self.scales)
            )
        return self._values

    def value(self, agent: int, item: int) -> Fraction:
        _check_agent(self, agent)
        if not 1 <= item <= self.m:
            raise InputError(f"item id {item} out of range 1..{self.m}")
        return Fraction(self.rows[agent - 1][item - 1], self.scales[agent - 1])

    def total(self, agent: int) -> Fraction:
        """The agent's value for the whole item set."""
        _check_agent(self, agent)
        return Fraction(sum(self.rows[agent - 1]), self.scales[agent - 1])

    def is_ordered(self) -> bool:
        return all(all(r[g] >= r[g + 1] for g in range(len(r) - 1)) for r in self.rows)

    def permute_agents(self, perm: Sequence[int]) -> "Instance":
        """Instance whose agent ``k`` has the row of original agent ``perm[k-1]``."""
        idx = [p - 1 for p in perm]
        if sorted(idx) != list(range(self.n)):
            raise InputError(f"{list(perm)} is not a permutation of 1..{self.n}")
        return Instance._from_scaled(
            self.kind, [self.rows[p] for p in idx], [self.scales[p] for p in idx]
        )

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.kind, self.rows, self.scales) == (other.kind, other.rows, other.scales)

    def __hash__(self):
        return hash((self.kind, self.rows, self.scales))

    def __repr__(self):
        rows = [[format_rational(v) for v in row] for row in self.values]
        if self.m > 12:
            return f"Instance({self.kind.value!r}, n={self.n}, m={self.m})"
        return f"Instance({self.kind.value!r}, {rows})"


def _check_signs(kind: ItemKind, i: int, row) -> None:
    if kind is ItemKind.GOODS:
        bad = next((g for g, x in enumerate(row) if x < 0), None)
        if bad is not None:
            raise InputError(
                f"sign violation: goods instance has negative value at values[{i}][{bad}]"
            )
    else:
        bad = next((g for g, x in enumerate(row) if x > 0), None)
        if bad is not None:
            raise InputError(
                f"sign violation: chores instance has positive value at values[{i}][{bad}]"
            )


def _check_agent(inst: Instance, agent: int) -> None:
    if not 1 <= agent <= inst.n:
        raise InputError(f"agent id {agent} out of range 1..{inst.n}")


@dataclass(frozen=True)
class Allocation:
    """A sequence of bundles; ``bundles[i-1]`` is agent ``i``'s item set."""

    bundles: tuple[frozenset[int], ...]

    def __init__(self, bundles: Iterable[Iterable[int]]):
        object.__setattr__(self, "bundles", tuple(frozenset(b) for b in bundles))

    @classmethod
    def from_owners(cls, owners: Sequence[int], n: int) -> "Allocation":
        """Build from ``owners[g-1]`` = agent receiving item ``g``."""
        bundles = [[] for _ in range(n)]
        for g, a in enumerate(owners, start=1):
            bundles[a - 1].append(g)
        return cls(bundles)

    @property
    def n(self) -> int:
        return len(self.bundles)

    def bundle(self, agent: int) -> frozenset[int]:
        return self.bundles[agent - 1]

    def owners(self, m: int) -> list[int]:
        owner = [0] * m
        for a, bundle in enumerate(self.bundles, start=1):
            for g in bundle:
                owner[g - 1] = a
        return owner

    def sorted_bundles(self) -> list[list[int]]:
        return [sorted(b) for b in self.bundles]

    def __repr__(self):
        return f"Allocation({self.sorted_bundles()})"


def bundle_value(inst: Instance, agent: int, bundle: Iterable[int]) -> Fraction:
    """Exact additive value ``v_agent(bundle)``."""
    _check_agent(inst, agent)
    row = inst.rows[agent - 1]
    m = inst.m
    total = 0
    for g in bundle:
        if not 1 <= g <= m:
            raise InputError(f"item id {g} out of range 1..{m}")
        total += row[g - 1]
    return Fraction(total, inst.scales[agent - 1])


def scaled_value(inst: Instance, agent_index: int, bundle: Iterable[int]) -> int:
    """Unchecked 0-based-agent value in the agent's integer scale."""
    row = inst.rows[agent_index]
    return sum(row[g - 1] for g in bundle)


def validate_allocation(inst: Instance, alloc: Allocation, partial: bool = False) -> str | None:
    """Return ``None`` if ``alloc`` is a complete allocation for ``inst``,
    otherwise a message naming the first violated condition.  With
    ``partial`` unallocated items are allowed (intermediate ECE states)."""
    if alloc.n != inst.n:
        return f"allocation has {alloc.n} bundles but the instance has {inst.n} agents"
    m = inst.m
    if sum(len(b) for b in alloc.bundles) == m:
        # fast path: m ids in range, pairwise distinct across bundles
        union = set().union(*alloc.bundles) if alloc.bundles else set()
        if len(union) == m and union == set(range(1, m + 1)):
            return None
    seen = [False] * m
    for a, bundle in enumerate(alloc.bundles, start=1):
        for g in sorted(bundle):
            if not isinstance(g, int) or isinstance(g, bool) or not 1 <= g <= m:
                return f"item id {g!r} in bundle of agent {a} out of range 1..{m}"
            if seen[g - 1]:
                return f"item {g} duplicated"
            seen[g - 1] = True
    if partial:
        return None
    for g in range(m):
        if not seen[g]:
            return f"item {g + 1} unallocated"
    return None


def require_valid(inst: Instance, alloc: Allocation, partial: bool = False) -> None:
    problem = validate_allocation(inst, alloc, partial)
    if problem is not None:
        raise InputError(f"invalid allocation: {problem}")


@dataclass(frozen=True)
class Lottery:
    """A finitely supported distribution over allocations."""

    support: tuple[tuple[Fraction, Allocation], ...]

    def __init__(self, support: Iterable[tuple]):
        entries = []
        total = Fraction(0)
        for k, (p, alloc) in enumerate(support):
            p = parse_rational(p, field=f"support[{k}].prob")
            if p < 0:
                raise InputError(f"negative probability {p} in support entry {k}")
            if not isinstance(alloc, Allocation):
                alloc = Allocation(alloc)
            entries.append((p, alloc))
            total += p
        if total != 1:
            raise InputError(f"lottery probabilities sum to {total}, not 1")
        object.__setattr__(self, "support", tuple(entries))

    @classmethod
    def uniform(cls, allocations: Sequence[Allocation]) -> "Lottery":
        p = Fraction(1, len(allocations))
        return cls([(p, a) for a in allocations])

    @classmethod
    def point(cls, alloc: Allocation) -> "Lottery":
        return cls([(Fraction(1), alloc)])

    @property
    def allocations(self) -> list[Allocation]:
        return [a for _, a in self.support]

    @property
    def probabilities(self) -> list[Fraction]:
        return [p for p, _ in self.support]


def validate_lottery(inst: Instance, lottery: Lottery) -> str | None:
    for k, (_, alloc) in enumerate(lottery.support):
        problem = validate_allocation(inst, alloc)
        if problem is not None:
            return f"support entry {k}: {problem}"
    return None


# JSON forms


def load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None


def _expect(obj, key, kind, where="top level"):
    if not isinstance(obj, dict):
        raise ParseError(f"expected a JSON object at {where}")
    if key not in obj:
        raise ParseError("missing required field", field=key)
    value = obj[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ParseError(f"expected an integer, got {value!r}", field=key)
    if kind is list and not isinstance(value, list):
        raise ParseError(f"expected a list, got {type(value).__name__}", field=key)
    return value


def instance_to_dict(inst: Instance) -> dict:
    return {
        "kind": inst.kind.value,
        "agents": inst.n,
        "items": inst.m,
        "values": [[format_rational(v) for v in row] for row in inst.values],
    }


def instance_from_dict(obj) -> Instance:
    kind = _expect(obj, "kind", str)
    try:
        kind = ItemKind(kind)
    except ValueError:
        raise ParseError(f"unknown kind {kind!r}", field="kind") from None
    n = _expect(obj, "agents", int)
    m = _expect(obj, "items", int)
    values = _expect(obj, "values", list)
    if n < 1:
        raise ParseError("need at least one agent", field="agents")
    if m < 0:
        raise ParseError("item count must be non-negative", field="items")
    if len(values) != n:
        raise ParseError(f"dimension mismatch: {len(values)} rows for {n} agents", field="values")
    rows = []
    for i, row in enumerate(values):
        if not isinstance(row, list) or len(row) != m:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise ParseError(
                f"dimension mismatch: expected {m} values, got {got}", field=f"values[{i}]"
            )
        rows.append([parse_rational(x, field=f"values[{i}][{g}]") for g, x in enumerate(row)])
    try:
        return Instance(kind, rows)
    except InputError as exc:
        raise ParseError(str(exc), field="values") from None


def parse_instance(text: str) -> Instance:
    return instance_from_dict(load_json(text))


def serialize_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst))


def allocation_to_dict(alloc: Allocation) -> dict:
    return {"bundles": alloc.sorted_bundles()}


def _bundles_from(value, field) -> Allocation:
    if not isinstance(value, list):
        raise ParseError("expected a list of bundles", field=field)
    bundles = []
    for a, bundle in enumerate(value):
        if not isinstance(bundle, list):
            raise ParseError("expected a list of item ids", field=f"{field}[{a}]")
        for g in bundle:
            if isinstance(g, bool) or not isinstance(g, int):
                raise ParseError(f"item id must be an integer, got {g!r}", field=f"{field}[{a}]")
        if len(set(bundle)) != len(bundle):
            raise ParseError("repeated item id within a bundle", field=f"{field}[{a}]")
        bundles.append(bundle)
    return Allocation(bundles)


def allocation_from_dict(obj) -> Allocation:
    return _bundles_from(_expect(obj, "bundles", list), "bundles")


def parse_allocation(text: str) -> Allocation:
    return allocation_from_dict(load_json(text))


def serialize_allocation(alloc: Allocation) -> str:
    return json.dumps(allocation_to_dict(alloc))


def lottery_to_dict(lottery: Lottery) -> dict:
    return {
        "support": [
            {"prob": format_rational(p), "bundles": a.sorted_bundles()} for p, a in lottery.support
        ]
    }


def lottery_from_dict(obj) -> Lottery:
    support = _expect(obj, "support", list)
    entries = []
    for k, entry in enumerate(support):
        if not isinstance(entry, dict) or "prob" not in entry or "bundles" not in entry:
            raise ParseError("expected {'prob': ..., 'bundles': [...]}", field=f"support[{k}]")
        p = parse_rational(entry["prob"], field=f"support[{k}].prob")
        entries.append((p, _bundles_from(entry["bundles"], f"support[{k}].bundles")))
    try:
        return Lottery(entries)
    except ParseError:
        raise
    except InputError as exc:
        raise ParseError(str(exc), field="support") from None


def parse_lottery(text: str) -> Lottery:
    return lottery_from_dict(load_json(text))


def serialize_lottery(lottery: Lottery) -> str:
    return json.dumps(lottery_to_dict(lottery))

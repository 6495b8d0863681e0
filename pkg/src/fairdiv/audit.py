"""Decision procedures for EF, PROP, EFX, EF1, MMS and Epistemic EFX.

MMS and EEFX are decided by exhaustive enumeration and refuse to run when the
search space exceeds the oracle budget (``10**7`` assignments by default,
overridable through the ``FAIRDIV_ORACLE_BUDGET`` environment variable).

EF1 follows the usual Budish / Lipton et al. definition: envy towards ``j``
disappears after removing a single good from ``A_j`` (goods) or a single
chore from ``A_i`` (chores).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InputError, OracleLimitError
from .model import Allocation, Instance, format_rational, parse_rational, require_valid

DEFAULT_ORACLE_BUDGET = 10**7


def oracle_budget() -> int:
    raw = os.environ.get("FAIRDIV_ORACLE_BUDGET")
    if raw is None:
        return DEFAULT_ORACLE_BUDGET
    try:
        budget = int(raw)
    except ValueError:
        raise InputError(f"FAIRDIV_ORACLE_BUDGET must be an integer, got {raw!r}") from None
    if budget < 1:
        raise InputError("FAIRDIV_ORACLE_BUDGET must be positive")
    return budget


@dataclass(frozen=True)
class FairnessVerdict:
    """Outcome of one fairness check.

    ``witness`` is ``None`` when satisfied; otherwise ``(i,)`` for per-agent
    notions, ``(i, j)`` for pairwise ones and ``(i, j, item)`` when the
    definition quantifies over a removed item.
    """

    notion: str
    satisfied: bool
    witness: tuple | None = None
    certificates: dict[int, Allocation] | None = field(default=None, compare=False)

    def __bool__(self):
        return self.satisfied

    def to_dict(self) -> dict:
        out = {"notion": self.notion, "satisfied": self.satisfied}
        if self.witness is not None:
            out["witness"] = list(self.witness)
        if self.certificates:
            out["certificates"] = {
                str(a): alloc.sorted_bundles() for a, alloc in sorted(self.certificates.items())
            }
        return out


def _ok(notion, **kw):
    return FairnessVerdict(notion, True, None, **kw)


def _fail(notion, *witness):
    return FairnessVerdict(notion, False, tuple(witness))


def value_matrix(inst: Instance, alloc: Allocation) -> list[list[int]]:
    """``V[i][j]`` = agent ``i+1``'s scaled value for bundle ``j+1``."""
    out = []
    for row in inst.rows:
        out.append([sum(row[g - 1] for g in bundle) for bundle in alloc.bundles])
    return out


def is_ef(inst: Instance, alloc: Allocation) -> FairnessVerdict:
    require_valid(inst, alloc)
    V = value_matrix(inst, alloc)
    for i in range(inst.n):
        for j in range(inst.n):
            if i != j and V[i][i] < V[i][j]:
                return _fail("ef", i + 1, j + 1)
    return _ok("ef")


def prop_share(inst: Instance, agent: int) -> Fraction:
    return inst.total(agent) / inst.n


def envy_pairs(inst: Instance, alloc: Allocation) -> list[tuple[int, int]]:
    """Every (i, j) with agent i envying agent j, in lexicographic order."""
    require_valid(inst, alloc)
    V = value_matrix(inst, alloc)
    return [
        (i + 1, j + 1) for i in range(inst.n) for j in range(inst.n) if V[i][i] < V[i][j]
    ]


def is_prop(inst: Instance, alloc: Allocation) -> FairnessVerdict:
    require_valid(inst, alloc)
    n = inst.n
    for i, row in enumerate(inst.rows):
        own = sum(row[g - 1] for g in alloc.bundles[i])
        if own * n < sum(row):
            return _fail("prop", i + 1)
    return _ok("prop")


def is_efx(inst: Instance, alloc: Allocation) -> FairnessVerdict:
    require_valid(inst, alloc)
    V = value_matrix(inst, alloc)
    goods = inst.is_goods
    for i, row in enumerate(inst.rows):
        own = V[i][i]
        for j in range(inst.n):
            if i == j or V[i][j] <= own:
                continue
            if goods:
                for g in sorted(alloc.bundles[j]):
                    if row[g - 1] > 0 and own < V[i][j] - row[g - 1]:
                        return _fail("efx", i + 1, j + 1, g)
            else:
                for c in sorted(alloc.bundles[i]):
                    if row[c - 1] < 0 and own - row[c - 1] < V[i][j]:
                        return _fail("efx", i + 1, j + 1, c)
    return _ok("efx")


def is_ef1(inst: Instance, alloc: Allocation) -> FairnessVerdict:
    require_valid(inst, alloc)
    V = value_matrix(inst, alloc)
    goods = inst.is_goods
    for i, row in enumerate(inst.rows):
        own = V[i][i]
        for j in range(inst.n):
            if i == j or V[i][j] <= own:
                continue
            if goods:
                # envy implies A_j is non-empty
                best = max(row[g - 1] for g in alloc.bundles[j])
                if own < V[i][j] - best:
                    return _fail("ef1", i + 1, j + 1)
            else:
                best = min(row[c - 1] for c in alloc.bundles[i])
                if own - best < V[i][j]:
                    return _fail("ef1", i + 1, j + 1)
    return _ok("ef1")


@dataclass(frozen=True)
class MmsProfile:
    values: tuple[Fraction, ...]
    partitions: tuple[Allocation, ...]

    def value(self, agent: int) -> Fraction:
        return self.values[agent - 1]

    def to_dict(self) -> dict:
        return {
            "values": [format_rational(v) for v in self.values],
            "partitions": [p.sorted_bundles() for p in self.partitions],
        }


def _guard(size: int, budget: int | None, what: str) -> None:
    budget = oracle_budget() if budget is None else budget
    if size > budget:
        raise OracleLimitError(
            f"oracle limit: {what} needs {size} assignments, budget is {budget}"
        )


def _maximin_partition(row, n: int) -> tuple[int, list[int]]:
    """Exhaustive max-min over n-partitions of the items for one integer row.

    Assignments are visited in increasing base-n order (item 1 most
    significant).  Only restricted-growth assignments are expanded: every
    assignment has a relabelling that is lexicographically no larger and has
    the same multiset of bundle values, so the first maximiser found is the
    first one in full base-n order.
    """
    m = len(row)
    sums = [0] * n
    assign = [0] * m
    best = [None, None]

    def rec(k, used):
        if k == m:
            low = min(sums)
            if best[0] is None or low > best[0]:
                best[0] = low
                best[1] = assign.copy()
            return
        v = row[k]
        for b in range(min(used + 1, n)):
            sums[b] += v
            assign[k] = b
            rec(k + 1, max(used, b + 1))
            sums[b] -= v

    rec(0, 0)
    return best[0], best[1]


def mms_value(inst: Instance, agent: int, budget: int | None = None) -> tuple[Fraction, Allocation]:
    """Exact maximin share of one agent with a witnessing partition."""
    _guard(inst.n ** inst.m, budget, f"MMS with n={inst.n}, m={inst.m}")
    value, assign = _maximin_partition(inst.rows[agent - 1], inst.n)
    witness = Allocation.from_owners([b + 1 for b in assign], inst.n)
    return Fraction(value, inst.scales[agent - 1]), witness


def mms_profile(inst: Instance, budget: int | None = None) -> MmsProfile:
    values, parts = [], []
    for agent in range(1, inst.n + 1):
        v, w = mms_value(inst, agent, budget)
        values.append(v)
        parts.append(w)
    return MmsProfile(tuple(values), tuple(parts))


def alpha_mms_check(
    inst: Instance,
    alloc: Allocation,
    alpha,
    profile: MmsProfile | None = None,
    budget: int | None = None,
) -> FairnessVerdict:
    """``v_i(A_i) >= alpha * MMS_i`` for every agent (signed values)."""
    alpha = parse_rational(alpha, field="alpha")
    require_valid(inst, alloc)
    if profile is None:
        profile = mms_profile(inst, budget)
    notion = f"mms:{format_rational(alpha)}"
    for i, row in enumerate(inst.rows):
        own = Fraction(sum(row[g - 1] for g in alloc.bundles[i]), inst.scales[i])
        if own < alpha * profile.values[i]:
            return _fail(notion, i + 1)
    return _ok(notion)


def _efx_certificate(inst: Instance, alloc: Allocation, i: int, budget) -> Allocation | None:
    """Search allocations B with B_i = A_i in which agent i (0-based) is
    EFX-satisfied.  Returns the first one in base-(n-1) order, or None."""
    n, m = inst.n, inst.m
    row = inst.rows[i]
    own_items = alloc.bundles[i]
    own = sum(row[g - 1] for g in own_items)
    rest = [g for g in range(1, m + 1) if g not in own_items]
    others = [a for a in range(n) if a != i]
    _guard((n - 1) ** len(rest), budget, f"EEFX certificate for agent {i + 1}")
    goods = inst.is_goods

    if not goods:
        negatives = [row[c - 1] for c in own_items if row[c - 1] < 0]
        # every other bundle must be worth at most own - (mildest chore)
        limit = own - max(negatives) if negatives else None

    sums = [0] * len(others)
    minpos = [None] * len(others)
    assign = [0] * len(rest)

    def rec(k):
        if k == len(rest):
            if goods:
                return True
            return limit is None or all(s <= limit for s in sums)
        g = rest[k]
        v = row[g - 1]
        for b in range(len(others)):
            old_sum, old_min = sums[b], minpos[b]
            sums[b] += v
            if v > 0 and (old_min is None or v < old_min):
                minpos[b] = v
            # goods: the EFX gap of a bundle never shrinks as items are added
            if not goods or minpos[b] is None or sums[b] - minpos[b] <= own:
                assign[k] = b
                if rec(k + 1):
                    return True
            sums[b], minpos[b] = old_sum, old_min
        return False

    if not rec(0):
        return None
    bundles = [set() for _ in range(n)]
    bundles[i] = set(own_items)
    for g, b in zip(rest, assign):
        bundles[others[b]].add(g)
    return Allocation(bundles)


def _efx_satisfied(inst: Instance, alloc: Allocation, i: int) -> bool:
    row = inst.rows[i]
    own = sum(row[g - 1] for g in alloc.bundles[i])
    for j, bundle in enumerate(alloc.bundles):
        if j == i:
            continue
        other = sum(row[g - 1] for g in bundle)
        if other <= own:
            continue
        if inst.is_goods:
            if any(row[g - 1] > 0 and own < other - row[g - 1] for g in bundle):
                return False
        elif any(row[c - 1] < 0 and own - row[c - 1] < other for c in alloc.bundles[i]):
            return False
    return True


def is_eefx(inst: Instance, alloc: Allocation, budget: int | None = None) -> FairnessVerdict:
    """Epistemic EFX with one certificate allocation per agent on success."""
    require_valid(inst, alloc)
    certs = {}
    for i in range(inst.n):
        if _efx_satisfied(inst, alloc, i):
            certs[i + 1] = alloc
            continue
        cert = _efx_certificate(inst, alloc, i, budget)
        if cert is None:
            return _fail("eefx", i + 1)
        certs[i + 1] = cert
    return _ok("eefx", certificates=certs)


NOTIONS = ("ef", "prop", "efx", "ef1", "eefx", "mms")


def parse_notions(text: str) -> list[tuple[str, Fraction | None]]:
    """Parse ``"efx,mms:4/5"`` into ``[("efx", None), ("mms", 4/5)]``."""
    out = []
    for token in text.split(","):
        token = token.strip().lower()
        if not token:
            continue
        name, _, arg = token.partition(":")
        if name not in NOTIONS:
            raise InputError(f"unknown fairness notion {name!r}; known: {', '.join(NOTIONS)}")
        if arg and name != "mms":
            raise InputError(f"notion {name!r} takes no parameter")
        alpha = None
        if name == "mms":
            alpha = parse_rational(arg, field=token) if arg else Fraction(1)
        out.append((name, alpha))
    if not out:
        raise InputError("no fairness notions requested")
    return out


def run_audit(inst: Instance, alloc: Allocation, notions="ef,prop,efx,ef1,eefx,mms") -> dict:
    """Evaluate the requested notions and return a JSON-ready report."""
    if isinstance(notions, str):
        notions = parse_notions(notions)
    require_valid(inst, alloc)
    profile = None
    verdicts = []
    for name, alpha in notions:
        if name == "mms":
            if profile is None:
                profile = mms_profile(inst)
            verdicts.append(alpha_mms_check(inst, alloc, alpha, profile))
        else:
            check = {"ef": is_ef, "prop": is_prop, "efx": is_efx, "ef1": is_ef1, "eefx": is_eefx}
            verdicts.append(check[name](inst, alloc))
    report = {
        "satisfied": all(v.satisfied for v in verdicts),
        "verdicts": [v.to_dict() for v in verdicts],
        "own_values": [
            format_rational(sum(inst.values[i][g - 1] for g in alloc.bundles[i]))
            for i in range(inst.n)
        ],
        "prop_shares": [format_rational(prop_share(inst, a)) for a in range(1, inst.n + 1)],
    }
    if profile is not None:
        report["mms"] = profile.to_dict()
    return report

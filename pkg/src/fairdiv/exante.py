"""Ex-ante evaluation of lotteries and exact linear feasibility.

The feasibility question "is there a distribution over these allocations that
is ex-ante PROP?" is a small linear system over the probabilities.  It is
decided exactly by Fourier-Motzkin elimination over Fractions.  Every derived
row carries its multipliers over the original constraints, so an
infeasibility verdict comes with a Farkas certificate that can be checked
independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .audit import FairnessVerdict
from .errors import InputError
from .model import Allocation, Instance, Lottery, format_rational, parse_rational, validate_lottery

GE = ">="
EQ = "="
MAX_ALLOCATIONS = 12


# ---------------------------------------------------------------- lotteries


def expected_matrix(inst: Instance, lottery: Lottery) -> list[list[Fraction]]:
    """``E[i][j]`` = expected value of agent ``i+1`` for agent ``j+1``'s bundle."""
    problem = validate_lottery(inst, lottery)
    if problem is not None:
        raise InputError(f"invalid lottery: {problem}")
    n = inst.n
    totals = [[0] * n for _ in range(n)]
    for p, alloc in lottery.support:
        for i, row in enumerate(inst.rows):
            for j, bundle in enumerate(alloc.bundles):
                totals[i][j] += p * sum(row[g - 1] for g in bundle)
    return [
        [Fraction(totals[i][j]) / inst.scales[i] for j in range(n)] for i in range(n)
    ]


def expected_values(inst: Instance, lottery: Lottery) -> list[Fraction]:
    E = expected_matrix(inst, lottery)
    return [E[i][i] for i in range(inst.n)]


def is_exante_prop(inst: Instance, lottery: Lottery) -> FairnessVerdict:
    E = expected_matrix(inst, lottery)
    for i in range(inst.n):
        if E[i][i] < inst.total(i + 1) / inst.n:
            return FairnessVerdict("exante-prop", False, (i + 1,))
    return FairnessVerdict("exante-prop", True)


def is_exante_ef(inst: Instance, lottery: Lottery) -> FairnessVerdict:
    E = expected_matrix(inst, lottery)
    for i in range(inst.n):
        for j in range(inst.n):
            if i != j and E[i][i] < E[i][j]:
                return FairnessVerdict("exante-ef", False, (i + 1, j + 1))
    return FairnessVerdict("exante-ef", True)


def lottery_report(inst: Instance, lottery: Lottery) -> dict:
    E = expected_matrix(inst, lottery)
    prop = is_exante_prop(inst, lottery)
    ef = is_exante_ef(inst, lottery)
    return {
        "satisfied": prop.satisfied and ef.satisfied,
        "expected_values": [format_rational(E[i][i]) for i in range(inst.n)],
        "expected_matrix": [[format_rational(x) for x in row] for row in E],
        "prop_shares": [format_rational(inst.total(a) / inst.n) for a in range(1, inst.n + 1)],
        "verdicts": [prop.to_dict(), ef.to_dict()],
    }


# ----------------------------------------------------------- linear systems


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[Fraction, ...]
    relation: str
    bound: Fraction
    name: str = ""

    def holds(self, x: Sequence[Fraction]) -> bool:
        lhs = sum(c * v for c, v in zip(self.coeffs, x))
        return lhs == self.bound if self.relation == EQ else lhs >= self.bound


@dataclass(frozen=True)
class LinearSystem:
    nvars: int
    constraints: tuple[Constraint, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        for c in self.constraints:
            if len(c.coeffs) != self.nvars:
                raise InputError(
                    f"constraint {c.name or c} has {len(c.coeffs)} coefficients, expected {self.nvars}"
                )
            if c.relation not in (GE, EQ):
                raise InputError(f"unknown relation {c.relation!r}")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{k + 1}" for k in range(self.nvars)))

    def is_satisfied_by(self, x: Sequence[Fraction]) -> bool:
        return all(c.holds(x) for c in self.constraints)


@dataclass(frozen=True)
class Certificate:
    """Multipliers over the original constraints whose combination reads
    ``0 >= gap`` with ``gap > 0`` (multipliers of ``>=`` rows are non-negative)."""

    multipliers: tuple[Fraction, ...]
    gap: Fraction

    def to_dict(self, system: LinearSystem) -> dict:
        return {
            "derived": f"0 >= {format_rational(self.gap)}",
            "multipliers": {
                (c.name or f"c{r}"): format_rational(y)
                for r, (c, y) in enumerate(zip(system.constraints, self.multipliers))
                if y != 0
            },
        }


def check_certificate(system: LinearSystem, cert: Certificate) -> bool:
    """Independent check that ``cert`` proves ``system`` infeasible."""
    if len(cert.multipliers) != len(system.constraints):
        return False
    combo = [Fraction(0)] * system.nvars
    rhs = Fraction(0)
    for c, y in zip(system.constraints, cert.multipliers):
        if c.relation == GE and y < 0:
            return False
        for k, a in enumerate(c.coeffs):
            combo[k] += y * a
        rhs += y * c.bound
    return all(a == 0 for a in combo) and rhs > 0 and rhs == cert.gap


@dataclass
class _Row:
    coeffs: list[Fraction]
    bound: Fraction
    mult: list[Fraction]
    eq: bool = False

    def scaled(self, s: Fraction) -> "_Row":
        return _Row([a * s for a in self.coeffs], self.bound * s, [y * s for y in self.mult], self.eq)

    def plus(self, other: "_Row", s: Fraction = Fraction(1)) -> "_Row":
        return _Row(
            [a + s * b for a, b in zip(self.coeffs, other.coeffs)],
            self.bound + s * other.bound,
            [y + s * z for y, z in zip(self.mult, other.mult)],
            self.eq and other.eq,
        )


class Infeasible(Exception):
    def __init__(self, cert: Certificate):
        self.cert = cert


def _initial_rows(system: LinearSystem) -> list[_Row]:
    rows = []
    r_total = len(system.constraints)
    for r, c in enumerate(system.constraints):
        mult = [Fraction(0)] * r_total
        mult[r] = Fraction(1)
        rows.append(_Row([Fraction(a) for a in c.coeffs], Fraction(c.bound), mult, c.relation == EQ))
    return rows


def _prune(rows: list[_Row]) -> list[_Row]:
    """Drop tautologies, detect contradictions, keep the tightest of rows that
    share a normalised coefficient vector."""
    best: dict = {}
    eqs = []
    for row in rows:
        lead = next((a for a in row.coeffs if a != 0), None)
        if lead is None:
            if row.eq and row.bound != 0:
                # 0 = b with b != 0: flip sign if needed to read 0 >= gap
                s = Fraction(1) if row.bound > 0 else Fraction(-1)
                raise Infeasible(Certificate(tuple(y * s for y in row.mult), abs(row.bound)))
            if not row.eq and row.bound > 0:
                raise Infeasible(Certificate(tuple(row.mult), row.bound))
            continue
        if row.eq:
            eqs.append(row)
            continue
        norm = row.scaled(1 / abs(lead))
        key = tuple(norm.coeffs)
        if key not in best or norm.bound > best[key].bound:
            best[key] = norm
    return eqs + list(best.values())


def _eliminate(rows: list[_Row], k: int) -> list[_Row]:
    eq = next((r for r in rows if r.eq and r.coeffs[k] != 0), None)
    if eq is not None:
        out = []
        for r in rows:
            if r is eq:
                continue
            if r.coeffs[k] != 0:
                r = r.plus(eq, -r.coeffs[k] / eq.coeffs[k])
            out.append(r)
        return _prune(out)
    pos = [r for r in rows if r.coeffs[k] > 0]
    neg = [r for r in rows if r.coeffs[k] < 0]
    out = [r for r in rows if r.coeffs[k] == 0]
    for p in pos:
        sp = 1 / p.coeffs[k]
        for q in neg:
            # p/a_p + q/|a_q| cancels variable k with non-negative weights
            out.append(p.scaled(sp).plus(q, 1 / -q.coeffs[k]))
    return _prune(out)


def _bounds(rows: list[_Row], k: int, x: dict[int, Fraction]):
    lo = hi = None
    for r in rows:
        a = r.coeffs[k]
        if a == 0:
            continue
        rest = r.bound - sum(c * x[j] for j, c in enumerate(r.coeffs) if j != k and c != 0)
        v = rest / a
        if r.eq:
            lo = v if lo is None else max(lo, v)
            hi = v if hi is None else min(hi, v)
        elif a > 0:
            lo = v if lo is None else max(lo, v)
        else:
            hi = v if hi is None else min(hi, v)
    return lo, hi


Pick = Callable[[Fraction | None, Fraction | None], Fraction]


def pick_mid(lo, hi):
    if lo is not None and hi is not None:
        return (lo + hi) / 2
    if lo is not None:
        return lo
    if hi is not None:
        return hi
    return Fraction(0)


def pick_min(lo, hi):
    return lo if lo is not None else (hi if hi is not None else Fraction(0))


def pick_max(lo, hi):
    return hi if hi is not None else (lo if lo is not None else Fraction(0))


_PICKS = {"mid": pick_mid, "min": pick_min, "max": pick_max}


@dataclass
class FeasibilityResult:
    feasible: bool
    witness: tuple[Fraction, ...] | None = None
    certificate: Certificate | None = None
    system: LinearSystem | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {"feasible": self.feasible}
        if self.witness is not None:
            out["witness"] = [format_rational(v) for v in self.witness]
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict(self.system)
        return out


def solve(
    system: LinearSystem,
    first: Sequence[int] = (),
    picks: dict[int, str | Pick] | str = "mid",
) -> FeasibilityResult:
    """Decide feasibility; on success back-substitute a witness.

    Variables (0-based) listed in ``first`` are fixed first, then the rest in
    index order; each takes the value chosen by its pick rule ("mid", "min",
    "max" or a callable on the feasible interval) given the earlier ones.
    Midpoints keep witnesses interior unless the interval is a point.
    """
    K = system.nvars
    back_order = list(first) + [k for k in range(K) if k not in first]
    stages = []
    try:
        rows = _prune(_initial_rows(system))
        for k in reversed(back_order):
            stages.append((k, rows))
            rows = _eliminate(rows, k)
    except Infeasible as exc:
        return FeasibilityResult(False, certificate=exc.cert, system=system)
    x: dict[int, Fraction] = {}
    for k, rows in reversed(stages):
        lo, hi = _bounds(rows, k, x)
        rule = picks if isinstance(picks, str) else picks.get(k, "mid")
        rule = _PICKS[rule] if isinstance(rule, str) else rule
        x[k] = Fraction(rule(lo, hi))
    witness = tuple(x[k] for k in range(K))
    if not system.is_satisfied_by(witness):
        raise AssertionError("back-substituted witness violates the system")
    return FeasibilityResult(True, witness=witness, system=system)


def variable_range(system: LinearSystem, k: int) -> tuple[Fraction | None, Fraction | None] | None:
    """Exact projection of the feasible set onto variable ``k``; None if empty."""
    try:
        rows = _prune(_initial_rows(system))
        for j in reversed(range(system.nvars)):
            if j != k:
                rows = _eliminate(rows, j)
    except Infeasible:
        return None
    return _bounds(rows, k, {})


# ------------------------------------------------------ ex-ante PROP systems


def prop_constraints(
    inst: Instance, allocations: Sequence[Allocation], tag: str = ""
) -> list[Constraint]:
    """``sum_k p_k v_i(A^(k)_i) >= v_i(M)/n`` for every agent i."""
    out = []
    for i in range(inst.n):
        coeffs = tuple(
            Fraction(sum(inst.rows[i][g - 1] for g in a.bundles[i]), inst.scales[i])
            for a in allocations
        )
        out.append(Constraint(coeffs, GE, inst.total(i + 1) / inst.n, f"{tag}prop[{i + 1}]"))
    return out


def simplex_constraints(K: int) -> list[Constraint]:
    one = Fraction(1)
    out = [Constraint(tuple([one] * K), EQ, one, "sum(p)=1")]
    for k in range(K):
        unit = tuple(one if j == k else Fraction(0) for j in range(K))
        out.append(Constraint(unit, GE, Fraction(0), f"p{k + 1}>=0"))
    return out


def prop_system(blocks: Sequence[tuple[Instance, Sequence[Allocation]]], tags=None) -> LinearSystem:
    """One system over shared probabilities p_1..p_K; each block contributes
    the PROP constraints of its instance under its K allocations."""
    K = len(blocks[0][1])
    if any(len(allocs) != K for _, allocs in blocks):
        raise InputError("every block must list the same number of allocations")
    if K == 0:
        raise InputError("need at least one allocation")
    if K > MAX_ALLOCATIONS:
        raise InputError(f"limit: at most {MAX_ALLOCATIONS} allocations, got {K}")
    tags = tags or [f"I{b + 1}." if len(blocks) > 1 else "" for b in range(len(blocks))]
    constraints = simplex_constraints(K)
    for (inst, allocs), tag in zip(blocks, tags):
        for a in allocs:
            problem = validate_lottery(inst, Lottery.point(a))
            if problem is not None:
                raise InputError(f"allocation {a}: {problem}")
        constraints += prop_constraints(inst, allocs, tag)
    return LinearSystem(K, tuple(constraints), tuple(f"p{k + 1}" for k in range(K)))


def find_exante_prop_lottery(
    inst: Instance, allocations: Sequence[Allocation], **solve_kw
) -> FeasibilityResult:
    """Decide whether some distribution over ``allocations`` is ex-ante PROP."""
    return solve(prop_system([(inst, allocations)]), **solve_kw)


# ---------------------------------------------------------------- hard-instance window


def check_hard_params(delta, eps) -> tuple[Fraction, Fraction]:
    delta = parse_rational(delta, field="delta")
    eps = parse_rational(eps, field="eps")
    if not 0 < delta <= Fraction(1, 4):
        raise InputError(f"delta must lie in (0, 1/4], got {delta}")
    if not 0 < eps <= delta / 3:
        raise InputError(f"eps must lie in (0, delta/3], got {eps}")
    return delta, eps


def lemma41_bounds(delta, eps) -> tuple[Fraction, Fraction]:
    """Interval that must contain p_5 and p_6 for ex-ante PROP on the
    three-agent hard instance."""
    delta, eps = check_hard_params(delta, eps)
    d = delta - eps
    lower = (1 - 3 * d) / (3 * (1 - 2 * d))
    upper = (1 + 3 * delta) / (3 * (1 - 2 * delta + 2 * eps))
    return lower, upper

"""The three-agent, nine-good family on which randomized ECE cannot be
ex-ante PROP, with end-to-end verifiers.

Agents agree on every good except good 4.  ECE has six execution paths,
determined by who receives goods 1 and 2; the verifiers recompute the outcome
table from the engine, check the probability window for paths (2,1) and
(3,1), and show that one shared distribution over the six paths cannot be
ex-ante PROP for the instance and its two agent rotations simultaneously.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .ece import enumerate_ece_outcomes
from .errors import InputError
from .exante import (
    EQ,
    Certificate,
    check_certificate,
    check_hard_params,
    find_exante_prop_lottery,
    lemma41_bounds,
    prop_system,
    solve,
    variable_range,
)
from .model import Allocation, Instance, format_rational

# (good-1 receiver, good-2 receiver) in outcome-table order
TABLE_KEYS = ((1, 3), (2, 3), (1, 2), (3, 2), (2, 1), (3, 1))

_B1 = (1, 6, 7, 9)
_B2 = (2, 5, 8)
_B3 = (3, 4)
EXPECTED_ALLOCATIONS = {
    (1, 3): (_B1, _B3, _B2),
    (2, 3): (_B1, _B3, _B2),
    (1, 2): (_B1, _B2, _B3),
    (3, 2): (_B1, _B2, _B3),
    (2, 1): (_B2, _B1, _B3),
    (3, 1): (_B2, _B3, _B1),
}

ROTATIONS = ((1, 2, 3), (2, 3, 1), (3, 1, 2))
DEFAULT_DELTA = Fraction(1, 100)
DEFAULT_EPS = Fraction(1, 300)


@dataclass(frozen=True)
class HardParams:
    delta: Fraction
    eps: Fraction
    agent_permutation: tuple[int, int, int] = (1, 2, 3)

    def __post_init__(self):
        delta, eps = check_hard_params(self.delta, self.eps)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "eps", eps)
        perm = tuple(self.agent_permutation)
        if sorted(perm) != [1, 2, 3]:
            raise InputError(f"agent_permutation must permute (1, 2, 3), got {perm}")
        object.__setattr__(self, "agent_permutation", perm)

    def to_dict(self) -> dict:
        return {
            "delta": format_rational(self.delta),
            "eps": format_rational(self.eps),
            "agent_permutation": list(self.agent_permutation),
        }


def _role_rows(delta, eps):
    special = [3 + 2 * eps, 3 + eps, 3, 2 - delta, 1 + delta, 1, 1, 1, 1]
    common = [3 + 2 * eps, 3 + eps, 3, 2 + 2 * delta, 1 + delta, 1, 1, 1, 1]
    return {1: special, 2: common, 3: common}


def make_hard_instance(params: HardParams) -> Instance:
    """Agent ``i`` gets the row of role ``agent_permutation[i-1]``; role 1 is
    the agent that values good 4 at ``2 - delta``."""
    rows = _role_rows(params.delta, params.eps)
    return Instance("goods", [rows[r] for r in params.agent_permutation])


def expected_own_values(delta, eps) -> dict[tuple[int, int], tuple[Fraction, ...]]:
    """Own-bundle values of the three agents for each path (identity roles)."""
    hi = 6 + 2 * eps
    mid = 5 + 2 * delta
    lo = 5 + delta + eps
    return {
        (1, 3): (hi, mid, lo),
        (2, 3): (hi, mid, lo),
        (1, 2): (hi, lo, mid),
        (3, 2): (hi, lo, mid),
        (2, 1): (lo, hi, mid),
        (3, 1): (lo, mid, hi),
    }


def _own_values(inst: Instance, alloc: Allocation) -> tuple[Fraction, ...]:
    return tuple(
        sum((inst.values[i][g - 1] for g in alloc.bundles[i]), Fraction(0)) for i in range(inst.n)
    )


def outcomes_by_prefix(inst: Instance) -> tuple[dict, dict]:
    """Enumerate ECE; group paths by their (good-1, good-2) receivers."""
    outcomes = enumerate_ece_outcomes(inst)
    by_key: dict[tuple[int, int], list] = {}
    for path, alloc in outcomes.items():
        by_key.setdefault(path.receivers()[:2], []).append((path, alloc))
    return outcomes, by_key


def table_allocations(inst: Instance) -> list[Allocation]:
    """The six path outcomes in table order; each prefix must have one leaf."""
    _, by_key = outcomes_by_prefix(inst)
    if set(by_key) != set(TABLE_KEYS) or any(len(v) != 1 for v in by_key.values()):
        raise InputError(
            "instance does not have the six-path structure: "
            + str({k: len(v) for k, v in sorted(by_key.items())})
        )
    return [by_key[k][0][1] for k in TABLE_KEYS]


def verify_outcome_table(params: HardParams) -> dict:
    if params.agent_permutation != (1, 2, 3):
        raise InputError("the outcome table is stated for the identity permutation")
    inst = make_hard_instance(params)
    outcomes, by_key = outcomes_by_prefix(inst)
    exp_values = expected_own_values(params.delta, params.eps)
    mismatches = []
    rows = []
    if len(outcomes) != 6:
        mismatches.append(f"expected exactly 6 paths, found {len(outcomes)}")
    if set(by_key) != set(TABLE_KEYS):
        mismatches.append(f"path prefixes {sorted(by_key)} differ from {sorted(TABLE_KEYS)}")
    for k, key in enumerate(TABLE_KEYS, start=1):
        found = by_key.get(key, [])
        if len(found) != 1:
            mismatches.append(f"prefix {key} extends to {len(found)} leaves, expected 1")
            continue
        path, alloc = found[0]
        want = Allocation(EXPECTED_ALLOCATIONS[key])
        values = _own_values(inst, alloc)
        row = {
            "label": f"A({k})",
            "owners": list(key),
            "allocation": alloc.sorted_bundles(),
            "expected_allocation": want.sorted_bundles(),
            "own_values": [format_rational(v) for v in values],
            "expected_own_values": [format_rational(v) for v in exp_values[key]],
            "path": path.to_dict(),
        }
        row["match"] = alloc == want and values == exp_values[key]
        if alloc != want:
            mismatches.append(f"{row['label']} {key}: got {row['allocation']}, want {row['expected_allocation']}")
        if values != exp_values[key]:
            mismatches.append(
                f"{row['label']} {key}: own values {row['own_values']}, want {row['expected_own_values']}"
            )
        rows.append(row)
    return {
        "check": "outcome-table",
        "params": params.to_dict(),
        "passed": not mismatches,
        "paths": rows,
        "mismatches": mismatches,
    }


def verify_lemma41(params: HardParams) -> dict:
    """Every ex-ante PROP distribution over the six outcomes keeps p_5 and
    p_6 inside ``lemma41_bounds``; checked on sampled witnesses and on the
    exact projections of the feasible set."""
    if params.agent_permutation != (1, 2, 3):
        raise InputError("the probability window is stated for the identity permutation")
    inst = make_hard_instance(params)
    allocs = table_allocations(inst)
    lower, upper = lemma41_bounds(params.delta, params.eps)
    system = prop_system([(inst, allocs)])
    problems = []

    witnesses = []
    mid = find_exante_prop_lottery(inst, allocs)
    if not mid.feasible:
        problems.append("single-instance system reported infeasible")
    else:
        witnesses.append(("midpoint", mid.witness))
        for k in range(6):
            for rule in ("min", "max"):
                res = solve(system, first=[k], picks=rule)
                witnesses.append((f"{rule}-first-p{k + 1}", res.witness))
    third = Fraction(1, 3)
    known = (third, 0, 0, 0, third, third)
    known = tuple(Fraction(v) for v in known)
    if system.is_satisfied_by(known):
        witnesses.append(("known", known))
    else:
        problems.append("witness (1/3,0,0,0,1/3,1/3) is not ex-ante PROP")

    for label, w in witnesses:
        for j in (4, 5):
            if not lower <= w[j] <= upper:
                problems.append(f"witness {label}: p{j + 1} = {w[j]} outside [{lower}, {upper}]")

    ranges = {}
    for j in (4, 5):
        rng = variable_range(system, j)
        ranges[f"p{j + 1}"] = None if rng is None else [format_rational(v) for v in rng]
        if rng is None:
            problems.append(f"projection onto p{j + 1} is empty")
            continue
        lo, hi = rng
        if lo is None or hi is None or lo < lower or hi > upper:
            problems.append(f"projection of p{j + 1} = [{lo}, {hi}] exceeds [{lower}, {upper}]")

    return {
        "check": "probability-window",
        "params": params.to_dict(),
        "passed": not problems,
        "bounds": [format_rational(lower), format_rational(upper)],
        "projections": ranges,
        "witnesses": [
            {"label": label, "p": [format_rational(v) for v in w]} for label, w in witnesses
        ],
        "problems": problems,
    }


def path_lower_bounds(system) -> tuple[list[Fraction], Certificate]:
    """Per-path lower bounds from single PROP rows plus the simplex, and the
    explicit certificate obtained by summing them against ``sum(p) = 1``.

    For a row ``c . p >= b`` and path j with ``c_j > M = max_{k != j} c_k``,
    subtracting ``M * sum(p) = M`` and adding ``(M - c_k) p_k >= 0`` leaves
    ``(c_j - M) p_j >= b - M``.
    """
    K = system.nvars
    cons = system.constraints
    eq_index = next(r for r, c in enumerate(cons) if c.relation == EQ)
    nonneg = {}
    for r, c in enumerate(cons):
        support = [k for k, a in enumerate(c.coeffs) if a != 0]
        if c.relation != EQ and c.bound == 0 and len(support) == 1 and c.coeffs[support[0]] == 1:
            nonneg[support[0]] = r
    bounds = []
    mult = [Fraction(0)] * len(cons)
    for j in range(K):
        best = None
        for r, c in enumerate(cons):
            if c.relation == EQ or r in nonneg.values():
                continue
            M = max(c.coeffs[k] for k in range(K) if k != j)
            gap = c.coeffs[j] - M
            if gap <= 0:
                continue
            bound = (c.bound - M) / gap
            if best is None or bound > best[0]:
                best = (bound, r, M, gap)
        if best is None or best[0] <= 0:
            bounds.append(Fraction(0))
            continue
        bound, r, M, gap = best
        bounds.append(bound)
        mult[r] += 1 / gap
        mult[eq_index] -= M / gap
        for k in range(K):
            if k != j:
                mult[nonneg[k]] += (M - cons[r].coeffs[k]) / gap
    mult[eq_index] -= 1
    cert = Certificate(tuple(mult), sum(bounds) - 1)
    return bounds, cert


def verify_two_phase_online_impossibility(params: HardParams) -> dict:
    """One distribution over the six shared first-phase paths must serve the
    instance and both agent rotations; the combined PROP system is infeasible."""
    problems = []
    blocks = []
    per_instance = []
    for perm in ROTATIONS:
        inst = make_hard_instance(HardParams(params.delta, params.eps, perm))
        allocs = table_allocations(inst)
        blocks.append((inst, allocs))
        single = find_exante_prop_lottery(inst, allocs)
        per_instance.append(
            {
                "agent_permutation": list(perm),
                "allocations": [a.sorted_bundles() for a in allocs],
                "alone_feasible": single.feasible,
            }
        )
        if not single.feasible:
            problems.append(f"instance {perm} alone is unexpectedly infeasible")
    tags = [f"perm{''.join(map(str, p))}." for p in ROTATIONS]
    system = prop_system(blocks, tags)
    result = solve(system)
    report = {
        "check": "two-phase-online",
        "params": params.to_dict(),
        "indexing": "paths keyed by (good-1 receiver, good-2 receiver) under original agent "
        "labels; goods 1-3 are valued identically by all agents",
        "path_keys": [list(k) for k in TABLE_KEYS],
        "instances": per_instance,
        "combined_feasible": result.feasible,
    }
    if result.feasible:
        problems.append("combined system is feasible")
        report["witness"] = [format_rational(v) for v in result.witness]
    else:
        if not check_certificate(system, result.certificate):
            problems.append("elimination certificate failed verification")
        report["elimination_certificate"] = result.certificate.to_dict(system)
    bounds, cert = path_lower_bounds(system)
    total = sum(bounds)
    report["path_lower_bounds"] = [format_rational(b) for b in bounds]
    report["sum_of_lower_bounds"] = format_rational(total)
    if total > 1:
        if not check_certificate(system, cert):
            problems.append("summed lower-bound certificate failed verification")
        report["lower_bound_certificate"] = cert.to_dict(system)
    else:
        problems.append(f"sum of per-path lower bounds {total} does not exceed 1")
    report["passed"] = not problems
    report["problems"] = problems
    return report


def default_grid() -> list[tuple[Fraction, Fraction]]:
    grid = []
    for delta in (Fraction(1, 4), Fraction(1, 8), Fraction(1, 20), Fraction(1, 100), Fraction(1, 1000)):
        for div in (3, 6, 30):
            grid.append((delta, delta / div))
    return grid


def verify_all(delta=DEFAULT_DELTA, eps=DEFAULT_EPS, full_grid: bool = False) -> dict:
    params = HardParams(delta, eps)
    reports = [
        verify_outcome_table(params),
        verify_lemma41(params),
        verify_two_phase_online_impossibility(params),
    ]
    out = {"params": params.to_dict(), "reports": reports}
    if full_grid:
        grid = []
        for d, e in default_grid():
            p = HardParams(d, e)
            table = verify_outcome_table(p)
            window = verify_lemma41(p)
            grid.append(
                {
                    "delta": format_rational(d),
                    "eps": format_rational(e),
                    "outcome_table": table["passed"],
                    "probability_window": window["passed"],
                    "projections": window["projections"],
                    "bounds": window["bounds"],
                }
            )
        out["grid"] = grid
        reports_ok = all(g["outcome_table"] and g["probability_window"] for g in grid)
    else:
        reports_ok = True
    out["passed"] = reports_ok and all(r["passed"] for r in reports)
    return out


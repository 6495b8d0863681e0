from fractions import Fraction

import pytest

from fairdiv.errors import InputError
from fairdiv.exante import check_certificate, lemma41_bounds
from fairdiv.hard import (
    ROTATIONS,
    HardParams,
    default_grid,
    expected_own_values,
    make_hard_instance,
    outcomes_by_prefix,
    verify_all,
    verify_lemma41,
    verify_outcome_table,
    verify_two_phase_online_impossibility,
)
from fairdiv.model import Allocation

F = Fraction
BOUNDARY = HardParams(F(1, 4), F(1, 12))
DEFAULT = HardParams(F(1, 100), F(1, 300))


def test_instance_values():
    inst = make_hard_instance(BOUNDARY)
    assert inst.value(1, 4) == F(7, 4)
    assert inst.value(2, 4) == inst.value(3, 4) == F(5, 2)
    assert inst.is_ordered()
    for g in range(1, 10):
        distinct = {inst.value(i, g) for i in (1, 2, 3)}
        assert (len(distinct) > 1) == (g == 4)


def test_permutation_equivariance():
    base = make_hard_instance(DEFAULT)
    for perm in ROTATIONS:
        inst = make_hard_instance(HardParams(DEFAULT.delta, DEFAULT.eps, perm))
        assert [list(r) for r in inst.values] == [list(base.values[r - 1]) for r in perm]
    with pytest.raises(InputError):
        HardParams(F(1, 4), F(1, 12), (1, 1, 2))


def test_outcome_table():
    for params in (BOUNDARY, DEFAULT):
        rep = verify_outcome_table(params)
        assert rep["passed"], rep["mismatches"]
        assert len(rep["paths"]) == 6
    row5 = verify_outcome_table(BOUNDARY)["paths"][4]
    assert row5["owners"] == [2, 1]
    assert row5["allocation"] == [[2, 5, 8], [1, 6, 7, 9], [3, 4]]
    vals = expected_own_values(BOUNDARY.delta, BOUNDARY.eps)
    assert vals[(2, 1)][1] == 6 + 2 * BOUNDARY.eps
    assert all(vals[k][0] == 6 + 2 * BOUNDARY.eps for k in ((1, 3), (2, 3), (1, 2), (3, 2)))


def test_prefix_determines_leaf():
    _, by_key = outcomes_by_prefix(make_hard_instance(DEFAULT))
    assert all(len(v) == 1 for v in by_key.values())


def test_grid():
    for d, e in default_grid():
        assert verify_outcome_table(HardParams(d, e))["passed"]


def test_probability_window():
    rep = verify_lemma41(DEFAULT)
    assert rep["passed"], rep["problems"]
    lo, _ = lemma41_bounds(DEFAULT.delta, DEFAULT.eps)
    for w in rep["witnesses"]:
        p5 = F(w["p"][4])
        assert 3 * p5 >= F(147, 148)
    assert rep["projections"]["p5"][0] == "49/148"
    b = verify_lemma41(BOUNDARY)
    assert b["passed"] and b["bounds"] == ["1/4", "7/8"]


def test_two_phase_online():
    rep = verify_two_phase_online_impossibility(DEFAULT)
    assert rep["passed"], rep["problems"]
    assert rep["combined_feasible"] is False
    assert rep["sum_of_lower_bounds"] == "147/74"
    assert rep["path_lower_bounds"] == ["49/148"] * 6
    assert all(i["alone_feasible"] for i in rep["instances"])
    small = verify_two_phase_online_impossibility(HardParams(F(1, 1000), F(1, 3000)))
    assert small["passed"] and not small["combined_feasible"]


def test_verify_all():
    rep = verify_all()
    assert rep["passed"]
    assert [r["check"] for r in rep["reports"]] == ["outcome-table", "probability-window", "two-phase-online"]

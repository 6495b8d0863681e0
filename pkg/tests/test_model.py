import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairdiv.errors import InputError, ParseError
from fairdiv.model import (
    Allocation,
    Instance,
    ItemKind,
    Lottery,
    bundle_value,
    format_rational,
    parse_allocation,
    parse_instance,
    parse_lottery,
    parse_rational,
    serialize_allocation,
    serialize_instance,
    serialize_lottery,
    validate_allocation,
    validate_lottery,
)
from fairdiv.hard import HardParams, make_hard_instance


def test_bundle_value_examples():
    inst = Instance("goods", [[3, 2, 1]])
    assert bundle_value(inst, 1, []) == 0
    assert bundle_value(inst, 1, {1, 3}) == 4


def test_bundle_value_hard_instance_agent1():
    inst = make_hard_instance(HardParams(Fraction(1, 4), Fraction(1, 12)))
    assert bundle_value(inst, 1, {1, 6, 7, 9}) == Fraction(37, 6)


def test_bundle_value_range_checks():
    inst = Instance("goods", [[3, 2, 1]])
    with pytest.raises(InputError):
        bundle_value(inst, 2, [1])
    with pytest.raises(InputError):
        bundle_value(inst, 1, [4])


def test_validate_allocation_examples():
    inst = Instance("goods", [[1, 1, 1], [1, 1, 1]])
    assert validate_allocation(inst, Allocation([[1], [2, 3]])) is None
    assert validate_allocation(inst, Allocation([[1], [1, 3]])) == "item 1 duplicated"
    assert validate_allocation(inst, Allocation([[1], [3]])) == "item 2 unallocated"
    assert "bundles" in validate_allocation(inst, Allocation([[1, 2, 3]]))
    assert "out of range" in validate_allocation(inst, Allocation([[1, 2], [3, 4]]))


def test_edge_sizes():
    empty = Instance("goods", [[], []])
    assert empty.m == 0
    assert validate_allocation(empty, Allocation([[], []])) is None
    single = Instance("chores", [[-1, -2]])
    assert validate_allocation(single, Allocation([[1, 2]])) is None


def test_parse_rational_tokens():
    assert parse_rational("7/4") == Fraction(7, 4)
    assert parse_rational("14/8") == Fraction(7, 4)
    assert parse_rational(" -3 ") == -3
    assert parse_rational(5) == 5
    for bad in ("1.5", "1/0", "a", True, 0.5, None):
        with pytest.raises(InputError):
            parse_rational(bad)


def test_format_rational():
    assert format_rational(Fraction(4, 2)) == 2
    assert format_rational(Fraction(-7, 4)) == "-7/4"


def test_instance_round_trip_exact():
    inst = Instance("goods", [[3, 2, 1], [1, 2, 3]])
    text = serialize_instance(inst)
    back = parse_instance(text)
    assert back == inst
    assert serialize_instance(back) == text


def test_chores_sign_violation():
    text = json.dumps({"kind": "chores", "agents": 1, "items": 2, "values": [[-1, 2]]})
    with pytest.raises(ParseError) as exc:
        parse_instance(text)
    assert "values" in str(exc.value)
    with pytest.raises(InputError):
        Instance("goods", [[1, -1]])


def test_parse_errors_name_fields():
    with pytest.raises(ParseError, match="line 1"):
        parse_instance("{not json")
    with pytest.raises(ParseError, match="kind"):
        parse_instance(json.dumps({"agents": 1, "items": 0, "values": [[]]}))
    with pytest.raises(ParseError, match=r"values\[1\]"):
        parse_instance(json.dumps({"kind": "goods", "agents": 2, "items": 2, "values": [[1, 2], [1]]}))
    with pytest.raises(ParseError, match=r"values\[0\]\[1\]"):
        parse_instance(json.dumps({"kind": "goods", "agents": 1, "items": 2, "values": [[1, "x"]]}))


def test_allocation_and_lottery_round_trip():
    alloc = Allocation([[3, 1], [2]])
    assert parse_allocation(serialize_allocation(alloc)) == alloc
    lot = Lottery([(Fraction(1, 3), alloc), (Fraction(2, 3), Allocation([[2], [1, 3]]))])
    back = parse_lottery(serialize_lottery(lot))
    assert back == lot


def test_lottery_probabilities_must_sum_to_one():
    a = Allocation([[1], []])
    with pytest.raises(InputError):
        Lottery([(Fraction(1, 2), a)])
    with pytest.raises(InputError):
        Lottery([(Fraction(3, 2), a), (Fraction(-1, 2), a)])
    inst = Instance("goods", [[1, 1], [1, 1]])
    assert validate_lottery(inst, Lottery.point(Allocation([[1], [2]]))) is None
    assert validate_lottery(inst, Lottery.point(a)) is not None


def test_kind_coercion():
    assert ItemKind.coerce("chores") is ItemKind.CHORES
    with pytest.raises(InputError):
        ItemKind.coerce("bads")


rationals = st.fractions(min_value=-10**6, max_value=10**6, max_denominator=10**6)


@given(rationals, rationals)
def test_rational_arithmetic_exact(a, b):
    assert (a + b) - b == a


@given(st.integers(1, 3), st.integers(0, 6), st.data())
def test_round_trip_and_merge_property(n, m, data):
    vals = data.draw(
        st.lists(st.lists(st.fractions(0, 20, max_denominator=12), min_size=m, max_size=m),
                 min_size=n, max_size=n)
    )
    inst = Instance("goods", vals)
    assert parse_instance(serialize_instance(inst)) == inst
    owners = data.draw(st.lists(st.integers(1, n), min_size=m, max_size=m))
    alloc = Allocation.from_owners(owners, n)
    assert validate_allocation(inst, alloc) is None
    assert sum(len(b) for b in alloc.bundles) == m
    for i in range(1, n + 1):
        assert sum(bundle_value(inst, i, b) for b in alloc.bundles) == inst.total(i)
    assert parse_allocation(serialize_allocation(alloc)) == alloc
    lot = Lottery.uniform([alloc, Allocation.from_owners([1] * m, n)])
    assert parse_lottery(serialize_lottery(lot)) == lot

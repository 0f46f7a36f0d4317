"""Value typing, comparison, 3VL, and datetime handling."""

from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from semaquery.errors import BindError
from semaquery.values import (
    ValueType, common_type, comparable, compare, format_datetime,
    format_value, parse_datetime, tvl_and, tvl_not, tvl_or, type_of,
)


def test_type_of_tags():
    assert type_of(None) is None
    assert type_of(True) is ValueType.BOOLEAN
    assert type_of(7) is ValueType.INTEGER
    assert type_of(7.5) is ValueType.DOUBLE
    assert type_of("x") is ValueType.VARCHAR
    assert type_of(datetime.now(timezone.utc)) is ValueType.DATETIME


def test_type_of_bool_before_int():
    # bool is an int subclass; the tag must still be BOOLEAN
    assert type_of(False) is ValueType.BOOLEAN


def test_type_of_rejects_unknown():
    with pytest.raises(TypeError):
        type_of([1, 2])


def test_comparable_rules():
    assert comparable(ValueType.INTEGER, ValueType.DOUBLE)
    assert comparable(ValueType.VARCHAR, ValueType.VARCHAR)
    assert not comparable(ValueType.VARCHAR, ValueType.INTEGER)
    assert not comparable(ValueType.BOOLEAN, ValueType.INTEGER)


def test_common_type_numeric_widening():
    assert common_type(ValueType.INTEGER, ValueType.DOUBLE) is ValueType.DOUBLE
    assert common_type(ValueType.INTEGER, ValueType.INTEGER) is ValueType.INTEGER


def test_common_type_rejects_mixed():
    with pytest.raises(BindError):
        common_type(ValueType.VARCHAR, ValueType.BOOLEAN)


def test_compare_basic():
    assert compare(1, 2) == -1
    assert compare(2, 1) == 1
    assert compare("a", "a") == 0
    assert compare(2.5, 2) == 1


def test_compare_null_propagates():
    assert compare(None, 1) is None
    assert compare(1, None) is None
    assert compare(None, None) is None


# Kleene truth tables, exhaustively.
_TVL = (True, False, None)


def test_tvl_and_table():
    expected = {
        (True, True): True, (True, False): False, (True, None): None,
        (False, True): False, (False, False): False, (False, None): False,
        (None, True): None, (None, False): False, (None, None): None,
    }
    for (a, b), want in expected.items():
        assert tvl_and(a, b) is want, (a, b)


def test_tvl_or_table():
    expected = {
        (True, True): True, (True, False): True, (True, None): True,
        (False, True): True, (False, False): False, (False, None): None,
        (None, True): True, (None, False): None, (None, None): None,
    }
    for (a, b), want in expected.items():
        assert tvl_or(a, b) is want, (a, b)


def test_tvl_not_table():
    assert tvl_not(True) is False
    assert tvl_not(False) is True
    assert tvl_not(None) is None


@given(st.sampled_from(_TVL), st.sampled_from(_TVL))
def test_de_morgan_holds_in_3vl(a, b):
    assert tvl_not(tvl_and(a, b)) is tvl_or(tvl_not(a), tvl_not(b))
    assert tvl_not(tvl_or(a, b)) is tvl_and(tvl_not(a), tvl_not(b))


@given(st.sampled_from(_TVL), st.sampled_from(_TVL))
def test_tvl_commutative(a, b):
    assert tvl_and(a, b) is tvl_and(b, a)
    assert tvl_or(a, b) is tvl_or(b, a)


def test_parse_datetime_formats():
    want = datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)
    assert parse_datetime("2024-01-02T03:04:05Z") == want
    assert parse_datetime("2024-01-02 03:04:05") == want
    assert parse_datetime("2024-01-02T03:04:05+00:00") == want


def test_parse_datetime_date_only():
    assert parse_datetime("2024-01-02") == datetime(2024, 1, 2, tzinfo=timezone.utc)


def test_parse_datetime_offset_normalized_to_utc():
    dt = parse_datetime("2024-01-02T05:04:05+02:00")
    assert dt == datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)
    assert dt.tzinfo == timezone.utc


def test_parse_datetime_rfc2822():
    dt = parse_datetime("Tue, 02 Jan 2024 03:04:05 GMT")
    assert dt == datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)


def test_parse_datetime_rejects_garbage():
    with pytest.raises(ValueError, match="not a datetime"):
        parse_datetime("yesterday-ish")


def test_format_datetime_z_suffix():
    dt = datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)
    assert format_datetime(dt) == "2024-01-02T03:04:05Z"


def test_format_datetime_microseconds_only_when_nonzero():
    dt = datetime(2024, 1, 2, 3, 4, 5, 120000, tzinfo=timezone.utc)
    assert format_datetime(dt) == "2024-01-02T03:04:05.120000Z"


@given(st.datetimes(min_value=datetime(1971, 1, 1), max_value=datetime(2100, 1, 1)))
def test_datetime_roundtrip(naive):
    dt = naive.replace(tzinfo=timezone.utc)
    assert parse_datetime(format_datetime(dt)) == dt


def test_format_value_cells():
    assert format_value(None) == ""
    assert format_value(True) == "true"
    assert format_value(False) == "false"
    assert format_value(3) == "3"
    assert format_value("text") == "text"
    assert format_value(2.5) == "2.5"


def test_format_value_float_keeps_precision():
    assert format_value(0.1) == "0.1"
    assert float(format_value(1 / 3)) == 1 / 3


@given(st.integers(), st.integers())
def test_compare_total_order_on_ints(a, b):
    got = compare(a, b)
    assert got == (-1 if a < b else (1 if a > b else 0))

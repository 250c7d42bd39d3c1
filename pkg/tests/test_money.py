from hypothesis import given
from hypothesis import strategies as st

from faregrid.money import fmt_dollars, from_cents, parse_dollars, to_cents


def test_known_conversions():
    assert to_cents(12.50) == 1250
    assert from_cents(1250) == 12.50
    assert parse_dollars("8.30") == 830
    assert parse_dollars("-3.07") == -307
    assert fmt_dollars(830) == "8.30"
    assert fmt_dollars(5) == "0.05"
    assert fmt_dollars(-5) == "-0.05"
    assert fmt_dollars(0) == "0.00"
    assert fmt_dollars(-1234) == "-12.34"


@given(st.integers(min_value=-10_000_000, max_value=10_000_000))
def test_format_parse_round_trip(cents):
    assert parse_dollars(fmt_dollars(cents)) == cents


@given(st.integers(min_value=-10_000_000, max_value=10_000_000))
def test_cents_dollars_round_trip(cents):
    assert to_cents(from_cents(cents)) == cents

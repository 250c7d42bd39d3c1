"""Integer-cent money helpers.

All monetary amounts are held as integer cents internally so that sums and
means never accumulate binary floating point drift; dollars only appear at
the I/O boundary (two decimal places).
"""

from __future__ import annotations


def to_cents(dollars: float) -> int:
    """Round a dollar amount to integer cents."""
    return int(round(dollars * 100))


def from_cents(cents: int) -> float:
    return cents / 100.0


def parse_dollars(text: str) -> int:
    """Parse a decimal dollar string ("12.50") into cents.

    Raises ValueError on non-numeric input.
    """
    return to_cents(float(text))


def fmt_dollars(cents: int) -> str:
    """Format integer cents as a two-decimal dollar string ("-3.07")."""
    sign = "-" if cents < 0 else ""
    cents = abs(cents)
    return f"{sign}{cents // 100}.{cents % 100:02d}"

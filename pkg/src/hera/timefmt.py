"""Microsecond time arithmetic and its text form.

All timestamps and durations are carried as integer microseconds so that
flow arithmetic is exact and emitted files are reproducible byte for byte.
Text form is seconds with exactly six decimal places.
"""

from __future__ import annotations


def us_to_text(us: int | None) -> str:
    """Render integer microseconds as seconds with six decimals ('' for None)."""
    if us is None:
        return ""
    sign = "-" if us < 0 else ""
    mag = abs(us)
    return f"{sign}{mag // 1_000_000}.{mag % 1_000_000:06d}"


def text_to_us(text: str) -> int:
    """Parse a decimal-seconds string to integer microseconds.

    Accepts an optional sign, an integer part, and up to six fractional
    digits; anything beyond six digits is truncated, matching the
    precision used everywhere else.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty timestamp")
    sign = 1
    if s[0] in "+-":
        if s[0] == "-":
            sign = -1
        s = s[1:]
    if not s:
        raise ValueError(f"malformed timestamp {text!r}")
    whole, _, frac = s.partition(".")
    if whole and not whole.isdigit():
        raise ValueError(f"malformed timestamp {text!r}")
    if frac and not frac.isdigit():
        raise ValueError(f"malformed timestamp {text!r}")
    if not whole and not frac:
        raise ValueError(f"malformed timestamp {text!r}")
    seconds = int(whole) if whole else 0
    frac = frac[:6].ljust(6, "0")
    return sign * (seconds * 1_000_000 + (int(frac) if frac else 0))


def seconds_to_us(seconds: float) -> int:
    """Convert a float seconds value (e.g. a CLI flag) to microseconds."""
    return round(seconds * 1_000_000)

"""Serial-day <-> ISO date conversion in the 1900 date system.

Serial 1 is 1900-01-01.  Serial 60 would be the fictitious 1900-02-29 kept
alive by legacy spreadsheets; 1900 is not a leap year, so that serial has no
calendar date and is rejected rather than emulated.  Serials from 61 up are
therefore offset by one day against the raw count from the epoch.
"""

from __future__ import annotations

import datetime as dt

_EPOCH = dt.date(1900, 1, 1)
_LEAP_CUTOVER = dt.date(1900, 3, 1)  # first date after the phantom serial

PHANTOM_SERIAL = 60


class DateOutOfRange(ValueError):
    pass


class PhantomDate(ValueError):
    """Serial 60 names a day that never existed."""


def serial_to_date(serial: int) -> dt.date:
    if serial == PHANTOM_SERIAL:
        raise PhantomDate("serial 60 (1900-02-29) is not a real date")
    if serial < 1:
        raise DateOutOfRange(f"serial {serial} is before the 1900 epoch")
    offset = serial - 1 if serial < PHANTOM_SERIAL else serial - 2
    try:
        return _EPOCH + dt.timedelta(days=offset)
    except OverflowError as exc:
        raise DateOutOfRange(f"serial {serial} is beyond the supported calendar") from exc


def date_to_serial(d: dt.date) -> int:
    if d < _EPOCH:
        raise DateOutOfRange(f"{d.isoformat()} is before 1900-01-01")
    days = (d - _EPOCH).days
    return days + 1 if d < _LEAP_CUTOVER else days + 2


def serial_to_iso(serial: int) -> str:
    """Day count -> ISO-8601 text; raises PhantomDate for serial 60."""
    return serial_to_date(serial).isoformat()


def iso_to_serial(text: str) -> int:
    """ISO-8601 text -> day count; inverse of serial_to_iso for every real date."""
    try:
        d = dt.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise DateOutOfRange(f"not an ISO-8601 date: {text!r}") from exc
    return date_to_serial(d)

"""Serial <-> ISO conversion against an independent calendar oracle."""

import pytest

from sheetbridge.engine import DateOutOfRange, PhantomDate, iso_to_serial, serial_to_iso

from support import civil_days_since_1900, is_leap_year


def test_epoch_and_cutover_values():
    # day-count oracle: serial n >= 61 sits n-2 civil days after 1900-01-01
    assert civil_days_since_1900(1900, 3, 1) == 59
    assert serial_to_iso(61) == "1900-03-01"
    assert serial_to_iso(1) == "1900-01-01"
    assert serial_to_iso(59) == "1900-02-28"
    assert iso_to_serial("1900-02-28") == 59
    assert iso_to_serial("1900-03-01") == 61


def test_phantom_serial_rejected():
    # 1900 is not a leap year, so serial 60 has no calendar date
    assert not is_leap_year(1900)
    assert is_leap_year(2000)
    with pytest.raises(PhantomDate):
        serial_to_iso(60)


def test_round_trip_identity_on_range():
    for serial in range(61, 200_001):
        assert iso_to_serial(serial_to_iso(serial)) == serial


def test_round_trip_below_cutover():
    for serial in range(1, 60):
        assert iso_to_serial(serial_to_iso(serial)) == serial


def test_known_dates_against_oracle():
    for y, m, d in [(1900, 3, 1), (1999, 12, 31), (2000, 2, 29), (2024, 7, 15), (2447, 7, 25)]:
        serial = civil_days_since_1900(y, m, d) + 2
        assert serial_to_iso(serial) == f"{y:04d}-{m:02d}-{d:02d}"
        assert iso_to_serial(f"{y:04d}-{m:02d}-{d:02d}") == serial


def test_out_of_range():
    with pytest.raises(DateOutOfRange):
        serial_to_iso(0)
    with pytest.raises(DateOutOfRange):
        serial_to_iso(-5)
    with pytest.raises(DateOutOfRange):
        iso_to_serial("1899-12-31")
    with pytest.raises(DateOutOfRange):
        iso_to_serial("not-a-date")

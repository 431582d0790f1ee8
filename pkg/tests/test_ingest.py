import datetime as dt
import io
import math

import pytest

from circreg.errors import InvalidInputError, SchemaError
from circreg.ingest import (DAILY_HEADER, daily_aggregate, daily_csv_text, normalize_unix,
                            parse_minute_csv, parse_schema, read_daily_csv, select_range)

HEADER = "unix,date,symbol,open,high,low,close,Volume BTC,Volume USD"
DAY0 = dt.datetime(2021, 3, 1, tzinfo=dt.timezone.utc)

# Hand-built three days of flat 100.0 bars with these (day, minute) overrides
# of (open, high, low, close).
OVERRIDES = {
    # day 1: high at noon, low at minute 100, closes at 104
    (0, 100): (100, 100, 90, 100),
    (0, 720): (100, 110, 100, 100),
    (0, 1439): (100, 104, 100, 104),
    # day 2: tied highs at 300 and 900, low in the first minute, closes at 95
    (1, 0): (100, 100, 80, 100),
    (1, 300): (100, 120, 100, 100),
    (1, 900): (100, 120, 100, 100),
    (1, 1439): (100, 100, 95, 95),
    # day 3: high in the last minute, closes where it opened
    (2, 600): (100, 100, 70, 100),
    (2, 1439): (100, 130, 100, 100),
}


def minute_rows(days=3, overrides=OVERRIDES, ms=False, drop=()):
    rows = []
    for d in range(days):
        for m in range(1440):
            if (d, m) in drop:
                continue
            stamp = DAY0 + dt.timedelta(days=d, minutes=m)
            o, h, lo, c = overrides.get((d, m), (100, 100, 100, 100))
            unix = int(stamp.timestamp()) * (1000 if ms else 1)
            rows.append(f"{unix},{stamp:%Y-%m-%d %H:%M:%S},BTC/USD,{o},{h},{lo},{c},1.5,150.0")
    return rows


def fixture_text(rows, newest_first=True):
    if newest_first:
        rows = rows[::-1]
    return "\n".join([HEADER] + rows) + "\n"


def test_golden_three_days():
    bars, rejects = parse_minute_csv(io.StringIO(fixture_text(minute_rows())))
    assert rejects == [] and len(bars) == 3 * 1440
    d1, d2, d3 = daily_aggregate(bars)

    assert d1.date == dt.date(2021, 3, 1)
    assert d1.theta_high == math.pi
    assert d1.theta_low == 2 * math.pi * 100 / 1440
    assert (d1.day_open, d1.day_high, d1.day_low, d1.day_close) == (100, 110, 90, 104)
    assert d1.predictor_x == (90 / 110) / 4
    assert d1.usable

    assert d2.theta_high == 2 * math.pi * 300 / 1440
    assert d2.theta_low == 0.0
    assert d2.predictor_x == (80 / 120) / -5

    assert d3.theta_high == 2 * math.pi * 1439 / 1440
    assert d3.theta_low == 2 * math.pi * 600 / 1440
    assert d3.predictor_x is None
    assert d3.excluded_reason == "zero-open-close-spread"

    text = daily_csv_text([d1, d2, d3])
    lines = text.splitlines()
    assert lines[0] == ",".join(DAILY_HEADER)
    assert lines[1] == "2021-03-01,3.14159265359,0.436332312999,100.0,110.0,90.0,104.0,0.20454545454545456,"
    assert lines[3].endswith(",,zero-open-close-spread")
    back = read_daily_csv(io.StringIO(text))
    for got, want in zip(back, [d1, d2, d3]):
        # angles are written with 12 significant digits
        assert got.theta_high == pytest.approx(want.theta_high, rel=1e-11)
        assert got.theta_low == pytest.approx(want.theta_low, rel=1e-11, abs=1e-12)
        assert (got.date, got.day_open, got.day_high, got.day_low, got.day_close,
                got.predictor_x, got.excluded_reason) == \
            (want.date, want.day_open, want.day_high, want.day_low, want.day_close,
             want.predictor_x, want.excluded_reason)


def test_millisecond_stamps_match_seconds():
    sec, _ = parse_minute_csv(io.StringIO(fixture_text(minute_rows())))
    ms, _ = parse_minute_csv(io.StringIO(fixture_text(minute_rows(ms=True))))
    assert daily_aggregate(sec) == daily_aggregate(ms)
    assert normalize_unix(1614556800000) == normalize_unix(1614556800) == 1614556800


def test_sparse_day_excluded():
    drop = {(0, m) for m in range(300)}
    bars, _ = parse_minute_csv(io.StringIO(fixture_text(minute_rows(drop=drop))))
    day = daily_aggregate(bars)[0]
    assert day.excluded_reason == "sparse-day" and day.predictor_x is None
    # 1440 - 288 minutes is still enough
    drop = {(0, m) for m in range(1, 289)}
    bars, _ = parse_minute_csv(io.StringIO(fixture_text(minute_rows(drop=drop))))
    assert daily_aggregate(bars)[0].usable


def test_rejects_carry_line_numbers():
    rows = minute_rows(days=1)
    rows[5] = rows[5].replace(",BTC/USD,100,100,100,100,", ",BTC/USD,100,99,101,100,")
    rows[7] = rows[7].replace(",BTC/USD,100,", ",BTC/USD,abc,")
    rows[9] = rows[9].replace("2021-03-01 00:09", "2021-03-02 00:09")
    bars, rejects = parse_minute_csv(io.StringIO(fixture_text(rows, newest_first=False)))
    assert len(bars) == 1437
    assert [r.row for r in rejects] == [7, 9, 11]
    assert "violated" in rejects[0].reason
    assert "unparseable" in rejects[1].reason
    assert "disagrees" in rejects[2].reason


def test_schema_remap():
    text = fixture_text(minute_rows(days=1)).replace(
        HEADER, "timestamp,date,symbol,Open,High,Low,Close,vol_a,vol_b", 1)
    with pytest.raises(SchemaError):
        parse_minute_csv(io.StringIO(text))
    schema = parse_schema("unix=timestamp,open=Open,high=High,low=Low,close=Close")
    bars, rejects = parse_minute_csv(io.StringIO(text), schema)
    assert len(bars) == 1440 and not rejects
    assert bars[0].volume_asset == 1.5 and bars[0].volume_base == 150.0
    with pytest.raises(InvalidInputError):
        parse_schema("price=Close")


def test_empty_inputs():
    with pytest.raises(InvalidInputError):
        parse_minute_csv(io.StringIO(""))
    with pytest.raises(InvalidInputError):
        parse_minute_csv(io.StringIO(HEADER + "\n"))
    with pytest.raises(InvalidInputError):
        daily_aggregate([])


def test_select_range():
    bars, _ = parse_minute_csv(io.StringIO(fixture_text(minute_rows())))
    days = daily_aggregate(bars)
    assert [d.date.day for d in select_range(days, "2021-03-02")] == [2, 3]
    assert [d.date.day for d in select_range(days, None, dt.date(2021, 3, 1))] == [1]
    with pytest.raises(InvalidInputError):
        select_range(days, "2021-03-03", "2021-03-01")
    with pytest.raises(InvalidInputError):
        select_range(days, "03/01/2021")


def test_path_input(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(fixture_text(minute_rows(days=1)))
    bars, _ = parse_minute_csv(p)
    assert len(bars) == 1440

"""
Per-minute OHLCV ingestion and daily (predictor, angle) aggregation.

Input is the comma-separated layout of the public per-minute crypto dumps:
``unix,date,symbol,open,high,low,close,<volume asset>,<volume base>``.
``unix`` may be in seconds or milliseconds; values above ``1e11`` are read
as milliseconds.  All times are UTC.
"""

import csv
import datetime as dt
import io
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .circular import TWO_PI
from .errors import InvalidInputError, SchemaError

MINUTES_PER_DAY = 1440
MS_THRESHOLD = 10**11
# days with more than this fraction of minutes missing are excluded
MAX_MISSING_FRACTION = 0.2

DEFAULT_SCHEMA = {
    "unix": "unix",
    "date": "date",
    "symbol": "symbol",
    "open": "open",
    "high": "high",
    "low": "low",
    "close": "close",
    # None: take the first two header columns not bound to anything else
    "volume_asset": None,
    "volume_base": None,
}
REQUIRED = ("unix", "open", "high", "low", "close")

DAILY_HEADER = ("date", "theta_high", "theta_low", "day_open", "day_high",
                "day_low", "day_close", "predictor_x", "excluded_reason")


@dataclass(frozen=True)
class MinuteBar:
    unix_ts: int
    open: float
    high: float
    low: float
    close: float
    volume_asset: float
    volume_base: float
    symbol: str

    def violation(self):
        """Reason the bar breaks the OHLC invariant, or None."""
        prices = (self.open, self.high, self.low, self.close)
        if not all(math.isfinite(p) and p > 0 for p in prices):
            return "non-positive or non-finite price"
        lo, hi = min(self.open, self.close), max(self.open, self.close)
        if not (self.low <= lo and hi <= self.high):
            return "low <= min(open, close) <= max(open, close) <= high violated"
        return None


@dataclass(frozen=True)
class Reject:
    row: int  # 1-based line number in the file, header is line 1
    reason: str
    raw: tuple


@dataclass(frozen=True)
class DailyRecord:
    date: dt.date
    theta_high: float
    theta_low: float
    day_open: float
    day_high: float
    day_low: float
    day_close: float
    predictor_x: float = None
    excluded_reason: str = None

    @property
    def usable(self):
        return self.excluded_reason is None


def parse_schema(text):
    """Parse ``KEY=COL,KEY=COL`` overrides into a full schema map."""
    schema = dict(DEFAULT_SCHEMA)
    if not text:
        return schema
    for item in text.split(","):
        key, sep, col = item.partition("=")
        key = key.strip()
        if not sep or key not in DEFAULT_SCHEMA:
            raise InvalidInputError(f"bad schema entry {item!r}; keys are {sorted(DEFAULT_SCHEMA)}")
        schema[key] = col.strip()
    return schema


def normalize_unix(value):
    """Unix time in whole seconds; millisecond stamps are detected by magnitude."""
    v = float(value)
    if not math.isfinite(v):
        raise ValueError("non-finite timestamp")
    if abs(v) >= MS_THRESHOLD:
        v /= 1000.0
    return int(round(v))


def _parse_date(text):
    text = text.strip()
    for fmt in ("%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"):
        try:
            return dt.datetime.strptime(text, fmt).replace(tzinfo=dt.timezone.utc)
        except ValueError:
            pass
    return None


def _resolve_columns(header, schema):
    index = {name.strip(): k for k, name in enumerate(header)}
    cols = {}
    for key, col in schema.items():
        if col is None:
            continue
        if col not in index:
            if key in REQUIRED or DEFAULT_SCHEMA.get(key) != col:
                raise SchemaError(f"column {col!r} (for {key}) not in header {list(index)}")
            continue
        cols[key] = index[col]
    spare = [k for k in range(len(header)) if k not in cols.values()]
    for key in ("volume_asset", "volume_base"):
        if schema.get(key) is None and spare:
            cols[key] = spare.pop(0)
    return cols


def parse_minute_csv(stream, schema_map=None):
    """
    Parse a per-minute OHLCV file.

    Parameters
    ----------
    stream : file-like or str
        Text stream, or a path.
    schema_map : dict, optional
        Logical field -> column name; missing keys fall back to
        ``DEFAULT_SCHEMA``.

    Returns
    -------
    bars : list of MinuteBar
        Valid rows in file order.
    rejects : list of Reject
        Rows that failed to parse or broke the OHLC invariant.
    """
    if isinstance(stream, (str, bytes)) or hasattr(stream, "__fspath__"):
        with open(stream, newline="") as fh:
            return parse_minute_csv(fh, schema_map)
    schema = dict(DEFAULT_SCHEMA)
    schema.update(schema_map or {})
    reader = csv.reader(stream)
    header = next(reader, None)
    if not header:
        raise InvalidInputError("empty file: no header row")
    cols = _resolve_columns(header, schema)

    bars, rejects = [], []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            ts = normalize_unix(row[cols["unix"]])
            vals = {k: float(row[cols[k]]) for k in ("open", "high", "low", "close")}
            vol_a = float(row[cols["volume_asset"]]) if "volume_asset" in cols else float("nan")
            vol_b = float(row[cols["volume_base"]]) if "volume_base" in cols else float("nan")
        except (ValueError, IndexError) as exc:
            rejects.append(Reject(line_no, f"unparseable field: {exc}", tuple(row)))
            continue
        if "date" in cols and cols["date"] < len(row):
            stamp = _parse_date(row[cols["date"]])
            if stamp is not None and int(stamp.timestamp()) != ts:
                rejects.append(Reject(line_no, "date column disagrees with unix timestamp", tuple(row)))
                continue
        symbol = row[cols["symbol"]].strip() if "symbol" in cols and cols["symbol"] < len(row) else ""
        bar = MinuteBar(ts, vals["open"], vals["high"], vals["low"], vals["close"],
                        vol_a, vol_b, symbol)
        why = bar.violation()
        if why:
            rejects.append(Reject(line_no, why, tuple(row)))
            continue
        bars.append(bar)
    if not bars and not rejects:
        raise InvalidInputError("file has a header but no data rows")
    return bars, rejects


def _utc_day(ts):
    return dt.datetime.fromtimestamp(ts, tz=dt.timezone.utc).date()


def daily_aggregate(bars):
    """
    Collapse minute bars into one record per UTC day.

    The response angle is the position of the extremal minute on the day
    circle: ``2*pi * m / 1440`` for minute-of-day ``m``; ties go to the
    earliest minute.  The predictor is ``(low/high) / (close - open)`` using
    the day's extreme prices and first open / last close.
    """
    if not bars:
        raise InvalidInputError("no bars to aggregate")
    by_day = defaultdict(dict)
    for bar in bars:
        minute = (bar.unix_ts % 86400) // 60
        # duplicate stamps: last one in file order wins
        by_day[_utc_day(bar.unix_ts)][minute] = bar

    records = []
    for day in sorted(by_day):
        minutes = sorted(by_day[day])
        day_bars = [by_day[day][m] for m in minutes]
        highs = np.array([b.high for b in day_bars])
        lows = np.array([b.low for b in day_bars])
        k_hi = int(np.argmax(highs))  # first occurrence == earliest minute
        k_lo = int(np.argmin(lows))
        day_high, day_low = float(highs[k_hi]), float(lows[k_lo])
        day_open, day_close = day_bars[0].open, day_bars[-1].close
        reason = None
        x = None
        if len(minutes) < (1.0 - MAX_MISSING_FRACTION) * MINUTES_PER_DAY:
            reason = "sparse-day"
        elif day_close == day_open:
            reason = "zero-open-close-spread"
        else:
            x = (day_low / day_high) / (day_close - day_open)
        records.append(DailyRecord(
            date=day,
            theta_high=TWO_PI * minutes[k_hi] / MINUTES_PER_DAY,
            theta_low=TWO_PI * minutes[k_lo] / MINUTES_PER_DAY,
            day_open=day_open, day_high=day_high, day_low=day_low, day_close=day_close,
            predictor_x=x, excluded_reason=reason,
        ))
    return records


def select_range(records, start_date=None, end_date=None):
    """Records with ``start_date <= date <= end_date`` (either bound optional)."""
    start = _as_date(start_date) if start_date is not None else None
    end = _as_date(end_date) if end_date is not None else None
    if start is not None and end is not None and start > end:
        raise InvalidInputError(f"start {start} is after end {end}")
    return [rec for rec in records
            if (start is None or rec.date >= start) and (end is None or rec.date <= end)]


def _as_date(value):
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    try:
        return dt.date.fromisoformat(str(value))
    except ValueError:
        raise InvalidInputError(f"dates must be YYYY-MM-DD, got {value!r}") from None


def _fmt(v, digits=None):
    if v is None:
        return ""
    if digits:
        return f"{v:.{digits}g}"
    return repr(float(v))


def write_daily_csv(records, stream):
    """Write records with the ``DAILY_HEADER`` columns; angles get 12 significant digits."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(DAILY_HEADER)
    for rec in records:
        writer.writerow([
            rec.date.isoformat(), _fmt(rec.theta_high, 12), _fmt(rec.theta_low, 12),
            _fmt(rec.day_open), _fmt(rec.day_high), _fmt(rec.day_low), _fmt(rec.day_close),
            _fmt(rec.predictor_x), rec.excluded_reason or "",
        ])


def read_daily_csv(stream):
    """Inverse of :func:`write_daily_csv`."""
    if isinstance(stream, (str, bytes)) or hasattr(stream, "__fspath__"):
        with open(stream, newline="") as fh:
            return read_daily_csv(fh)
    reader = csv.DictReader(stream)
    missing = set(DAILY_HEADER) - set(reader.fieldnames or ())
    if missing:
        raise SchemaError(f"daily file lacks columns {sorted(missing)}")
    out = []
    for row in reader:
        out.append(DailyRecord(
            date=dt.date.fromisoformat(row["date"]),
            theta_high=float(row["theta_high"]), theta_low=float(row["theta_low"]),
            day_open=float(row["day_open"]), day_high=float(row["day_high"]),
            day_low=float(row["day_low"]), day_close=float(row["day_close"]),
            predictor_x=float(row["predictor_x"]) if row["predictor_x"] else None,
            excluded_reason=row["excluded_reason"] or None,
        ))
    return out


def daily_csv_text(records):
    buf = io.StringIO()
    write_daily_csv(records, buf)
    return buf.getvalue()

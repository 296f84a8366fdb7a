"""Meter-reading ingestion: CSV parsing, household-day assembly, unit-sum normalization."""
from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, asdict
from datetime import date, datetime
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, ZeroConsumptionDay

SLOTS_PER_DAY = 96
HEADER = ["household_id", "timestamp", "kwh"]


@dataclass(frozen=True)
class MeterReading:
    household_id: str
    timestamp: datetime
    consumption: float

    @property
    def slot(self) -> int:
        return self.timestamp.hour * 4 + self.timestamp.minute // 15


@dataclass(frozen=True)
class LoadCurve:
    curve_id: int
    household_id: str
    date: date
    samples: np.ndarray


@dataclass(frozen=True)
class NormalizedCurve:
    curve_id: int
    values: np.ndarray


@dataclass
class RowProblem:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


@dataclass
class SkipReport:
    complete_days: int = 0
    skipped_incomplete: int = 0
    skipped_zero: int = 0
    skipped_duplicate: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _parse_row(row: list[str]) -> MeterReading:
    if len(row) != 3:
        raise ValueError(f"expected 3 fields, got {len(row)}")
    hid, ts, kwh = (s.strip() for s in row)
    if not hid:
        raise ValueError("empty household_id")
    try:
        stamp = datetime.fromisoformat(ts)
    except ValueError:
        raise ValueError(f"bad timestamp {ts!r}") from None
    if stamp.minute % 15 or stamp.second or stamp.microsecond:
        raise ValueError(f"timestamp {ts!r} not on a 15-minute boundary")
    try:
        value = float(kwh)
    except ValueError:
        raise ValueError(f"bad kwh {kwh!r}") from None
    if not np.isfinite(value):
        raise ValueError(f"non-finite kwh {kwh!r}")
    if value < 0:
        raise ValueError(f"negative kwh {kwh!r}")
    return MeterReading(hid, stamp, value)


def parse_readings(stream) -> tuple[list[MeterReading], list[RowProblem]]:
    """Parse a ``household_id,timestamp,kwh`` CSV.

    ``stream`` may be a binary or text file object, or raw ``bytes``.
    Malformed rows are skipped and reported as :class:`RowProblem` (with the
    1-based file line number); only a bad header is fatal.
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    if isinstance(stream, io.TextIOBase):
        text = stream
    else:
        text = io.TextIOWrapper(stream, encoding="utf-8", newline="")
    reader = csv.reader(text)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty input: missing header") from None
    if [h.strip() for h in header] != HEADER:
        raise FormatError(f"unexpected header {header!r}, expected {','.join(HEADER)}")

    readings, problems = [], []
    for row in reader:
        if not row or all(not s.strip() for s in row):
            continue
        try:
            readings.append(_parse_row(row))
        except ValueError as exc:
            problems.append(RowProblem(reader.line_num, str(exc)))
    return readings, problems


def assemble_days(readings: Iterable[MeterReading]) -> tuple[list[LoadCurve], SkipReport]:
    """Group readings into complete 96-slot household-days.

    Days with a missing slot or a repeated slot are dropped and counted.
    Curve ids follow sorted ``(household_id, date)`` order, so the result does
    not depend on the order of ``readings``.
    """
    days = defaultdict(list)
    for r in readings:
        days[(r.household_id, r.timestamp.date())].append(r)

    report = SkipReport()
    curves = []
    for hid, day in sorted(days):
        rows = days[(hid, day)]
        slots = [r.slot for r in rows]
        if len(set(slots)) != len(slots):
            report.skipped_duplicate += 1
            continue
        if len(rows) != SLOTS_PER_DAY:
            report.skipped_incomplete += 1
            continue
        samples = np.empty(SLOTS_PER_DAY)
        for r in rows:
            samples[r.slot] = r.consumption
        curves.append(LoadCurve(len(curves), hid, day, _readonly(samples)))
    report.complete_days = len(curves)
    return curves, report


def normalize(curve: LoadCurve) -> NormalizedCurve:
    total = float(np.sum(curve.samples))
    if total <= 0:
        raise ZeroConsumptionDay(
            f"curve {curve.curve_id} ({curve.household_id}, {curve.date}) has zero consumption")
    return NormalizedCurve(curve.curve_id, _readonly(curve.samples / total))


def normalize_all(curves: Sequence[LoadCurve], report: SkipReport | None = None) -> list[NormalizedCurve]:
    """Normalize every curve, dropping all-zero days (counted in ``report``)."""
    out = []
    for c in curves:
        try:
            out.append(normalize(c))
        except ZeroConsumptionDay:
            if report is not None:
                report.skipped_zero += 1
    return out


def as_matrix(curves: Sequence[NormalizedCurve]) -> tuple[list[int], np.ndarray]:
    """Stack normalized curves into an ``(n_curves, n_samples)`` array."""
    ids = [c.curve_id for c in curves]
    if not curves:
        return ids, np.empty((0, SLOTS_PER_DAY))
    return ids, np.vstack([c.values for c in curves])


def load_csv(path) -> tuple[list[LoadCurve], SkipReport, list[RowProblem]]:
    with open(path, "rb") as fh:
        readings, problems = parse_readings(fh)
    curves, report = assemble_days(readings)
    return curves, report, problems


# Curve table artifact: raw samples, written with repr() so it round-trips exactly.

def write_curves(curves: Sequence[LoadCurve], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["curve_id", "household_id", "date"] + [f"s{t}" for t in range(SLOTS_PER_DAY)])
        for c in curves:
            w.writerow([c.curve_id, c.household_id, c.date.isoformat()]
                       + [repr(float(v)) for v in c.samples])


def read_curves(path) -> list[LoadCurve]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:3] != ["curve_id", "household_id", "date"]:
            raise FormatError(f"{path}: not a curve table")
        for row in reader:
            out.append(LoadCurve(int(row[0]), row[1], date.fromisoformat(row[2]),
                                 _readonly([float(v) for v in row[3:]])))
    return out

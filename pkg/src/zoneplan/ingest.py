"""Raw data loading and resampling onto a regular 15-minute power grid."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from zoneinfo import ZoneInfo

import numpy as np

STEP_MINUTES = 15
STEP_SECONDS = STEP_MINUTES * 60
STEPS_PER_DAY = 96
DAY_SECONDS = STEPS_PER_DAY * STEP_SECONDS


class InputError(ValueError):
    """Malformed or inconsistent input data."""


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise InputError(f"bad timestamp {text!r}: {exc}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(epoch_s: int | float) -> str:
    dt = datetime.fromtimestamp(int(epoch_s), tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def _epoch(dt: datetime) -> int:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _read_rows(path, expected_header: list[str]):
    """Yield (line_number, row) from a CSV, skipping '#' comment lines."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = None
        for lineno, row in enumerate(reader, start=1):
            if not row or (row[0].startswith("#")):
                continue
            if header is None:
                header = [c.strip() for c in row]
                if header != expected_header:
                    raise InputError(
                        f"{path}: expected header {','.join(expected_header)}, "
                        f"got {','.join(header)} at line {lineno}"
                    )
                continue
            yield lineno, row
        if header is None:
            raise InputError(f"{path}: missing header row")


@dataclass
class PlugLoadEvents:
    """Change-triggered power readings for one occupant, time-sorted."""

    occupant_id: str
    times: np.ndarray  # epoch seconds, int64, strictly increasing
    powers: np.ndarray  # watts, float64, >= 0


def load_plug_load(path) -> dict[str, PlugLoadEvents]:
    """Load a plug-load event CSV (occupant_id,timestamp,power_w).

    Rows must be time-sorted within each occupant; duplicate or backward
    timestamps raise an error naming the offending line.
    """
    times: dict[str, list[int]] = {}
    powers: dict[str, list[float]] = {}
    for lineno, row in _read_rows(path, ["occupant_id", "timestamp", "power_w"]):
        if len(row) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        occ, ts_text, power_text = (c.strip() for c in row)
        if not occ:
            raise InputError(f"{path}:{lineno}: empty occupant_id")
        try:
            t = _epoch(parse_timestamp(ts_text))
            p = float(power_text)
        except (InputError, ValueError):
            raise InputError(f"{path}:{lineno}: malformed row {row!r}") from None
        if not np.isfinite(p) or p < 0:
            raise InputError(f"{path}:{lineno}: power must be finite and >= 0")
        prev = times.get(occ)
        if prev and t <= prev[-1]:
            raise InputError(
                f"{path}:{lineno}: non-monotone timestamp for occupant {occ}"
            )
        times.setdefault(occ, []).append(t)
        powers.setdefault(occ, []).append(p)
    return {
        occ: PlugLoadEvents(
            occ,
            np.asarray(times[occ], dtype=np.int64),
            np.asarray(powers[occ], dtype=np.float64),
        )
        for occ in times
    }


def write_plug_load(events: dict[str, PlugLoadEvents], path, header_comment: str | None = None) -> None:
    """Write events in the same CSV schema that load_plug_load reads."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["occupant_id", "timestamp", "power_w"])
        for occ in events:
            ev = events[occ]
            for t, p in zip(ev.times, ev.powers):
                writer.writerow([occ, format_timestamp(t), repr(float(p))])


@dataclass
class TimeSeriesGrid:
    """Mean power per occupant on a regular 15-minute grid spanning whole days."""

    occupants: list[str]
    start: datetime  # UTC, aligned to a 15-minute boundary
    values: np.ndarray  # (n_occupants, n_steps) watts

    def __post_init__(self):
        self.start = self.start.astimezone(timezone.utc)
        if self.values.ndim != 2 or self.values.shape[0] != len(self.occupants):
            raise InputError("grid shape does not match occupant list")
        if self.values.shape[1] % STEPS_PER_DAY != 0:
            raise InputError("grid column count must cover whole days")

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]

    @property
    def n_days(self) -> int:
        return self.n_steps // STEPS_PER_DAY

    def step_epochs(self) -> np.ndarray:
        return _epoch(self.start) + STEP_SECONDS * np.arange(self.n_steps, dtype=np.int64)

    def index_of(self, occupant_id: str) -> int:
        try:
            return self.occupants.index(occupant_id)
        except ValueError:
            raise InputError(f"unknown occupant {occupant_id!r}") from None


def _locf_cell_means(times: np.ndarray, powers: np.ndarray, start_s: int, n_steps: int) -> np.ndarray:
    """Time-weighted mean per 15-minute cell of the carried-forward signal.

    Intervals before the first event take the first observed value.  An
    event landing exactly on a cell boundary belongs to the cell it opens.
    """
    end_s = start_s + n_steps * STEP_SECONDS
    bounds = start_s + STEP_SECONDS * np.arange(n_steps + 1, dtype=np.int64)
    inside = times[(times > start_s) & (times < end_s)]
    cuts = np.unique(np.concatenate([bounds, inside]))
    seg_starts = cuts[:-1]
    seg_lengths = np.diff(cuts).astype(np.float64)
    idx = np.searchsorted(times, seg_starts, side="right") - 1
    seg_values = powers[np.maximum(idx, 0)]
    cell = (seg_starts - start_s) // STEP_SECONDS
    integral = np.zeros(n_steps, dtype=np.float64)
    np.add.at(integral, cell, seg_values * seg_lengths)
    return integral / STEP_SECONDS


def resample_15min(
    events: dict[str, PlugLoadEvents], window: tuple[datetime, datetime]
) -> TimeSeriesGrid:
    """Resample change-triggered events to the 15-minute grid over a window.

    The reconstructed signal is piecewise constant between events
    (last observation carried forward); each grid cell holds its
    time-weighted mean.
    """
    start, end = window
    start_s, end_s = _epoch(start), _epoch(end)
    if start_s % STEP_SECONDS or end_s % STEP_SECONDS:
        raise InputError("window boundaries must align to 15-minute marks")
    if end_s <= start_s or (end_s - start_s) % DAY_SECONDS:
        raise InputError("window must span a positive whole number of days")
    missing = [
        occ
        for occ, ev in events.items()
        if ev.times.size == 0 or ev.times[0] >= end_s
    ]
    if missing:
        raise InputError(
            "occupants with no events before window end: " + ", ".join(sorted(missing))
        )
    n_steps = (end_s - start_s) // STEP_SECONDS
    occupants = list(events)
    values = np.empty((len(occupants), n_steps), dtype=np.float64)
    for i, occ in enumerate(occupants):
        ev = events[occ]
        values[i] = _locf_cell_means(ev.times, ev.powers, start_s, n_steps)
    return TimeSeriesGrid(occupants, start.astimezone(timezone.utc), values)


def exclude_days(
    grid: TimeSeriesGrid, day_ranges: list[tuple[datetime, datetime]]
) -> TimeSeriesGrid:
    """Drop whole-day column blocks covered by [start, end) datetime ranges."""
    if not day_ranges:
        return TimeSeriesGrid(list(grid.occupants), grid.start, grid.values.copy())
    start_s = _epoch(grid.start)
    drop = np.zeros(grid.n_days, dtype=bool)
    for a, b in day_ranges:
        a_s, b_s = _epoch(a), _epoch(b)
        if (a_s - start_s) % DAY_SECONDS or (b_s - start_s) % DAY_SECONDS:
            raise InputError("exclusion range must align to grid day boundaries")
        first = (a_s - start_s) // DAY_SECONDS
        last = (b_s - start_s) // DAY_SECONDS
        if first < 0 or last > grid.n_days or first >= last:
            raise InputError("exclusion range outside grid window")
        drop[first:last] = True
    if drop.all():
        raise InputError("empty grid: all days excluded")
    keep_cols = np.repeat(~drop, STEPS_PER_DAY)
    return TimeSeriesGrid(list(grid.occupants), grid.start, grid.values[:, keep_cols])


def write_grid(grid: TimeSeriesGrid, path, header_comment: str | None = None) -> None:
    epochs = grid.step_epochs()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["occupant_id", "timestamp", "power_w"])
        for i, occ in enumerate(grid.occupants):
            for t, p in zip(epochs, grid.values[i]):
                writer.writerow([occ, format_timestamp(t), repr(float(p))])


def load_grid(path) -> TimeSeriesGrid:
    per_occ: dict[str, list[tuple[int, float]]] = {}
    for lineno, row in _read_rows(path, ["occupant_id", "timestamp", "power_w"]):
        if len(row) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 fields")
        occ = row[0].strip()
        per_occ.setdefault(occ, []).append(
            (_epoch(parse_timestamp(row[1])), float(row[2]))
        )
    if not per_occ:
        raise InputError(f"{path}: no grid rows")
    occupants = list(per_occ)
    first = per_occ[occupants[0]]
    epochs = np.array([t for t, _ in first], dtype=np.int64)
    if np.any(np.diff(epochs) != STEP_SECONDS):
        raise InputError(f"{path}: grid timestamps must be contiguous 15-minute steps")
    values = np.empty((len(occupants), epochs.size))
    for i, occ in enumerate(occupants):
        rows = per_occ[occ]
        if len(rows) != epochs.size or any(t != e for (t, _), e in zip(rows, epochs)):
            raise InputError(f"{path}: occupant {occ} does not share the grid timeline")
        values[i] = [p for _, p in rows]
    start = datetime.fromtimestamp(int(epochs[0]), tz=timezone.utc)
    return TimeSeriesGrid(occupants, start, values)


@dataclass
class ZoneMap:
    """Desk inventory: rows of (occupant_id, desk_id, zone_id).

    An empty occupant_id marks a vacant desk.
    """

    entries: list[tuple[str, str, str]]

    def __post_init__(self):
        desks = [d for _, d, _ in self.entries]
        if len(set(desks)) != len(desks):
            raise InputError("desk_ids must be unique")
        occs = [o for o, _, _ in self.entries if o]
        if len(set(occs)) != len(occs):
            raise InputError("an occupant may hold at most one desk")
        if not self.entries:
            raise InputError("zone map is empty")

    @property
    def zone_sizes(self) -> dict[str, int]:
        sizes: dict[str, int] = {}
        for _, _, z in self.entries:
            sizes[z] = sizes.get(z, 0) + 1
        return sizes

    def zone_desks(self) -> dict[str, tuple[str, ...]]:
        desks: dict[str, list[str]] = {}
        for _, d, z in self.entries:
            desks.setdefault(z, []).append(d)
        return {z: tuple(ds) for z, ds in desks.items()}

    def occupied(self) -> dict[str, str]:
        """desk_id -> occupant_id over occupied desks."""
        return {d: o for o, d, _ in self.entries if o}


def load_zone_map(path) -> ZoneMap:
    entries = []
    for lineno, row in _read_rows(path, ["occupant_id", "desk_id", "zone_id"]):
        if len(row) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 fields")
        occ, desk, zone = (c.strip() for c in row)
        if not desk or not zone:
            raise InputError(f"{path}:{lineno}: desk_id and zone_id are required")
        entries.append((occ, desk, zone))
    return ZoneMap(entries)


def write_zone_map(zone_map: ZoneMap, path, header_comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("occupant_id,desk_id,zone_id\n")
        for occ, desk, zone in zone_map.entries:
            fh.write(f"{occ},{desk},{zone}\n")


@dataclass
class LightingTable:
    """Per-zone hourly lighting energy, keyed by (zone_id, hour epoch)."""

    records: dict[tuple[str, int], float]

    def __post_init__(self):
        for (zone, hour), wh in self.records.items():
            if hour % 3600:
                raise InputError(f"lighting record for {zone} not on the hour")
            if wh < 0 or not np.isfinite(wh):
                raise InputError(f"lighting energy must be finite and >= 0 ({zone})")

    def zones(self) -> list[str]:
        return sorted({z for z, _ in self.records})

    def energy(self, zone: str, hour_epoch: int) -> float:
        key = (zone, hour_epoch)
        if key not in self.records:
            raise InputError(
                f"missing lighting record for zone {zone} at {format_timestamp(hour_epoch)}"
            )
        return self.records[key]


def load_lighting(path) -> LightingTable:
    records: dict[tuple[str, int], float] = {}
    for lineno, row in _read_rows(path, ["zone_id", "hour_start", "energy_wh"]):
        if len(row) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 fields")
        zone = row[0].strip()
        key = (zone, _epoch(parse_timestamp(row[1])))
        if key in records:
            raise InputError(f"{path}:{lineno}: duplicate record for {key}")
        records[key] = float(row[2])
    return LightingTable(records)


def write_lighting(table: LightingTable, path, header_comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["zone_id", "hour_start", "energy_wh"])
        for zone, hour in sorted(table.records):
            writer.writerow([zone, format_timestamp(hour), repr(float(table.records[(zone, hour)]))])


@dataclass
class StepCalendar:
    """Civil-time features (hour, weekday, weekend) for each 15-minute step.

    Weekday convention: Monday = 0; weekend = Saturday or Sunday.
    """

    start: datetime
    n_steps: int
    tz: str = "UTC"
    hours: np.ndarray = field(init=False)
    dows: np.ndarray = field(init=False)
    weekend: np.ndarray = field(init=False)

    def __post_init__(self):
        zone = ZoneInfo(self.tz)
        start = self.start.astimezone(timezone.utc)
        hours = np.empty(self.n_steps, dtype=np.int16)
        dows = np.empty(self.n_steps, dtype=np.int16)
        for k in range(self.n_steps):
            local = (start + timedelta(seconds=k * STEP_SECONDS)).astimezone(zone)
            hours[k] = local.hour
            dows[k] = local.weekday()
        self.hours = hours
        self.dows = dows
        self.weekend = dows >= 5

    def hour_epochs(self) -> np.ndarray:
        """Epoch second of the hour each step falls in."""
        start_s = _epoch(self.start)
        steps = start_s + STEP_SECONDS * np.arange(self.n_steps, dtype=np.int64)
        return (steps // 3600) * 3600

    def hour_group(self) -> np.ndarray:
        """Index of the hour each step falls in (for hourly aggregation)."""
        hours = self.hour_epochs()
        return ((hours - hours[0]) // 3600).astype(np.int64)

    def day_group(self) -> np.ndarray:
        return np.arange(self.n_steps) // STEPS_PER_DAY

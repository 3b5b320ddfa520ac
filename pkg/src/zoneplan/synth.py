"""Synthetic archetype schedules and a rule-based lighting oracle.

Archetypes describe a daily routine (arrival, lunch, meetings,
departure); generated schedules are state 1 outside working windows and
randomly state 3 (with probability p_high) or state 2 inside them.  The
oracle lights a zone while any assigned occupant showed motion (state 3)
within a trailing hold window, giving closed-loop ground truth that
flows through the same CSV schemas as measured data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .ingest import STEPS_PER_DAY, LightingTable, StepCalendar
from .states import StateGrid

DEFAULT_START = datetime(2018, 1, 1, tzinfo=timezone.utc)  # a Monday


@dataclass(frozen=True)
class Archetype:
    """Daily routine template; times are minutes from midnight."""

    name: str
    arrival_min: int
    departure_min: int
    lunch: tuple[int, int] | None = None  # (start, duration)
    meetings: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if not 0 <= self.arrival_min <= self.departure_min <= 24 * 60:
            raise ValueError(f"{self.name}: arrival must not be after departure")
        for start, dur in ((self.lunch,) if self.lunch else ()) + self.meetings:
            if dur <= 0:
                raise ValueError(f"{self.name}: window durations must be positive")
            if start < self.arrival_min or start + dur > self.departure_min:
                raise ValueError(f"{self.name}: away windows must lie inside the workday")

    def away_windows(self) -> list[tuple[int, int]]:
        wins = [self.lunch] if self.lunch else []
        return wins + list(self.meetings)


# Four-archetype synthetic population. The fourth archetype's lunch is
# taken as 11:00 (the source table's "11pm" cannot lie inside a 7am-5pm
# workday and is read as a typo for 11am).
DEFAULT_ARCHETYPES: tuple[Archetype, ...] = (
    Archetype("A1", 9 * 60, 17 * 60, lunch=(12 * 60, 60), meetings=((15 * 60, 60),)),
    Archetype("A2", 9 * 60, 16 * 60),
    Archetype("A3", 11 * 60, 19 * 60, lunch=(15 * 60, 60), meetings=((15 * 60, 60),)),
    Archetype("A4", 7 * 60, 17 * 60, lunch=(11 * 60, 60), meetings=((13 * 60, 120),)),
)


def generate_schedule(
    archetype: Archetype,
    n_days: int,
    p_high: float = 0.8,
    seed: int = 0,
    jitter_minutes: float = 0.0,
) -> np.ndarray:
    """Seeded daily state sequence, 96 entries per day.

    A step is working time when its start minute falls in [arrival,
    departure) and outside lunch/meeting windows; working steps draw
    state 3 with probability p_high, else state 2.  jitter_minutes > 0
    shifts every boundary by an independent uniform offset each day.
    """
    if not 0.0 <= p_high <= 1.0:
        raise ValueError("p_high must be in [0, 1]")
    if n_days < 1:
        raise ValueError("n_days must be >= 1")
    rng = np.random.default_rng(seed)
    step_minutes = np.arange(STEPS_PER_DAY) * 15.0
    out = np.ones(n_days * STEPS_PER_DAY, dtype=np.int8)
    windows = archetype.away_windows()
    for day in range(n_days):
        def shift() -> float:
            return float(rng.uniform(-jitter_minutes, jitter_minutes)) if jitter_minutes > 0 else 0.0

        arrival = archetype.arrival_min + shift()
        departure = archetype.departure_min + shift()
        working = (step_minutes >= arrival) & (step_minutes < departure)
        for start, dur in windows:
            s = start + shift()
            working &= ~((step_minutes >= s) & (step_minutes < s + dur))
        draws = rng.random(STEPS_PER_DAY)
        states = np.where(working, np.where(draws < p_high, 3, 2), 1).astype(np.int8)
        out[day * STEPS_PER_DAY : (day + 1) * STEPS_PER_DAY] = states
    return out


def generate_population(
    counts: tuple[int, ...] | list[int],
    n_days: int,
    seed: int = 0,
    p_high: float = 0.8,
    archetypes: tuple[Archetype, ...] = DEFAULT_ARCHETYPES,
    start: datetime = DEFAULT_START,
    jitter_minutes: float = 0.0,
) -> StateGrid:
    """Population of seeded schedules; occupant ids carry the archetype name."""
    if len(counts) != len(archetypes):
        raise ValueError("one count per archetype is required")
    if any(c < 0 for c in counts):
        raise ValueError("counts must be non-negative")
    occupants: list[str] = []
    rows: list[np.ndarray] = []
    index = 0
    for archetype, count in zip(archetypes, counts):
        for j in range(count):
            child_seed = int(np.random.SeedSequence([seed, index]).generate_state(1)[0])
            occupants.append(f"{archetype.name}-{j:02d}")
            rows.append(
                generate_schedule(archetype, n_days, p_high, child_seed, jitter_minutes)
            )
            index += 1
    if not occupants:
        raise ValueError("population is empty")
    return StateGrid(occupants, start, np.vstack(rows))


@dataclass(frozen=True)
class LightingOracleConfig:
    """Occupancy-triggered zone lighting rules."""

    lit_power_w: float = 500.0
    standby_power_w: float = 20.0
    hold_weekday_min: int = 20
    hold_weekend_min: int = 10
    motion_state: int = 3
    daylight_factor: bool = False  # optional sinusoidal midday reduction

    def __post_init__(self):
        if not self.lit_power_w > self.standby_power_w >= 0:
            raise ValueError("need lit_power > standby_power >= 0")
        if self.hold_weekday_min <= 0 or self.hold_weekend_min <= 0:
            raise ValueError("hold times must be positive")

    def hold_steps(self, weekend: bool) -> int:
        mins = self.hold_weekend_min if weekend else self.hold_weekday_min
        return math.ceil(mins / 15)


def oracle_lighting(
    zones: dict[str, list[str]],
    states: StateGrid,
    config: LightingOracleConfig | None = None,
    calendar: StepCalendar | None = None,
) -> tuple[list[str], np.ndarray]:
    """Per-zone per-step oracle energy (wh).

    A zone is lit at step t when any assigned occupant reached
    motion_state at any step in [t - h, t], h being the hold window in
    steps for t's day type.  Returns (zone_order, energy matrix).
    """
    cfg = config or LightingOracleConfig()
    cal = calendar or StepCalendar(states.start, states.n_steps)
    if cal.n_steps != states.n_steps:
        raise ValueError("calendar length does not match the state grid")
    occ_index = {occ: i for i, occ in enumerate(states.occupants)}
    zone_order = sorted(zones)
    n_steps = states.n_steps
    weekend = cal.weekend.astype(bool)
    h_per_step = np.where(weekend, cfg.hold_steps(True), cfg.hold_steps(False))
    max_h = int(h_per_step.max()) if n_steps else 0
    energy = np.empty((len(zone_order), n_steps))
    for j, zone_id in enumerate(zone_order):
        members = zones[zone_id]
        missing = [o for o in members if o not in occ_index]
        if missing:
            raise ValueError(f"zone {zone_id}: occupants without states: {missing}")
        if members:
            rows = states.states[[occ_index[o] for o in members]]
            motion = np.any(rows >= cfg.motion_state, axis=0)
        else:
            motion = np.zeros(n_steps, dtype=bool)
        lit = motion.copy()
        for k in range(1, max_h + 1):
            shifted = np.zeros(n_steps, dtype=bool)
            shifted[k:] = motion[:-k]
            lit |= shifted & (h_per_step >= k)
        power = np.where(lit, cfg.lit_power_w, cfg.standby_power_w)
        if cfg.daylight_factor:
            # midday daylight displaces up to half the lit power
            reduction = 0.5 * np.maximum(0.0, np.sin(np.pi * (cal.hours - 6) / 12.0))
            power = np.where(lit, power * (1.0 - reduction), power)
        energy[j] = power * 0.25
    return zone_order, energy


def oracle_lighting_table(
    zones: dict[str, list[str]],
    states: StateGrid,
    config: LightingOracleConfig | None = None,
    calendar: StepCalendar | None = None,
) -> LightingTable:
    """Oracle output folded to the hourly lighting CSV schema."""
    cal = calendar or StepCalendar(states.start, states.n_steps)
    zone_order, energy = oracle_lighting(zones, states, config, cal)
    hour_epochs = cal.hour_epochs()
    hours, inverse = np.unique(hour_epochs, return_inverse=True)
    records: dict[tuple[str, int], float] = {}
    for j, zone_id in enumerate(zone_order):
        sums = np.bincount(inverse, weights=energy[j], minlength=hours.size)
        for h, wh in zip(hours, sums):
            records[(zone_id, int(h))] = float(wh)
    return LightingTable(records)


def archetype_pure_layout(states: StateGrid, n_zones: int) -> dict[str, list[str]]:
    """Group occupants by archetype prefix into n_zones equal zones.

    Occupant ids follow the generate_population naming; equal zone sizes
    are required.  Returns a zone -> occupants mapping.
    """
    n = len(states.occupants)
    if n % n_zones != 0:
        raise ValueError("zones must divide the population evenly")
    size = n // n_zones
    by_prefix = sorted(states.occupants, key=lambda o: (o.split("-")[0], o))
    return {
        f"Z{z + 1}": by_prefix[z * size : (z + 1) * size] for z in range(n_zones)
    }

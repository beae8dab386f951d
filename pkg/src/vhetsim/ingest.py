"""CDR ingestion: parsing, aggregation, normalization and synthetic traffic.

The raw input is the Telecom Italia Milan grid activity dump: tab separated
lines of (square_id, interval_ms, country_code, sms_in, sms_out, call_in,
call_out, internet), one record per line, inactive intervals simply absent.
Everything downstream works on per-cell daily load profiles of 144 ten-minute
slots, normalized to [0, 1] by the corpus-wide maximum.
"""

from __future__ import annotations

import csv
import gzip
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import CdrParseError, NormalizationError

SLOTS_PER_DAY = 144
SLOT_MS = 600_000
DAY_MS = 86_400_000
MILAN_GRID_CELLS = 10_000
DEFAULT_CELL_SIZE_M = 235.0

_ACTIVITY_FIELDS = ("sms_in", "sms_out", "call_in", "call_out", "internet")
_STATIC_NOISE_SHARE = 0.75


@dataclass(frozen=True)
class CdrRecord:
    square_id: int
    time_interval: int
    country_code: int
    sms_in: float = 0.0
    sms_out: float = 0.0
    call_in: float = 0.0
    call_out: float = 0.0
    internet: float = 0.0

    @property
    def activity(self) -> float:
        """Consolidated traffic measure: unweighted sum of the five columns."""
        return self.sms_in + self.sms_out + self.call_in + self.call_out + self.internet

    @property
    def slot_of_day(self) -> int:
        return (self.time_interval % DAY_MS) // SLOT_MS


@dataclass(frozen=True)
class TrafficProfile:
    """One cell's normalized daily load series (144 load factors in [0, 1])."""

    cell_id: int
    position: tuple[float, float]
    slots: tuple[float, ...]

    def __post_init__(self):
        if len(self.slots) != SLOTS_PER_DAY:
            raise ValueError(f"profile needs {SLOTS_PER_DAY} slots, got {len(self.slots)}")
        if any(not (0.0 <= v <= 1.0) for v in self.slots):
            raise ValueError("load factors must lie in [0, 1]")


@dataclass(frozen=True)
class SynthParams:
    """Parameters for the synthetic spatially-correlated traffic generator."""

    grid_side: int
    spatial_correlation_length: float
    noise_std: float
    seed: int
    temporal_profile: tuple[float, ...] = field(default=None)
    cell_size_m: float = DEFAULT_CELL_SIZE_M

    def __post_init__(self):
        if self.grid_side < 2:
            raise ValueError("grid_side must be >= 2")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.spatial_correlation_length <= 0:
            raise ValueError("spatial_correlation_length must be > 0")
        if self.temporal_profile is None:
            object.__setattr__(self, "temporal_profile", default_diurnal_profile())
        if len(self.temporal_profile) != SLOTS_PER_DAY:
            raise ValueError("temporal_profile needs 144 entries")


def default_diurnal_profile() -> tuple[float, ...]:
    """A smooth day curve: quiet at night, peaking in the evening."""
    t = np.arange(SLOTS_PER_DAY) / SLOTS_PER_DAY
    base = 0.45 - 0.35 * np.cos(2.0 * math.pi * (t - 0.33))
    return tuple(float(v) for v in np.clip(base, 0.05, 0.95))


def _parse_float(raw: str, name: str, line_number: int) -> float:
    if raw == "":
        return 0.0
    try:
        value = float(raw)
    except ValueError:
        raise CdrParseError(f"bad {name} value {raw!r}", line_number) from None
    if value < 0:
        raise CdrParseError(f"negative {name} value {raw!r}", line_number)
    return value


def parse_cdr_line(line: str, line_number: int = 0) -> CdrRecord:
    """Parse one tab-separated CDR line; absent trailing activities become 0."""
    fields = line.rstrip("\n").split("\t")
    if not 3 <= len(fields) <= 3 + len(_ACTIVITY_FIELDS):
        raise CdrParseError(f"expected 3..8 fields, got {len(fields)}", line_number)
    try:
        square_id = int(fields[0])
        interval = int(fields[1])
        country = int(fields[2])
    except ValueError as exc:
        raise CdrParseError(str(exc), line_number) from None
    if not 1 <= square_id <= MILAN_GRID_CELLS:
        raise CdrParseError(f"square_id {square_id} outside [1, {MILAN_GRID_CELLS}]", line_number)
    if interval % SLOT_MS != 0:
        raise CdrParseError(f"interval {interval} not a 10-minute boundary", line_number)
    activities = {
        name: _parse_float(fields[3 + i] if 3 + i < len(fields) else "", name, line_number)
        for i, name in enumerate(_ACTIVITY_FIELDS)
    }
    return CdrRecord(square_id, interval, country, **activities)


def cdr_line(record: CdrRecord) -> str:
    """Serialize a record back to the tab-separated wire format."""
    return "\t".join(
        [str(record.square_id), str(record.time_interval), str(record.country_code)]
        + [repr(getattr(record, name)) for name in _ACTIVITY_FIELDS]
    )


def aggregate_records(records) -> dict[tuple[int, int], float]:
    """Sum activity over country codes into (square_id, slot_of_day) totals."""
    totals: dict[tuple[int, int], float] = {}
    for rec in records:
        key = (rec.square_id, rec.slot_of_day)
        totals[key] = totals.get(key, 0.0) + rec.activity
    return totals


def merge_aggregates(*maps) -> dict[tuple[int, int], float]:
    """Merge shard-local aggregate maps (file-parallel ingestion)."""
    merged: dict[tuple[int, int], float] = {}
    for m in maps:
        for key, value in m.items():
            merged[key] = merged.get(key, 0.0) + value
    return merged


def build_daily_profile(
    aggregates: dict[tuple[int, int], float],
    day_count: int,
    squares=None,
) -> dict[int, np.ndarray]:
    """Average slot totals over the observation days; missing slots are 0.

    `squares` optionally fixes the cell universe; cells without any record get
    an all-zero profile. By default only cells present in the aggregates appear.
    """
    if day_count < 1:
        raise ValueError("day_count must be >= 1")
    profiles: dict[int, np.ndarray] = {}
    if squares is not None:
        for square in squares:
            profiles[square] = np.zeros(SLOTS_PER_DAY)
    for (square, slot), total in aggregates.items():
        vec = profiles.setdefault(square, np.zeros(SLOTS_PER_DAY))
        vec[slot] = total / day_count
    return profiles


def grid_centroid(square_id: int, grid_side: int, cell_size_m: float = DEFAULT_CELL_SIZE_M) -> tuple[float, float]:
    """Row-major square grid: id 1 is the (0, 0) corner cell."""
    if cell_size_m <= 0:
        raise ValueError("cell_size_m must be > 0")
    if not 1 <= square_id <= grid_side * grid_side:
        raise ValueError(f"square_id {square_id} outside [1, {grid_side * grid_side}]")
    row, col = divmod(square_id - 1, grid_side)
    return ((col + 0.5) * cell_size_m, (row + 0.5) * cell_size_m)


def normalize_profiles(
    profiles: dict[int, np.ndarray],
    grid_side: int,
    cell_size_m: float = DEFAULT_CELL_SIZE_M,
) -> list[TrafficProfile]:
    """Divide every raw value by the corpus-wide maximum so the peak maps to 1."""
    if not profiles:
        raise NormalizationError("empty profile corpus")
    peak = max(float(np.max(vec)) for vec in profiles.values())
    if peak <= 0.0:
        raise NormalizationError("all-zero corpus: nothing to normalize")
    out = []
    for square in sorted(profiles):
        slots = tuple(float(v) / peak for v in profiles[square])
        out.append(TrafficProfile(square, grid_centroid(square, grid_side, cell_size_m), slots))
    return out


def synth_traffic(params: SynthParams) -> list[TrafficProfile]:
    """Generate spatially-correlated synthetic profiles on a square grid.

    Each cell's series is the shared diurnal profile plus a persistent
    Gaussian-smoothed per-cell offset (busy and quiet neighborhoods) and a
    smaller per-slot smoothed noise field, so nearby cells move together
    while distant cells are nearly independent. Deterministic for a fixed
    seed.
    """
    rng = np.random.default_rng(params.seed)
    side = params.grid_side
    profile = np.asarray(params.temporal_profile)
    loads = np.tile(profile, (side * side, 1))
    if params.noise_std > 0:
        sigma = params.spatial_correlation_length / params.cell_size_m

        def smooth_field():
            field = gaussian_filter(rng.normal(size=(side, side)), sigma=sigma, mode="wrap")
            std = field.std()
            return field / std if std > 0 else field

        # 3:1 split between the static neighborhood offset and slot-level jitter
        static = _STATIC_NOISE_SHARE * params.noise_std * smooth_field().ravel()
        slot_std = (1.0 - _STATIC_NOISE_SHARE) * params.noise_std
        for t in range(SLOTS_PER_DAY):
            loads[:, t] += static + slot_std * smooth_field().ravel()
        np.clip(loads, 0.0, 1.0, out=loads)
    return [
        TrafficProfile(i + 1, grid_centroid(i + 1, side, params.cell_size_m),
                       tuple(float(v) for v in loads[i]))
        for i in range(side * side)
    ]


def iter_cdr_file(path):
    """Yield records from a plain or gzip-compressed CDR text file."""
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if line.strip():
                yield parse_cdr_line(line, line_number=i)


def ingest_dataset(
    dataset_dir,
    grid_side: int,
    cell_size_m: float = DEFAULT_CELL_SIZE_M,
    day_count: int | None = None,
) -> list[TrafficProfile]:
    """Parse every CDR file under a directory into normalized profiles.

    With day_count=None the number of days is inferred from the distinct
    calendar days present in the data.
    """
    paths = sorted(
        p for p in Path(dataset_dir).iterdir()
        if p.suffix in {".txt", ".tsv", ".gz"} or p.name.endswith(".txt.gz")
    )
    if not paths:
        raise NormalizationError(f"no CDR files found under {dataset_dir}")
    totals: dict[tuple[int, int], float] = {}
    days: set[int] = set()
    for path in paths:
        shard = {}
        for rec in iter_cdr_file(path):
            days.add(rec.time_interval // DAY_MS)
            key = (rec.square_id, rec.slot_of_day)
            shard[key] = shard.get(key, 0.0) + rec.activity
        totals = merge_aggregates(totals, shard)
    raw = build_daily_profile(totals, day_count if day_count is not None else max(len(days), 1))
    return normalize_profiles(raw, grid_side, cell_size_m)


def save_profile_cache(profiles: list[TrafficProfile], path) -> None:
    """Write profiles as a CSV cache: cell_id, x_m, y_m, s000..s143."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["cell_id", "x_m", "y_m"] + [f"s{t:03d}" for t in range(SLOTS_PER_DAY)])
        for p in profiles:
            writer.writerow([p.cell_id, repr(float(p.position[0])), repr(float(p.position[1]))]
                            + [repr(float(v)) for v in p.slots])


def load_profile_cache(path) -> list[TrafficProfile]:
    """Read a profile cache written by save_profile_cache."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["cell_id", "x_m", "y_m"]:
            raise NormalizationError(f"not a profile cache: {path}")
        for row in reader:
            out.append(TrafficProfile(
                int(row[0]),
                (float(row[1]), float(row[2])),
                tuple(float(v) for v in row[3:]),
            ))
    return out

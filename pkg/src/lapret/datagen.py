"""Synthetic tradezone construction from DMA-level inputs, and panel CSV ingestion.

File schemas (UTF-8, comma-separated, LF line endings):

    panel.csv        unit_id,day,outcome
    covariates.csv   unit_id,c1,...,ck
    events.csv       unit_id,event_indicator,event_day   (event_day empty for controls)
    dma.csv          dma_id,population,c1,...,ck
    dma_panel.csv    dma_id,day,outcome,snowfall_kg_m2
"""
from __future__ import annotations

import csv
import io
import math
import zlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import (
    DanglingEvent,
    DuplicateRow,
    NoControlDmas,
    NoTreatedDmas,
    NonContiguousDays,
    SchemaError,
    TotalTooSmall,
    ValidationError,
)
from .model import UnitSeries

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class DmaRecord:
    dma_id: str
    population: int
    covariates: np.ndarray
    outcomes: np.ndarray  # days 1..T
    snowfall: np.ndarray  # kg/m^2, same days

    def __post_init__(self):
        object.__setattr__(self, "covariates", np.asarray(self.covariates, dtype=float))
        object.__setattr__(self, "outcomes", np.asarray(self.outcomes, dtype=float))
        object.__setattr__(self, "snowfall", np.asarray(self.snowfall, dtype=float))
        if self.population <= 0:
            raise ValidationError(f"DMA {self.dma_id}: population must be positive")
        if self.outcomes.shape != self.snowfall.shape:
            raise ValidationError(f"DMA {self.dma_id}: outcomes and snowfall cover different days")
        if np.any(self.snowfall < 0):
            raise ValidationError(f"DMA {self.dma_id}: negative snowfall")


@dataclass(frozen=True)
class GeneratorSpec:
    sigma: float
    snow_threshold_h: float = 1.0
    control_threshold_l: float = 0.3
    total_tradezones: int = 3676
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        if not self.control_threshold_l < self.snow_threshold_h:
            raise ValidationError("control threshold l must be below snow threshold h")


def allocate_tradezones(dmas: Sequence[DmaRecord], total: int) -> dict[str, int]:
    """Largest-remainder apportionment of ``total`` by population.

    Remainder ties go to the smallest dma_id. Every DMA receives at least one
    tradezone.
    """
    if total < len(dmas):
        raise TotalTooSmall(f"{total} tradezones cannot cover {len(dmas)} DMAs")
    ordered = sorted(dmas, key=lambda d: d.dma_id)
    pop = np.array([d.population for d in ordered], dtype=float)
    quota = total * pop / pop.sum()
    count = np.floor(quota).astype(int)
    rest = total - int(count.sum())
    by_remainder = sorted(range(len(ordered)), key=lambda k: (-(quota[k] - count[k]), k))
    for k in by_remainder[:rest]:
        count[k] += 1
    for k in np.flatnonzero(count == 0):
        # take the seat from the most over-represented DMA that can spare one
        donors = [j for j in range(len(ordered)) if count[j] > 1]
        j = max(donors, key=lambda j: (count[j] - quota[j], -j))
        count[j] -= 1
        count[k] += 1
    return {d.dma_id: int(c) for d, c in zip(ordered, count)}


def truncated_normal(rng: np.random.Generator, mean, sigma: float, lower: float = 0.0) -> np.ndarray:
    """Normal(mean, sigma^2) draws conditioned on ``>= lower``, by rejection."""
    mean = np.asarray(mean, dtype=float)
    out = mean + sigma * rng.standard_normal(mean.shape)
    bad = out < lower
    for _ in range(10_000):
        if not bad.any():
            return out
        out[bad] = mean[bad] + sigma * rng.standard_normal(int(bad.sum()))
        bad = out < lower
    raise ValidationError("rejection sampler stalled; mean is far below the truncation point")


def dma_role(dma: DmaRecord, spec: GeneratorSpec) -> Optional[str]:
    """'treated', 'control', or None for DMAs whose tradezones are ignored."""
    if np.any(dma.snowfall > spec.snow_threshold_h):
        return "treated"
    if np.all(dma.snowfall <= spec.control_threshold_l):
        return "control"
    return None


def _stream(seed: int, dma_id: str, j: int) -> np.random.Generator:
    key = (zlib.crc32(dma_id.encode()), j)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def generate_tradezones(dmas: Sequence[DmaRecord], spec: GeneratorSpec) -> list[UnitSeries]:
    """Synthetic tradezones for every treated or control DMA.

    Tradezone j of DMA i copies the DMA covariates and draws each day's
    outcome from Normal(mu_i(t), sigma^2) truncated below at zero. Treated
    tradezones get one event day, drawn among the DMA's days with snowfall
    above h with probability proportional to that snowfall.
    """
    counts = allocate_tradezones(dmas, spec.total_tradezones)
    roles = {d.dma_id: dma_role(d, spec) for d in dmas}
    if "treated" not in roles.values():
        raise NoTreatedDmas(f"no DMA has snowfall above h = {spec.snow_threshold_h}")
    if "control" not in roles.values():
        raise NoControlDmas(f"no DMA stays at or below l = {spec.control_threshold_l}")

    units = []
    for dma in sorted(dmas, key=lambda d: d.dma_id):
        role = roles[dma.dma_id]
        if role is None:
            continue
        if role == "treated":
            eligible = np.flatnonzero(dma.snowfall > spec.snow_threshold_h)
            weights = dma.snowfall[eligible] / dma.snowfall[eligible].sum()
        for j in range(counts[dma.dma_id]):
            rng = _stream(spec.seed, dma.dma_id, j)
            event = int(rng.choice(eligible, p=weights)) + 1 if role == "treated" else None
            y = truncated_normal(rng, dma.outcomes, spec.sigma)
            units.append(
                UnitSeries(f"{dma.dma_id}-{j:04d}", y, dma.covariates, int(role == "treated"), event)
            )
    return units


# ---------------------------------------------------------------- CSV I/O


def _read_rows(path: PathLike, required: Sequence[str], prefix_cols: Optional[str] = None):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header[: len(required)] != list(required):
            raise SchemaError(f"{path}: header must start with {','.join(required)}, got {','.join(header)}")
        extra = header[len(required):]
        if prefix_cols is None and extra:
            raise SchemaError(f"{path}: unexpected columns {extra}")
        if prefix_cols is not None:
            want = [f"{prefix_cols}{k}" for k in range(1, len(extra) + 1)]
            if extra != want:
                raise SchemaError(f"{path}: covariate columns must be {','.join(want)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append((lineno, row))
    return header, rows


def _as_int(value: str, what: str, where: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise SchemaError(f"{where}: {what} must be an integer, got {value!r}") from None


def _as_float(value: str, what: str, where: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise SchemaError(f"{where}: {what} must be a number, got {value!r}") from None
    if not math.isfinite(v):
        raise SchemaError(f"{where}: {what} must be finite")
    return v


def _contiguous_series(by_key: dict, path: PathLike, what: str) -> dict:
    out = {}
    for key, days in by_key.items():
        ordered = sorted(days)
        if ordered[0] != 1 or ordered[-1] != len(ordered):
            missing = sorted(set(range(1, ordered[-1] + 1)) - set(days))
            raise NonContiguousDays(
                f"{path}: {what} {key} must cover days 1..{ordered[-1]} without gaps; missing {missing[:5]}"
            )
        out[key] = np.array([days[d] for d in ordered])
    return out


def read_panel(path: PathLike) -> dict[str, np.ndarray]:
    _, rows = _read_rows(path, ("unit_id", "day", "outcome"))
    series: dict[str, dict[int, float]] = {}
    for lineno, (uid, day, value) in rows:
        where = f"{path}:{lineno}"
        d = _as_int(day, "day", where)
        if d < 1:
            raise SchemaError(f"{where}: day must be >= 1")
        days = series.setdefault(uid, {})
        if d in days:
            raise DuplicateRow(f"{where}: duplicate row for unit {uid} day {d}")
        days[d] = _as_float(value, "outcome", where)
    if not series:
        raise SchemaError(f"{path}: no data rows")
    return _contiguous_series(series, path, "unit")


def read_covariates(path: PathLike) -> dict[str, np.ndarray]:
    _, rows = _read_rows(path, ("unit_id",), prefix_cols="c")
    out = {}
    for lineno, row in rows:
        where = f"{path}:{lineno}"
        if row[0] in out:
            raise DuplicateRow(f"{where}: duplicate covariate row for unit {row[0]}")
        out[row[0]] = np.array([_as_float(v, "covariate", where) for v in row[1:]])
    return out


def read_events(path: PathLike) -> dict[str, tuple[int, Optional[int]]]:
    _, rows = _read_rows(path, ("unit_id", "event_indicator", "event_day"))
    out = {}
    for lineno, (uid, ind, day) in rows:
        where = f"{path}:{lineno}"
        if uid in out:
            raise DuplicateRow(f"{where}: duplicate event row for unit {uid}")
        d = _as_int(ind, "event_indicator", where)
        if d not in (0, 1):
            raise SchemaError(f"{where}: event_indicator must be 0 or 1")
        if d == 1 and not day:
            raise SchemaError(f"{where}: treated unit {uid} needs an event_day")
        if d == 0 and day:
            raise SchemaError(f"{where}: control unit {uid} must leave event_day empty")
        out[uid] = (d, _as_int(day, "event_day", where) if day else None)
    return out


def ingest(panel_csv: PathLike, covariates_csv: PathLike, events_csv: PathLike) -> list[UnitSeries]:
    """Validated units from the panel, covariates and events files."""
    panel = read_panel(panel_csv)
    cov = read_covariates(covariates_csv)
    events = read_events(events_csv)
    for uid in events:
        if uid not in panel:
            raise DanglingEvent(f"{events_csv}: event row for unit {uid}, which is not in the panel")
    for uid in cov:
        if uid not in panel:
            raise DanglingEvent(f"{covariates_csv}: covariate row for unit {uid}, which is not in the panel")
    units = []
    dims = set()
    for uid in sorted(panel):
        if uid not in cov:
            raise SchemaError(f"{covariates_csv}: no covariates for unit {uid}")
        if uid not in events:
            raise SchemaError(f"{events_csv}: no event row for unit {uid}")
        d, ev = events[uid]
        dims.add(cov[uid].size)
        try:
            units.append(UnitSeries(uid, panel[uid], cov[uid], d, ev))
        except ValidationError as exc:
            raise SchemaError(str(exc)) from exc
    if len(dims) > 1:
        raise SchemaError("covariate vectors differ in length")
    return units


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def atomic_write_text(path: PathLike, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    tmp.replace(path)


def write_dataset(units: Sequence[UnitSeries], out_dir: PathLike) -> dict[str, Path]:
    """Write units as panel.csv, covariates.csv and events.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = units[0].covariates.size if units else 0
    paths = {name: out / f"{name}.csv" for name in ("panel", "covariates", "events")}
    _write_csv(
        paths["panel"],
        ("unit_id", "day", "outcome"),
        ((u.unit_id, d, _fmt(v)) for u in units for d, v in zip(u.days, u.outcomes)),
    )
    _write_csv(
        paths["covariates"],
        ("unit_id", *(f"c{i}" for i in range(1, k + 1))),
        ((u.unit_id, *map(_fmt, u.covariates)) for u in units),
    )
    _write_csv(
        paths["events"],
        ("unit_id", "event_indicator", "event_day"),
        ((u.unit_id, u.event_indicator, "" if u.event_time is None else u.event_time) for u in units),
    )
    return paths


def load_dmas(dma_csv: PathLike, dma_panel_csv: PathLike) -> list[DmaRecord]:
    _, rows = _read_rows(dma_csv, ("dma_id", "population"), prefix_cols="c")
    meta = {}
    for lineno, row in rows:
        where = f"{dma_csv}:{lineno}"
        if row[0] in meta:
            raise DuplicateRow(f"{where}: duplicate DMA {row[0]}")
        meta[row[0]] = (_as_int(row[1], "population", where), [_as_float(v, "covariate", where) for v in row[2:]])
    _, prow = _read_rows(dma_panel_csv, ("dma_id", "day", "outcome", "snowfall_kg_m2"))
    series: dict[str, dict[int, tuple[float, float]]] = {}
    for lineno, (dma_id, day, y, snow) in prow:
        where = f"{dma_panel_csv}:{lineno}"
        if dma_id not in meta:
            raise DanglingEvent(f"{where}: panel row for unknown DMA {dma_id}")
        d = _as_int(day, "day", where)
        days = series.setdefault(dma_id, {})
        if d in days:
            raise DuplicateRow(f"{where}: duplicate row for DMA {dma_id} day {d}")
        days[d] = (_as_float(y, "outcome", where), _as_float(snow, "snowfall", where))
    arrays = _contiguous_series(series, dma_panel_csv, "DMA")
    out = []
    for dma_id in sorted(meta):
        if dma_id not in arrays:
            raise SchemaError(f"{dma_panel_csv}: no rows for DMA {dma_id}")
        pop, cov = meta[dma_id]
        out.append(DmaRecord(dma_id, pop, cov, arrays[dma_id][:, 0], arrays[dma_id][:, 1]))
    return out


def sample_dmas() -> list[DmaRecord]:
    """The bundled 79-DMA sample input (synthetic; see scripts/make_sample_dmas.py)."""
    base = resources.files("lapret") / "data"
    with resources.as_file(base / "dma.csv") as dma, resources.as_file(base / "dma_panel.csv") as panel:
        return load_dmas(dma, panel)


def noise_datasets(
    dmas: Sequence[DmaRecord], ks: Iterable[int] = range(1, 8), seed: int = 0, **spec_kwargs
) -> list[tuple[str, list[UnitSeries]]]:
    """One tradezone data set per noise level sigma = 2**k, each with its own seed."""
    ks = list(ks)
    streams = np.random.SeedSequence(seed).spawn(len(ks))
    out = []
    for k, ss in zip(ks, streams):
        spec = GeneratorSpec(2.0**k, seed=int(ss.generate_state(1)[0]), **spec_kwargs)
        out.append((f"sigma=2^{k}", generate_tradezones(dmas, spec)))
    return out

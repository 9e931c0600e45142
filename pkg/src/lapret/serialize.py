"""JSON/CSV encodings of results, and run manifests."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from . import __version__
from .datagen import atomic_write_text
from .estimator import LapretParams, PairLapret, PilotResult
from .simulation import SWEEP_HEADER, SweepResult
from .study import EffectEstimate, StudyPlan, StudyResult


def _ids(ids) -> list:
    return sorted(ids)


def params_to_dict(p: LapretParams) -> dict:
    return {"alpha": p.alpha, "epsilon": p.epsilon}


def pilot_to_dict(r: PilotResult) -> dict:
    # an absent d_floor is written as 0 (no causal window); d_hat stays null
    return {
        "aggregation": r.aggregation,
        "undetected": r.undetected,
        "d_hat": r.d_hat,
        "d_floor": r.causal_window_days if r.d_floor is None else r.d_floor,
        "n_detected": r.n_detected,
        "per_pair": [{"pair_id": p.pair_id, "lapret_day": p.lapret_day, "d_i": p.d_i} for p in r.per_pair],
        "unit_ids": _ids(r.unit_ids),
    }


def pilot_from_dict(d: Mapping) -> PilotResult:
    return PilotResult(
        per_pair=tuple(PairLapret(p["pair_id"], p["lapret_day"], p["d_i"]) for p in d["per_pair"]),
        d_hat=d["d_hat"],
        d_floor=None if d["d_hat"] is None else d["d_floor"],
        aggregation=d["aggregation"],
        n_detected=d["n_detected"],
        undetected=d.get("undetected", "zero"),
        unit_ids=frozenset(d.get("unit_ids", ())),
    )


def plan_to_dict(p: StudyPlan) -> dict:
    return {
        "pilot_unit_ids": _ids(p.pilot_unit_ids),
        "main_unit_ids": _ids(p.main_unit_ids),
        "params": params_to_dict(p.params),
        "aggregation": p.aggregation,
        "transform": p.transform,
        "seed": p.seed,
        "undetected": p.undetected,
        "caliper": p.caliper,
    }


def plan_from_dict(d: Mapping) -> StudyPlan:
    return StudyPlan(
        frozenset(d["pilot_unit_ids"]),
        frozenset(d["main_unit_ids"]),
        LapretParams(**d["params"]),
        d["aggregation"],
        d["transform"],
        d["seed"],
        d.get("undetected", "zero"),
        d.get("caliper"),
    )


def study_to_dict(r: StudyResult) -> dict:
    return {
        "pilot": pilot_to_dict(r.pilot),
        "causal_window_days": r.causal_window_days,
        "n_pairs": r.n_pairs,
        "effects": [vars(e).copy() for e in r.effects],
    }


def study_from_dict(d: Mapping) -> StudyResult:
    return StudyResult(
        pilot_from_dict(d["pilot"]),
        tuple(EffectEstimate(**e) for e in d["effects"]),
        d["causal_window_days"],
        d.get("n_pairs", 0),
    )


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path, obj: Any) -> None:
    atomic_write_text(path, dumps(obj))


def read_json(path) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sweep_csv(result: SweepResult) -> str:
    rows = []
    for a, e, s, f, d_hat, d_floor, n in result.rows:
        rows.append([_cell(a), _cell(e), _cell(s), f, _cell(d_hat), _cell(0 if d_floor is None else d_floor), n])
    return _csv_text(SWEEP_HEADER, rows)


def effects_csv(result: StudyResult) -> str:
    return _csv_text(
        ("relative_day", "estimate", "ci_low", "ci_high", "n_pairs"),
        ([e.relative_day, _cell(e.estimate), _cell(e.ci_low), _cell(e.ci_high), e.n_pairs] for e in result.effects),
    )


def table_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    return _csv_text(header, ([_cell(v) for v in r] for r in rows))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def ids_digest(ids) -> str:
    return hashlib.sha256("\n".join(map(str, _ids(ids))).encode()).hexdigest()


def manifest(
    subcommand: str,
    parameters: Mapping,
    seed: Optional[int],
    inputs: Iterable = (),
    outputs: Iterable = (),
    extra: Optional[Mapping] = None,
) -> dict:
    m = {
        "subcommand": subcommand,
        "parameters": dict(parameters),
        "seed": seed,
        "input_digests": {str(p): file_digest(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if extra:
        m.update(extra)
    return m


def write_manifest(path: Path, **kwargs) -> None:
    write_json(path, manifest(**kwargs))

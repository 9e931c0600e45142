"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error,
3 design violation (main-study units overlap the pilot).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from . import serialize as ser
from .datagen import (
    GeneratorSpec,
    atomic_write_text,
    generate_tradezones,
    ingest,
    load_dmas,
    noise_datasets,
    read_events,
    sample_dmas,
    write_dataset,
)
from .errors import LapretError, PilotOverlap, ValidationError
from .estimator import LapretParams, heuristic_ranges
from .matching import fit_propensity, match
from .model import build_pair, impute_matrix
from .simulation import ALPHA_GRID, CONTAMINATION_GRID, EPSILON_GRID, SIGMA_GRID, sweep
from .study import prepare, run_main, run_pilot, sensitivity_sweep, split

log = logging.getLogger("lapret")

DEFAULT_PILOT_FRACTION = 878 / 3676
TRANSFORMS = {"levels": "levels", "lagged-diff": "lagged_diff"}


def _add_data_args(p):
    g = p.add_argument_group("input data")
    g.add_argument("--data-dir", type=Path, help="directory holding panel.csv, covariates.csv, events.csv")
    g.add_argument("--panel", type=Path)
    g.add_argument("--covariates", type=Path)
    g.add_argument("--events", type=Path)


def _data_paths(args, parser):
    paths = []
    for name in ("panel", "covariates", "events"):
        p = getattr(args, name) or (args.data_dir / f"{name}.csv" if args.data_dir else None)
        if p is None:
            parser.error(f"--{name} or --data-dir is required")
        paths.append(p)
    return paths


def _add_study_args(p):
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--transform", choices=sorted(TRANSFORMS), default="levels")
    p.add_argument("--aggregation", choices=("mean", "min"), default="mean")
    p.add_argument("--undetected", choices=("zero", "drop"), default="zero",
                   help="how pairs without a detected LaPRET enter d-hat")
    p.add_argument("--caliper", type=float, default=None, help="max logit distance for a match")


def _dmas(args):
    if args.dma_dir is None:
        return sample_dmas(), []
    files = [args.dma_dir / "dma.csv", args.dma_dir / "dma_panel.csv"]
    return load_dmas(*files), files


def _out_path(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


def _params(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "func"}


# ---------------------------------------------------------------- commands


def cmd_simulate(args, parser):
    res = sweep(args.scenario, args.sigma, args.contamination, args.alpha, args.epsilon,
                seed=args.seed, n_units=args.n, undetected=args.undetected)
    out = _out_path(args.out)
    atomic_write_text(out, ser.sweep_csv(res))
    ser.write_manifest(_sidecar(out), subcommand="simulate", parameters=_params(args), seed=args.seed, outputs=[out])


def cmd_sweep(args, parser):
    args.out_dir.mkdir(parents=True, exist_ok=True)
    outs = []
    for k in args.scenario:
        res = sweep(k, SIGMA_GRID, CONTAMINATION_GRID, ALPHA_GRID, EPSILON_GRID, seed=args.seed,
                    n_units=args.n, undetected=args.undetected)
        path = args.out_dir / f"sweep_scenario{k}.csv"
        atomic_write_text(path, ser.sweep_csv(res))
        outs.append(path)
    ser.write_manifest(args.out_dir / "manifest.json", subcommand="sweep", parameters=_params(args),
                       seed=args.seed, outputs=outs)


def cmd_generate(args, parser):
    dmas, inputs = _dmas(args)
    spec = GeneratorSpec(args.sigma, args.h, args.l, args.total, args.seed)
    units = generate_tradezones(dmas, spec)
    paths = write_dataset(units, args.out_dir)
    ser.write_manifest(args.out_dir / "manifest.json", subcommand="generate", parameters=_params(args),
                       seed=args.seed, inputs=inputs, outputs=paths.values())


def cmd_pilot(args, parser):
    inputs = _data_paths(args, parser)
    units = ingest(*inputs)
    plan = split(units, args.pilot_fraction, args.seed, LapretParams(args.alpha, args.epsilon),
                 args.aggregation, TRANSFORMS[args.transform], args.undetected, args.caliper)
    result = run_pilot(units, plan)
    out = _out_path(args.out)
    ser.write_json(out, {"plan": ser.plan_to_dict(plan), "result": ser.pilot_to_dict(result),
                         "params": ser.params_to_dict(plan.params)})
    ser.write_manifest(_sidecar(out), subcommand="pilot", parameters=_params(args), seed=args.seed,
                       inputs=inputs, outputs=[out],
                       extra={"pilot_unit_ids_sha256": ser.ids_digest(plan.pilot_unit_ids)})


def _read_ids(path: Path) -> list[str]:
    return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def cmd_analyze(args, parser):
    inputs = _data_paths(args, parser)
    pilot_doc = ser.read_json(args.pilot)
    plan = ser.plan_from_dict(pilot_doc["plan"])
    pilot = ser.pilot_from_dict(pilot_doc["result"])
    main_ids = _read_ids(args.main_ids) if args.main_ids else None
    units = ingest(*inputs)
    result = run_main(units, plan, pilot, main_ids)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    study_path, effects_path = args.out_dir / "study.json", args.out_dir / "effects.csv"
    ser.write_json(study_path, ser.study_to_dict(result))
    atomic_write_text(effects_path, ser.effects_csv(result))
    ser.write_manifest(args.out_dir / "manifest.json", subcommand="analyze", parameters=_params(args),
                       seed=plan.seed, inputs=[*inputs, args.pilot] + ([args.main_ids] if args.main_ids else []),
                       outputs=[study_path, effects_path])


def cmd_heuristics(args, parser):
    inputs = _data_paths(args, parser)
    units = prepare(ingest(*inputs), TRANSFORMS[args.transform])
    ms = match(units, fit_propensity(units), args.caliper)
    by_id = {u.unit_id: u for u in units}
    pairs = [build_pair(by_id[t], by_id[c], k) for k, (t, c) in enumerate(ms.pairs)]
    h = heuristic_ranges(pairs)
    out = _out_path(args.out)
    ser.write_json(out, vars(h).copy() | {"n_pairs": len(pairs)})
    ser.write_manifest(_sidecar(out), subcommand="heuristics", parameters=_params(args), seed=None,
                       inputs=inputs, outputs=[out])


def cmd_impute(args, parser):
    events = read_events(args.events)
    ids = sorted(events)
    z = impute_matrix([events[u][0] for u in ids], args.eta, args.replicates, args.seed)
    rows = [(uid, r, int(z[r, i])) for r in range(args.replicates) for i, uid in enumerate(ids)]
    out = _out_path(args.out)
    atomic_write_text(out, ser.table_csv(("unit_id", "replicate", "z"), rows))
    ser.write_manifest(_sidecar(out), subcommand="impute", parameters=_params(args), seed=args.seed,
                       inputs=[args.events], outputs=[out])


def cmd_sensitivity(args, parser):
    dmas, inputs = _dmas(args)
    ks = range(args.k_min, args.k_max + 1)
    datasets = noise_datasets(dmas, ks, args.seed, total_tradezones=args.total)
    results = sensitivity_sweep(datasets, args.pilot_fraction, LapretParams(args.alpha, args.epsilon),
                                seed=args.seed, transform=TRANSFORMS[args.transform],
                                aggregation=args.aggregation, undetected=args.undetected, caliper=args.caliper)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    outs, summary = [], []
    for k, (label, res) in zip(ks, results):
        path = args.out_dir / f"study_sigma_2^{k}.json"
        ser.write_json(path, {"label": label, "sigma": 2.0**k, "result": ser.study_to_dict(res)})
        outs.append(path)
        summary.append((2.0**k, res.pilot.d_hat, res.causal_window_days))
    summary_path = args.out_dir / "summary.csv"
    atomic_write_text(summary_path, ser.table_csv(("sigma", "d_hat", "d_floor"), summary))
    ser.write_manifest(args.out_dir / "manifest.json", subcommand="sensitivity", parameters=_params(args),
                       seed=args.seed, inputs=inputs, outputs=[*outs, summary_path])


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lapret", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lapret {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def seed_arg(p):
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", help="simulate one scenario and tabulate d-hat over a grid")
    p.add_argument("--scenario", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--sigma", type=float, nargs="+", default=list(SIGMA_GRID))
    p.add_argument("--contamination", choices=CONTAMINATION_GRID, nargs="+", default=list(CONTAMINATION_GRID))
    p.add_argument("--alpha", type=float, nargs="+", default=list(ALPHA_GRID))
    p.add_argument("--epsilon", type=float, nargs="+", default=list(EPSILON_GRID))
    p.add_argument("--n", type=int, default=600, help="units per data set, half treated")
    p.add_argument("--undetected", choices=("zero", "drop"), default="zero")
    p.add_argument("--out", type=Path, required=True)
    seed_arg(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="full simulation grids for one or more scenarios")
    p.add_argument("--scenario", type=int, choices=(1, 2, 3), nargs="+", default=[1, 2, 3])
    p.add_argument("--n", type=int, default=600)
    p.add_argument("--undetected", choices=("zero", "drop"), default="zero")
    p.add_argument("--out-dir", type=Path, required=True)
    seed_arg(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("generate", help="build synthetic tradezones from DMA inputs")
    p.add_argument("--dma-dir", type=Path, help="directory with dma.csv and dma_panel.csv (default: bundled sample)")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--h", type=float, default=1.0, help="treated snowfall threshold, kg/m^2")
    p.add_argument("--l", type=float, default=0.3, help="control snowfall ceiling, kg/m^2")
    p.add_argument("--total", type=int, default=3676)
    p.add_argument("--out-dir", type=Path, required=True)
    seed_arg(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("pilot", help="split the data and estimate d-hat on the pilot sample")
    _add_data_args(p)
    _add_study_args(p)
    p.add_argument("--pilot-fraction", type=float, default=DEFAULT_PILOT_FRACTION)
    p.add_argument("--out", type=Path, required=True)
    seed_arg(p)
    p.set_defaults(func=cmd_pilot)

    p = sub.add_parser("analyze", help="main-study effects inside the pilot's causal window")
    _add_data_args(p)
    p.add_argument("--pilot", type=Path, required=True, help="JSON written by the pilot command")
    p.add_argument("--main-ids", type=Path, help="file of unit ids to analyze, one per line (default: the plan's main sample)")
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("heuristics", help="suggested alpha/epsilon ranges")
    _add_data_args(p)
    p.add_argument("--transform", choices=sorted(TRANSFORMS), default="levels")
    p.add_argument("--caliper", type=float, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_heuristics)

    p = sub.add_parser("impute", help="imputed treatment indicators under flip noise eta")
    p.add_argument("--events", type=Path, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--out", type=Path, required=True)
    seed_arg(p)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("sensitivity", help="pilot + main study at sigma = 2^k on regenerated tradezones")
    p.add_argument("--dma-dir", type=Path)
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=7)
    p.add_argument("--total", type=int, default=3676)
    p.add_argument("--alpha", type=float, default=2.5)
    p.add_argument("--epsilon", type=float, default=4.0)
    p.add_argument("--transform", choices=sorted(TRANSFORMS), default="lagged-diff")
    p.add_argument("--aggregation", choices=("mean", "min"), default="mean")
    p.add_argument("--undetected", choices=("zero", "drop"), default="zero")
    p.add_argument("--caliper", type=float, default=None)
    p.add_argument("--pilot-fraction", type=float, default=DEFAULT_PILOT_FRACTION)
    p.add_argument("--out-dir", type=Path, required=True)
    seed_arg(p)
    p.set_defaults(func=cmd_sensitivity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args, parser)
    except PilotOverlap as exc:
        print(f"lapret {args.command}: design violation: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"lapret {args.command}: {exc}", file=sys.stderr)
        return 2
    except (LapretError, OSError, KeyError) as exc:
        print(f"lapret {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 solver error.
Failures print the error class name and message to standard error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections.abc import Sequence

import numpy as np

from .accountant import DEFAULT_DELTA, PrivacyParams, RdpLedger, calibrate_rho, calibrate_sigma, gaussian_rho
from .domain import DEFAULT_CELL_CAP, load_dataset, load_domain, write_dataset
from .errors import ConfigError, DataError, MstError, ParseError
from .evaluation import Workload, default_workload, evaluate
from .generation import synth_data
from .inference import DEFAULT_ITERS, DEFAULT_STEP, GraphicalModel, estimate
from .mechanisms import MeasurementLog, measure_marginals
from .pipeline import MST, NIST_MST, PipelineConfig, run, stage_rng
from .selection import select_private, select_public


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _clique_list(values: Sequence[str] | None) -> list[list[str]]:
    return [[a.strip() for a in v.split(",") if a.strip()] for v in (values or [])]


def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    if "domain" in names:
        p.add_argument("--domain", required=True, help="domain spec JSON file")
    if "data" in names:
        p.add_argument("--data", required=True, help="delimited data file with a header row")
    if "privacy" in names:
        p.add_argument("--epsilon", type=float, required=True)
        p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    if "seed" in names:
        p.add_argument("--seed", type=int, default=0)
    if "solver" in names:
        p.add_argument("--iters", type=int, default=DEFAULT_ITERS)
        p.add_argument("--step", type=float, default=DEFAULT_STEP)
    if "cap" in names:
        p.add_argument("--cell-cap", type=int, default=DEFAULT_CELL_CAP)
    if "special" in names:
        p.add_argument("--special", action="append", metavar="A,B[,C]",
                       help="special clique given as comma-separated attribute names; repeatable")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mstsynth", description="Differentially private synthetic data from noisy marginals")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a full pipeline")
    p.add_argument("--mode", choices=[NIST_MST, MST], required=True)
    p.add_argument("--provisional", default=None, help="public provisional data (nist-mst only)")
    p.add_argument("--census-transforms", action="store_true")
    _add_common(p, "domain", "data", "privacy", "seed", "solver", "cap", "special")

    p = sub.add_parser("measure", help="measure marginals with Gaussian noise")
    p.add_argument("--clique", action="append", required=True, metavar="A,B",
                   help="clique to measure; repeatable")
    p.add_argument("--weight", action="append", type=float, default=None)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--sigma", type=float)
    g.add_argument("--epsilon", type=float, help="calibrate sigma for one invocation")
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    _add_common(p, "domain", "data", "seed", "cap")

    p = sub.add_parser("select", help="choose marginals to measure")
    p.add_argument("--mode", choices=[NIST_MST, MST], required=True)
    p.add_argument("--provisional", default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--log", default=None, help="1-way measurement log (mst mode)")
    p.add_argument("--rho", type=float, default=None, help="selection budget (mst mode); default a third of the calibrated rho")
    _add_common(p, "domain", "privacy", "seed", "cap", "special")

    p = sub.add_parser("estimate", help="fit a model to a measurement log")
    p.add_argument("--log", required=True)
    _add_common(p, "domain", "solver", "cap")

    p = sub.add_parser("synth", help="generate records from a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, default=None)
    _add_common(p, "seed", "cap")

    p = sub.add_parser("evaluate", help="score synthetic data against the truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--synth", required=True)
    p.add_argument("--workload", default=None, help="workload JSON; generated from --seed when omitted")
    _add_common(p, "domain", "seed", "cap")

    p = sub.add_parser("inspect-log", help="summarize a measurement log")
    p.add_argument("--log", required=True)
    _add_common(p, "domain")
    return parser


def cmd_run(args) -> int:
    config = PipelineConfig(
        mode=args.mode, epsilon=args.epsilon, delta=args.delta, seed=args.seed,
        domain_path=args.domain, data_path=args.data, provisional_path=args.provisional,
        special=_clique_list(args.special) if args.special else None, cell_cap=args.cell_cap,
        iters=args.iters, step=args.step, census_transforms=args.census_transforms,
        out_dir=args.out or "mstsynth-out", delimiter=args.delimiter,
    )
    result = run(config)
    summary = {k: result.manifest[k] for k in ("epsilon", "delta", "total_rho", "records")}
    summary["out"] = config.out_dir
    print(json.dumps(summary, indent=2))
    return 0


def cmd_measure(args) -> int:
    domain = load_domain(args.domain)
    data = load_dataset(args.data, domain, args.delimiter)
    cliques = [domain.clique(c) for c in _clique_list(args.clique)]
    sigma = args.sigma
    if sigma is None:
        sigma = calibrate_sigma(PrivacyParams(args.epsilon, args.delta), 1)
    ledger = RdpLedger()
    log = measure_marginals(data, cliques, args.weight, sigma, stage_rng(args.seed, 2), ledger,
                            cell_cap=args.cell_cap)
    log.rng_seed = args.seed
    _write(args.out, log.to_ndjson(domain))
    print(f"rho={ledger.total_rho!r}", file=sys.stderr)
    return 0


def cmd_select(args) -> int:
    domain = load_domain(args.domain)
    params = PrivacyParams(args.epsilon, args.delta)
    special = [domain.clique(c) for c in _clique_list(args.special)]
    if args.mode == NIST_MST:
        if not args.provisional:
            raise ConfigError("nist-mst selection needs --provisional")
        prov = load_dataset(args.provisional, domain, args.delimiter)
        result = select_public(prov, params, special, cell_cap=args.cell_cap)
        payload = {"selection": result.to_list(domain), "rho": 0.0}
    else:
        if args.provisional:
            raise ConfigError("mst selection does not use --provisional")
        if not (args.data and args.log):
            raise ConfigError("mst selection needs --data and --log")
        data = load_dataset(args.data, domain, args.delimiter)
        log = MeasurementLog.from_ndjson(_read(args.log), domain)
        rho = args.rho if args.rho is not None else calibrate_rho(params) / 3.0
        ledger = RdpLedger()
        initial = [c for c in special if len(c) == 2]
        pairs = select_private(data, log, rho, initial, stage_rng(args.seed, 1), ledger)
        payload = {"selection": [{"attrs": domain.clique_names(p), "weight": 1.0} for p in pairs],
                   "rho": ledger.total_rho}
    _write(args.out, json.dumps(payload, indent=2))
    return 0


def cmd_estimate(args) -> int:
    domain = load_domain(args.domain)
    log = MeasurementLog.from_ndjson(_read(args.log), domain)
    model = estimate(log, domain, args.iters, args.step, cell_cap=args.cell_cap)
    _write(args.out, json.dumps(model.to_dict()))
    return 0


def cmd_synth(args) -> int:
    try:
        payload = json.loads(_read(args.model))
    except json.JSONDecodeError as exc:
        raise ParseError(f"model file is not valid JSON: {exc}") from None
    model = GraphicalModel.from_dict(payload, args.cell_cap)
    data = synth_data(model, args.n, stage_rng(args.seed, 4), args.cell_cap)
    if args.out:
        write_dataset(data, args.out, args.delimiter)
    else:
        from .domain import dataset_to_csv

        sys.stdout.write(dataset_to_csv(data, args.delimiter))
    return 0


def cmd_evaluate(args) -> int:
    domain = load_domain(args.domain)
    truth = load_dataset(args.truth, domain, args.delimiter)
    synth = load_dataset(args.synth, domain, args.delimiter)
    if args.workload:
        workload = Workload.from_json(_read(args.workload), domain)
    else:
        workload = default_workload(domain, np.random.default_rng(args.seed), cell_cap=args.cell_cap)
    report = evaluate(truth, synth, workload, args.cell_cap, seed=args.seed)
    _write(args.out, json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_inspect_log(args) -> int:
    domain = load_domain(args.domain)
    log = MeasurementLog.from_ndjson(_read(args.log), domain)
    rows = []
    for m in log:
        rows.append({
            "clique": domain.clique_names(m.clique),
            "kind": m.kind,
            "weight": m.weight,
            "sigma": m.sigma,
            "values": int(m.values.size),
        })
    sigmas = sorted({m.sigma for m in log})
    summary = {
        "measurements": len(log),
        "rng_seed": log.rng_seed,
        "rho_per_sigma": {repr(s): gaussian_rho(s, 1.0) for s in sigmas},
        "entries": rows,
    }
    _write(args.out, json.dumps(summary, indent=2))
    return 0


COMMANDS = {
    "run": cmd_run,
    "measure": cmd_measure,
    "select": cmd_select,
    "estimate": cmd_estimate,
    "synth": cmd_synth,
    "evaluate": cmd_evaluate,
    "inspect-log": cmd_inspect_log,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except MstError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"FileNotFoundError: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())

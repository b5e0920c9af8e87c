"""End-to-end runs of the two mechanisms.

``nist-mst`` selects marginals on public provisional data and spends the whole
budget on two Gaussian measurement rounds. ``mst`` needs no provisional data:
it splits a zCDP-style budget equally between 1-way measurement, private
tree selection and the second measurement round.

Every stage draws from its own generator ``default_rng([seed, stage])`` so
changing one stage never shifts the random stream of another.
"""

from __future__ import annotations

import json
import os
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from . import census
from .accountant import DEFAULT_DELTA, PrivacyParams, RdpLedger, calibrate_rho, calibrate_sigma, sigma_for_rho
from .compression import compress_domain, decompress, reexpress_measurements
from .domain import DEFAULT_CELL_CAP, Clique, Dataset, Domain, load_dataset, load_domain, write_dataset
from .errors import ConfigError
from .evaluation import ScoreReport, default_workload, evaluate
from .generation import synth_data
from .inference import DEFAULT_ITERS, DEFAULT_STEP, estimate
from .mechanisms import MeasurementLog, measure_marginals
from .selection import SelectionResult, clique_weights, select_private, select_public

NIST_MST = "nist-mst"
MST = "mst"

# stage numbers for the per-stage generators
STAGE_ONEWAY, STAGE_SELECT, STAGE_MEASURE, STAGE_SYNTH, STAGE_DECOMPRESS, STAGE_REVERSE, STAGE_EVAL = range(1, 8)

CENSUS_SPECIAL = (("SEX", "CITY"), ("SEX", census.INCWAGE_A), ("CITY", census.INCWAGE_A))


@dataclass
class PipelineConfig:
    mode: str
    epsilon: float
    domain_path: str
    data_path: str
    delta: float = DEFAULT_DELTA
    seed: int = 0
    provisional_path: str | None = None
    special: list[list[str]] | None = None
    cell_cap: int = DEFAULT_CELL_CAP
    iters: int = DEFAULT_ITERS
    step: float = DEFAULT_STEP
    census_transforms: bool = False
    out_dir: str | None = None
    delimiter: str = ","

    def __post_init__(self):
        if self.mode not in (NIST_MST, MST):
            raise ConfigError(f"mode must be {NIST_MST!r} or {MST!r}, got {self.mode!r}")
        if self.mode == NIST_MST and not self.provisional_path:
            raise ConfigError("nist-mst mode requires a provisional dataset")
        if self.mode == MST and self.provisional_path:
            raise ConfigError("mst mode does not use provisional data; drop the provisional path")
        PrivacyParams(self.epsilon, self.delta)
        if self.iters < 0 or not self.step > 0:
            raise ConfigError("iters must be nonnegative and step positive")

    def params(self) -> PrivacyParams:
        return PrivacyParams(self.epsilon, self.delta)


@dataclass
class RunResult:
    synthetic: Dataset
    report: ScoreReport
    manifest: dict = field(default_factory=dict)


def stage_rng(seed: int, stage: int) -> np.random.Generator:
    return np.random.default_rng([seed, stage])


def _special_cliques(config: PipelineConfig, domain: Domain) -> list[Clique]:
    names = config.special
    if names is None:
        if config.census_transforms and all(a in domain.names for a in ("SEX", "CITY", census.INCWAGE_A)):
            names = [list(p) for p in CENSUS_SPECIAL]
        else:
            names = []
    return [domain.clique(c) for c in names]


def _oneway_weights(domain: Domain, census_on: bool) -> list[float]:
    return [2.0 if census_on and name == census.INCWAGE_A else 1.0 for name in domain.names]


def _load(config: PipelineConfig) -> tuple[Domain, Dataset]:
    domain = load_domain(config.domain_path)
    data = load_dataset(config.data_path, domain, config.delimiter)
    return domain, data


def _finish(
    config: PipelineConfig,
    truth: Dataset,
    comp_synth: Dataset,
    cmap,
    ledger: RdpLedger,
    selection: SelectionResult,
    model,
    extra: dict,
    special: Sequence[Clique],
) -> RunResult:
    synth = decompress(comp_synth, cmap, stage_rng(config.seed, STAGE_DECOMPRESS))
    # scores are computed before the census reversal so both sides share a domain
    designated = [c for c in special if len(c) == 3]
    workload = default_workload(truth.domain, stage_rng(config.seed, STAGE_EVAL),
                                designated=designated, cell_cap=config.cell_cap)
    report = evaluate(truth, synth, workload, config.cell_cap, seed=config.seed)
    if config.census_transforms:
        synth = census.reverse_transform(synth, stage_rng(config.seed, STAGE_REVERSE))

    manifest = {
        "config": asdict(config),
        "ledger": ledger.to_list(),
        "total_rho": ledger.total_rho,
        "epsilon": ledger.epsilon(config.delta),
        "delta": config.delta,
        "selection": selection.to_list(cmap.compressed),
        "compression": cmap.to_dict(),
        "solver": {k: v for k, v in model.diagnostics.items() if k != "loss_history"},
        "records": synth.m,
        "report": report.to_dict()["means"],
        **extra,
    }
    result = RunResult(synth, report, manifest)
    if config.out_dir:
        write_outputs(result, config.out_dir, config.delimiter)
    return result


def write_outputs(result: RunResult, out_dir: str, delimiter: str = ",") -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_dataset(result.synthetic, os.path.join(out_dir, "synthetic.csv"), delimiter)
    with open(os.path.join(out_dir, "domain.json"), "w", encoding="utf-8") as fh:
        json.dump(result.synthetic.domain.to_dict(), fh)
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(result.manifest, fh, indent=2, default=float)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(result.report.to_dict(), fh, indent=2)


def run_nist_mst(config: PipelineConfig) -> RunResult:
    if config.mode != NIST_MST:
        raise ConfigError("run_nist_mst needs mode nist-mst")
    params = config.params()
    sigma = calibrate_sigma(params, 2)
    domain, data = _load(config)
    provisional = load_dataset(config.provisional_path, domain, config.delimiter)
    if config.census_transforms:
        data, provisional = census.transform(data), census.transform(provisional)
        domain = data.domain
    special = _special_cliques(config, domain)
    ledger = RdpLedger()

    oneway = [(i,) for i in range(len(domain))]
    log1 = measure_marginals(data, oneway, _oneway_weights(domain, config.census_transforms), sigma,
                             stage_rng(config.seed, STAGE_ONEWAY), ledger, "measure-1way", config.cell_cap)
    cdata, cdomain, cmap = compress_domain(log1, data, domain)
    cprov = cmap.apply(provisional)

    selection = select_public(cprov, params, special, cell_cap=config.cell_cap)
    log2 = measure_marginals(cdata, selection.cliques, selection.weights, sigma,
                             stage_rng(config.seed, STAGE_MEASURE), ledger, "measure-selected", config.cell_cap)
    log = reexpress_measurements(log1, cmap)
    log.extend(log2)
    log.rng_seed = config.seed
    model = estimate(log, cdomain, config.iters, config.step, cell_cap=config.cell_cap)
    comp_synth = synth_data(model, rng=stage_rng(config.seed, STAGE_SYNTH), cell_cap=config.cell_cap)
    return _finish(config, data, comp_synth, cmap, ledger, selection, model, {"sigma": sigma}, special)


def run_mst(config: PipelineConfig) -> RunResult:
    if config.mode != MST:
        raise ConfigError("run_mst needs mode mst")
    params = config.params()
    rho = calibrate_rho(params)
    sigma = sigma_for_rho(rho / 3.0)
    # the provisional path is never opened in this mode
    domain, data = _load(config)
    if config.census_transforms:
        data = census.transform(data)
        domain = data.domain
    special = _special_cliques(config, domain)
    ledger = RdpLedger()

    oneway = [(i,) for i in range(len(domain))]
    log1 = measure_marginals(data, oneway, _oneway_weights(domain, config.census_transforms), sigma,
                             stage_rng(config.seed, STAGE_ONEWAY), ledger, "measure-1way", config.cell_cap)
    cdata, cdomain, cmap = compress_domain(log1, data, domain)
    log1c = reexpress_measurements(log1, cmap)

    initial = [c for c in special if len(c) == 2]
    pairs = select_private(cdata, log1c, rho / 3.0, initial, stage_rng(config.seed, STAGE_SELECT), ledger)
    cliques = list(pairs)
    for c in special:
        if len(c) == 3 and c not in cliques:
            cliques.append(c)
    cliques = [c for c in cliques if cdomain.cells(c) < config.cell_cap]
    selection = SelectionResult(cliques, clique_weights(cliques, special, config.epsilon))
    log2 = measure_marginals(cdata, selection.cliques, selection.weights, sigma,
                             stage_rng(config.seed, STAGE_MEASURE), ledger, "measure-selected", config.cell_cap)
    log = MeasurementLog(list(log1c) + list(log2), config.seed)
    model = estimate(log, cdomain, config.iters, config.step, cell_cap=config.cell_cap)
    comp_synth = synth_data(model, rng=stage_rng(config.seed, STAGE_SYNTH), cell_cap=config.cell_cap)
    extra = {"sigma": sigma, "rho": rho}
    return _finish(config, data, comp_synth, cmap, ledger, selection, model, extra, special)


def run(config: PipelineConfig) -> RunResult:
    return run_nist_mst(config) if config.mode == NIST_MST else run_mst(config)

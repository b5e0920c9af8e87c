"""Differentially private synthetic tabular data from noisy marginal measurements."""

from .accountant import (
    DEFAULT_DELTA,
    PrivacyParams,
    RdpLedger,
    calibrate_rho,
    calibrate_sigma,
    exponential_rho,
    gaussian_rho,
    laplace_scale,
    rdp_to_dp,
    sigma_for_rho,
)
from .compression import CompressionMap, compress_domain, decompress, reexpress_measurements
from .domain import Dataset, Domain, MarginalVector, load_dataset, load_domain, marginal
from .evaluation import ConjunctionQuery, ScoreReport, Workload, evaluate
from .generation import synth_column, synth_data
from .inference import GraphicalModel, JunctionTree, belief_propagation, build_junction_tree, estimate, model_marginal
from .mechanisms import Measurement, MeasurementLog, exponential_mechanism, measure_marginals
from .pipeline import PipelineConfig, run, run_mst, run_nist_mst
from .selection import SelectionResult, mutual_information, select_private, select_public

__version__ = "0.1.0"

"""Privacy-consuming primitives: Gaussian marginal measurement and the exponential mechanism."""

from __future__ import annotations

import json
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from .accountant import RdpLedger, exponential_rho, gaussian_rho
from .domain import DEFAULT_CELL_CAP, Clique, Dataset, Domain, marginal
from .errors import EmptyCandidates, LengthMismatch, NonPositiveParameter, ParseError

IDENTITY = "identity"
AGGREGATE = "aggregate"


@dataclass(frozen=True, eq=False)
class Measurement:
    """One noisy linear measurement ``y = Q mu_C + N(0, sigma^2 I)`` of a clique marginal.

    ``identity`` measurements have ``Q = weight * I``. ``aggregate`` measurements
    have one row per group of source cells; row ``r`` observes
    ``weight * mu_C[cells[r]]`` and its residual is scaled by ``1/sqrt(len(groups[r]))``
    so every row carries the same noise variance.
    """

    clique: Clique
    values: np.ndarray
    sigma: float
    weight: float = 1.0
    kind: str = IDENTITY
    cells: np.ndarray | None = None
    groups: tuple[tuple[int, ...], ...] | None = None
    n_cells: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", values)
        if not self.sigma > 0:
            raise NonPositiveParameter(f"sigma must be positive, got {self.sigma}")
        if self.kind == IDENTITY:
            object.__setattr__(self, "n_cells", values.size)
        elif self.kind == AGGREGATE:
            cells = np.asarray(self.cells, dtype=np.int64)
            object.__setattr__(self, "cells", cells)
            if self.groups is None or len(self.groups) != values.size or cells.size != values.size:
                raise LengthMismatch("aggregate measurement needs one group and one cell per value")
            if any(len(g) == 0 for g in self.groups):
                raise ParseError("aggregate groups must be nonempty")
            if self.n_cells is None:
                raise ParseError("aggregate measurement needs n_cells")
        else:
            raise ParseError(f"unknown transform kind {self.kind!r}")

    @property
    def row_scales(self) -> np.ndarray:
        if self.kind == IDENTITY:
            return np.ones(self.values.size)
        return 1.0 / np.sqrt([len(g) for g in self.groups])

    def apply(self, mu: np.ndarray) -> np.ndarray:
        mu = np.ravel(mu)
        if self.kind == IDENTITY:
            return self.weight * mu
        return self.weight * mu[self.cells]

    def adjoint(self, r: np.ndarray) -> np.ndarray:
        if self.kind == IDENTITY:
            return self.weight * r
        return np.bincount(self.cells, weights=self.weight * r, minlength=self.n_cells)

    def loss(self, mu: np.ndarray) -> float:
        resid = self.row_scales * (self.apply(mu) - self.values)
        return float(resid @ resid)

    def gradient(self, mu: np.ndarray) -> np.ndarray:
        scales = self.row_scales
        return 2.0 * self.adjoint(scales**2 * (self.apply(mu) - self.values))

    def total_estimate(self) -> tuple[float, float] | None:
        """Unbiased estimate of the record count and its variance, identity only."""
        if self.kind != IDENTITY:
            return None
        return float(self.values.sum() / self.weight), self.sigma**2 * self.values.size / self.weight**2

    def to_record(self, domain: Domain) -> dict:
        rec = {
            "clique": domain.clique_names(self.clique),
            "kind": self.kind,
            "weight": float(self.weight),
            "sigma": float(self.sigma),
            "values": [float(v) for v in self.values],
        }
        if self.kind == AGGREGATE:
            rec["cells"] = [int(c) for c in self.cells]
            rec["groups"] = [list(map(int, g)) for g in self.groups]
            rec["n_cells"] = int(self.n_cells)
        return rec

    @classmethod
    def from_record(cls, rec: dict, domain: Domain) -> "Measurement":
        try:
            clique = domain.clique(rec["clique"])
            kind = rec.get("kind", IDENTITY)
            kwargs = {}
            if kind == AGGREGATE:
                kwargs = dict(
                    cells=rec["cells"],
                    groups=tuple(tuple(g) for g in rec["groups"]),
                    n_cells=rec["n_cells"],
                )
            meas = cls(clique, np.array(rec["values"], dtype=float), float(rec["sigma"]),
                       float(rec.get("weight", 1.0)), kind, **kwargs)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed measurement record: {exc}") from None
        if kind == IDENTITY and meas.values.size != domain.cells(clique):
            raise LengthMismatch(f"measurement on {rec['clique']} has {meas.values.size} values")
        return meas


@dataclass
class MeasurementLog:
    measurements: list[Measurement] = field(default_factory=list)
    rng_seed: int | None = None

    def __iter__(self) -> Iterator[Measurement]:
        return iter(self.measurements)

    def __len__(self) -> int:
        return len(self.measurements)

    def __getitem__(self, i):
        return self.measurements[i]

    def append(self, m: Measurement) -> None:
        self.measurements.append(m)

    def extend(self, other: "MeasurementLog | Sequence[Measurement]") -> None:
        self.measurements.extend(other)

    def cliques(self) -> list[Clique]:
        return [m.clique for m in self.measurements]

    def to_ndjson(self, domain: Domain) -> str:
        lines = [json.dumps({"rng_seed": self.rng_seed, "domain_digest": domain.digest()})]
        lines += [json.dumps(m.to_record(domain)) for m in self.measurements]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_ndjson(cls, text: str, domain: Domain) -> "MeasurementLog":
        log = cls()
        for n, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"log line {n + 1}: {exc}") from None
            if "clique" not in rec:
                log.rng_seed = rec.get("rng_seed")
                continue
            log.append(Measurement.from_record(rec, domain))
        return log


def normalize_weights(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if (w <= 0).any() or not np.isfinite(w).all():
        raise NonPositiveParameter("weights must be positive")
    return w / np.sqrt(np.sum(w**2))


def measure_marginals(
    data: Dataset,
    cliques: Sequence[Clique],
    weights: Sequence[float] | None,
    sigma: float,
    rng: np.random.Generator,
    ledger: RdpLedger | None = None,
    label: str = "measure",
    cell_cap: int = DEFAULT_CELL_CAP,
    zero_noise: bool = False,
) -> MeasurementLog:
    """Measure each clique marginal with Gaussian noise after normalizing the weights.

    The normalization makes the whole batch an L2-sensitivity-1 query, so the
    call costs ``gaussian_rho(sigma, 1)`` regardless of how many cliques it
    measures. ``zero_noise`` skips the noise draw entirely; it exists for
    fixtures and must never be used on private data.
    """
    if weights is None:
        weights = [1.0] * len(cliques)
    if len(cliques) != len(weights):
        raise LengthMismatch(f"{len(cliques)} cliques but {len(weights)} weights")
    if not sigma > 0:
        raise NonPositiveParameter(f"sigma must be positive, got {sigma}")
    w = normalize_weights(weights) if len(weights) else np.zeros(0)
    log = MeasurementLog()
    for clique, wc in zip(cliques, w):
        mu = marginal(data, clique, cell_cap).values
        noise = np.zeros(mu.size) if zero_noise else rng.normal(0.0, sigma, size=mu.size)
        log.append(Measurement(tuple(clique), wc * mu + noise, sigma, float(wc)))
    if ledger is not None and len(cliques):
        ledger.add(label, gaussian_rho(sigma, 1.0))
    return log


def exponential_mechanism(
    scores: Sequence[float],
    eps_step: float,
    sensitivity: float,
    rng: np.random.Generator,
    ledger: RdpLedger | None = None,
    label: str = "exponential",
) -> int:
    """Sample an index with probability proportional to ``exp(eps_step * scores[i])``."""
    q = np.asarray(scores, dtype=float)
    if q.size == 0:
        raise EmptyCandidates("no candidates to select from")
    rho = exponential_rho(eps_step, sensitivity)
    logits = eps_step * (q - q.max())
    p = np.exp(logits)
    cdf = np.cumsum(p / p.sum())
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    idx = min(idx, q.size - 1)
    if ledger is not None:
        ledger.add(label, rho)
    return idx


def selection_probabilities(scores: Sequence[float], eps_step: float) -> np.ndarray:
    q = np.asarray(scores, dtype=float)
    p = np.exp(eps_step * (q - q.max()))
    return p / p.sum()


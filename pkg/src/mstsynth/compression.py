"""Domain compression driven by noisy 1-way counts, and its reversal.

Values whose noisy count falls below three noise standard deviations are
merged into a reserved "other" value (written ∅), the last index of the
compressed attribute.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .domain import Dataset, Domain
from .errors import EmptyPreimageWarning, MissingOneWay, ParseError
from .mechanisms import AGGREGATE, IDENTITY, Measurement, MeasurementLog

OTHER = "∅"
THRESHOLD_SIGMAS = 3.0


@dataclass(frozen=True)
class AttributeMap:
    """Compression of one attribute: ``kept`` originals in order, then ∅ for ``merged``."""

    size: int
    kept: tuple[int, ...]
    merged: tuple[int, ...]

    @property
    def other(self) -> int:
        return len(self.kept)

    @property
    def compressed_size(self) -> int:
        return len(self.kept) + 1

    def forward(self) -> np.ndarray:
        out = np.full(self.size, self.other, dtype=np.int64)
        out[list(self.kept)] = np.arange(len(self.kept))
        return out


@dataclass(frozen=True)
class CompressionMap:
    original: Domain
    compressed: Domain
    attributes: tuple[AttributeMap, ...]

    def apply(self, data: Dataset) -> Dataset:
        """Rewrite records over the original domain onto the compressed one."""
        if data.domain != self.original:
            raise ParseError("dataset domain does not match the compression map")
        rows = np.empty_like(data.rows)
        for i, amap in enumerate(self.attributes):
            rows[:, i] = amap.forward()[data.rows[:, i]]
        return Dataset(self.compressed, rows)

    def to_dict(self) -> dict:
        return {
            name: {
                "kept": [self.original.labels[i][v] for v in amap.kept],
                "merged": [self.original.labels[i][v] for v in amap.merged],
                "other": self.compressed.labels[i][amap.other],
            }
            for i, (name, amap) in enumerate(zip(self.original.names, self.attributes))
        }

    @classmethod
    def from_dict(cls, payload: dict, original: Domain) -> "CompressionMap":
        attrs = []
        for i, name in enumerate(original.names):
            entry = payload[name]
            lookup = {lab: k for k, lab in enumerate(original.labels[i])}
            attrs.append(AttributeMap(original.sizes[i], tuple(lookup[v] for v in entry["kept"]),
                                      tuple(lookup[v] for v in entry["merged"])))
        return build_map(original, attrs)


def other_label(labels: tuple[str, ...]) -> str:
    lab = OTHER
    while lab in labels:
        lab += "_"
    return lab


def build_map(domain: Domain, attributes: list[AttributeMap]) -> CompressionMap:
    labels = []
    for i, amap in enumerate(attributes):
        orig = domain.labels[i]
        kept = tuple(orig[v] for v in amap.kept)
        labels.append(kept + (other_label(orig),))
    compressed = Domain(domain.names, tuple(labels))
    return CompressionMap(domain, compressed, tuple(attributes))


def oneway_measurements(log: MeasurementLog, domain: Domain) -> dict[int, Measurement]:
    """First identity 1-way measurement of each attribute."""
    out: dict[int, Measurement] = {}
    for m in log:
        if len(m.clique) == 1 and m.kind == IDENTITY and m.clique[0] not in out:
            out[m.clique[0]] = m
    missing = [domain.names[i] for i in range(len(domain)) if i not in out]
    if missing:
        raise MissingOneWay(f"no 1-way identity measurement for {missing}")
    return out


def compress_domain(
    oneway_log: MeasurementLog,
    data: Dataset,
    domain: Domain | None = None,
) -> tuple[Dataset, Domain, CompressionMap]:
    """Merge values whose noisy count is below ``3 sigma`` into ∅.

    The comparison uses the unweighted scale ``y / w >= 3 sigma / w``, so it
    does not depend on the measurement weight.
    """
    domain = domain if domain is not None else data.domain
    found = oneway_measurements(oneway_log, domain)
    attrs = []
    for i in range(len(domain)):
        m = found[i]
        keep = m.values / m.weight >= THRESHOLD_SIGMAS * m.sigma / m.weight
        kept = tuple(int(v) for v in np.flatnonzero(keep))
        merged = tuple(int(v) for v in np.flatnonzero(~keep))
        attrs.append(AttributeMap(domain.sizes[i], kept, merged))
    cmap = build_map(domain, attrs)
    return cmap.apply(data), cmap.compressed, cmap


def reexpress_measurements(log: MeasurementLog, cmap: CompressionMap) -> MeasurementLog:
    """Rewrite identity measurements on the original domain as aggregates on the compressed one.

    Each row sums the noisy values of the original cells mapped to one
    compressed cell. Compressed cells with no preimage (an empty ∅) get no row.
    """
    out = MeasurementLog(rng_seed=log.rng_seed)
    maps = [a.forward() for a in cmap.attributes]
    for m in log:
        if m.kind != IDENTITY:
            raise ParseError("only identity measurements can be re-expressed")
        clique = m.clique
        orig_shape = cmap.original.shape(clique)
        new_shape = cmap.compressed.shape(clique)
        coords = np.unravel_index(np.arange(m.values.size), orig_shape)
        target = np.ravel_multi_index(tuple(maps[a][c] for a, c in zip(clique, coords)), new_shape)
        order = np.argsort(target, kind="stable")
        cells, starts = np.unique(target[order], return_index=True)
        groups = tuple(tuple(int(s) for s in g) for g in np.split(order, starts[1:]))
        values = np.bincount(target, weights=m.values, minlength=int(np.prod(new_shape)))[cells]
        out.append(Measurement(clique, values, m.sigma, m.weight, AGGREGATE,
                               cells=cells, groups=groups, n_cells=int(np.prod(new_shape))))
    return out


def decompress(data: Dataset, cmap: CompressionMap, rng: np.random.Generator) -> Dataset:
    """Map compressed records back to the original domain.

    Kept values map back exactly. The ∅ occurrences of an attribute are spread
    evenly over the originals merged into it: each gets the floor share and a
    seeded random subset gets one extra.
    """
    if data.domain != cmap.compressed:
        raise ParseError("dataset domain does not match the compressed domain")
    rows = np.empty_like(data.rows)
    for i, amap in enumerate(cmap.attributes):
        col = data.rows[:, i]
        back = np.array(amap.kept + (-1,), dtype=np.int64)
        out = back[col]
        where = np.flatnonzero(col == amap.other)
        if where.size:
            if amap.merged:
                pool = np.array(amap.merged, dtype=np.int64)
                share, extra = divmod(where.size, pool.size)
                fill = np.repeat(pool, share)
                if extra:
                    fill = np.concatenate([fill, rng.choice(pool, size=extra, replace=False)])
                rng.shuffle(fill)
            else:
                warnings.warn(
                    f"attribute {cmap.original.names[i]!r}: ∅ has no original values; drawing uniformly",
                    EmptyPreimageWarning,
                    stacklevel=2,
                )
                fill = rng.integers(0, amap.size, size=where.size)
            out[where] = fill
        rows[:, i] = out
    return Dataset(cmap.original, rows)

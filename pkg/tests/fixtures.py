"""Example fixtures: a 1000-record SEX/LABFORCE/SCHOOL table and its noisy measurements."""

from __future__ import annotations

import itertools
import json

import numpy as np

from mstsynth.domain import Dataset, Domain
from mstsynth.mechanisms import Measurement, MeasurementLog

EXAMPLE_DOMAIN = {"SEX": ["M", "F"], "LABFORCE": ["---", "N", "Y"], "SCHOOL": ["N", "Y"]}

# counts of the full 3-way table, row-major over (SEX, LABFORCE, SCHOOL)
TRUE_3WAY = [74, 82, 36, 29, 313, 3, 85, 73, 252, 30, 23, 0]

TRUE_SEX_LABFORCE = [156, 65, 316, 158, 282, 23]
TRUE_LABFORCE_SCHOOL = [159, 155, 288, 59, 336, 3]

NOISY_SEX_LABFORCE = [132.428, 124.549, 244.365, 173.633, 318.029, -21.358]
NOISY_LABFORCE_SCHOOL = [116.021, 186.826, 287.215, 171.134, 278.498, -46.497]

PGM_SEX_LABFORCE = [124.829, 121.696, 254.636, 166.034, 315.177, 0.0]
PGM_LABFORCE_SCHOOL = [110.029, 180.834, 276.477, 160.396, 254.636, 0.0]
PGM_SEX_SCHOOL = [378.873, 122.289, 262.269, 218.942]
PGM_3WAY = [47.221, 77.608, 77.016, 44.68, 254.636, 0.0, 62.808, 103.226, 199.461, 115.716, 0.0, 0.0]
PGM_LABFORCE = [290.863, 436.873, 254.636]

SIGMA = 50.0
WEIGHT = 1 / np.sqrt(2)


def example_domain() -> Domain:
    names = tuple(EXAMPLE_DOMAIN)
    return Domain(names, tuple(tuple(v) for v in EXAMPLE_DOMAIN.values()))


def example_dataset() -> Dataset:
    cells = list(itertools.product(range(2), range(3), range(2)))
    rows = [cell for cell, count in zip(cells, TRUE_3WAY) for _ in range(count)]
    return Dataset(example_domain(), np.array(rows, dtype=np.int64))


def example_log() -> MeasurementLog:
    """The noisy tables, read as unweighted estimates of the counts and re-weighted by 1/sqrt(2)."""
    return MeasurementLog([
        Measurement((0, 1), WEIGHT * np.array(NOISY_SEX_LABFORCE), SIGMA, WEIGHT),
        Measurement((1, 2), WEIGHT * np.array(NOISY_LABFORCE_SCHOOL), SIGMA, WEIGHT),
    ])


def random_dataset(rng: np.random.Generator, sizes: list[int], m: int) -> Dataset:
    domain = Domain.from_sizes({f"X{i}": s for i, s in enumerate(sizes)})
    rows = np.stack([rng.integers(0, s, m) for s in sizes], axis=1) if m else np.zeros((0, len(sizes)))
    return Dataset(domain, rows)


def write_census_files(root, m: int = 1200, seed: int = 0) -> dict[str, str]:
    """Census-shaped domain, private data and provisional data written under ``root``."""
    rng = np.random.default_rng(seed)
    wages = [0, 1234, 2500, 4020, 5000, 9999998]
    values = [0, 100, 12340, 25000, 9999998, 9999999]
    spec = {"SEX": ["1", "2"], "CITY": ["0", "1", "2"], "AGE": 4,
            "VALUEH": [str(v) for v in values], "INCWAGE": [str(w) for w in wages]}

    def draw(n):
        sex = rng.integers(0, 2, n)
        city = rng.integers(0, 3, n)
        age = (city + rng.integers(0, 2, n)) % 4
        wage = np.clip(sex + city + rng.integers(0, 3, n), 0, len(wages) - 1)
        value = rng.integers(0, len(values), n)
        names = list(spec)
        lines = [",".join(names)]
        for r in zip(sex, city, age, value, wage):
            lines.append(",".join([spec["SEX"][r[0]], spec["CITY"][r[1]], str(r[2]),
                                   spec["VALUEH"][r[3]], spec["INCWAGE"][r[4]]]))
        return "\n".join(lines) + "\n"

    paths = {"domain": str(root / "domain.json"), "data": str(root / "data.csv"), "prov": str(root / "prov.csv")}
    (root / "domain.json").write_text(json.dumps(spec), encoding="utf-8")
    (root / "data.csv").write_text(draw(m), encoding="utf-8")
    (root / "prov.csv").write_text(draw(m // 2), encoding="utf-8")
    return paths

"""Title I school-funding calibration.

Each district ``l`` receives ``E_l * C_l`` dollars: eligibility count times the
adjusted state per-pupil expenditure (SPPE). Eligibility counts are published
with per-district Laplace noise (identity workload, sensitivity 1), so accuracy
is ``I = -2L / eps**2``. The planner weighs privacy at ``eta`` relative to
allocative efficiency, giving ``WTA = eta N k_bar / mean(C**2)`` and the optimum
``eps* = (4 L mean(C**2) / (eta N k_bar)) ** (1/3)``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import (
    DuplicateDistrict,
    EmptyDataset,
    NonPositiveSppe,
    ParameterOutOfRange,
    ParseError,
)
from .histogram import Histogram, QueryWorkload
from .mechanisms import check_epsilon, laplace_mechanism, laplace_noise_variance
from .noise import NoiseSource

NATIONAL_NUM_DISTRICTS = 13_000
NATIONAL_NUM_STUDENTS = 46_000_000
NATIONAL_MEAN_SQUARED_SPPE = 20_000_000.0
# Identity-theft loss, rounded up to the nearest hundred dollars.
K_BAR_ROUNDED = 1_400.0
K_BAR_UNROUNDED = 1_343.0

CSV_HEADER = ("district_id", "sppe", "eligible_count")


@dataclass(frozen=True)
class DistrictRecord:
    district_id: str
    sppe: float
    eligible_count: int

    def __post_init__(self):
        if not self.sppe > 0 or not math.isfinite(self.sppe):
            raise NonPositiveSppe(f"district {self.district_id!r}: sppe must be positive")
        if self.eligible_count < 0:
            raise ParameterOutOfRange(f"district {self.district_id!r}: negative eligible count")


@dataclass(frozen=True)
class Title1Calibration:
    num_districts: int
    num_students: float
    mean_squared_sppe: float
    k_bar: float = K_BAR_ROUNDED
    eta: float = 1.0

    def __post_init__(self):
        for name in ("num_districts", "num_students", "mean_squared_sppe", "k_bar"):
            value = getattr(self, name)
            if not value > 0 or not math.isfinite(value):
                raise ParameterOutOfRange(f"{name} must be positive and finite, got {value!r}")
        # eta = 0 is admitted so that WTA can be evaluated at the no-privacy corner.
        if not self.eta >= 0 or not math.isfinite(self.eta):
            raise ParameterOutOfRange(f"eta must be nonnegative and finite, got {self.eta!r}")

    @classmethod
    def national(cls, eta: float = 1.0, k_bar: float = K_BAR_ROUNDED) -> Title1Calibration:
        return cls(NATIONAL_NUM_DISTRICTS, NATIONAL_NUM_STUDENTS, NATIONAL_MEAN_SQUARED_SPPE, k_bar, eta)

    @classmethod
    def from_districts(
        cls,
        records: Sequence[DistrictRecord],
        eta: float = 1.0,
        k_bar: float = K_BAR_ROUNDED,
        num_students: float | None = None,
    ) -> Title1Calibration:
        """Calibrate from district data; students default to the total eligible count."""
        if num_students is None:
            num_students = sum(r.eligible_count for r in records)
        return cls(len(records), num_students, mean_squared_sppe(records), k_bar, eta)

    def with_eta(self, eta: float) -> Title1Calibration:
        return Title1Calibration(self.num_districts, self.num_students, self.mean_squared_sppe, self.k_bar, eta)


# -- data ingestion -----------------------------------------------------------


def load_districts(source: TextIO | Iterable[str]) -> list[DistrictRecord]:
    """Parse ``district_id,sppe,eligible_count`` rows (header required)."""
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input; expected a header row", 1) from None
    if tuple(h.strip().lstrip("﻿") for h in header) != CSV_HEADER:
        raise ParseError(f"header must be {','.join(CSV_HEADER)}", 1)
    records: list[DistrictRecord] = []
    seen: set[str] = set()
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, found {len(row)}", line)
        district_id, sppe_text, count_text = (cell.strip() for cell in row)
        if not district_id:
            raise ParseError("empty district_id", line)
        try:
            sppe = float(sppe_text)
        except ValueError:
            raise ParseError(f"bad sppe {sppe_text!r}", line) from None
        try:
            count = int(count_text)
        except ValueError:
            raise ParseError(f"bad eligible_count {count_text!r}", line) from None
        if not sppe > 0 or not math.isfinite(sppe):
            raise NonPositiveSppe(f"sppe must be positive, got {sppe_text}", line)
        if count < 0:
            raise ParseError(f"eligible_count must be nonnegative, got {count}", line)
        if district_id in seen:
            raise DuplicateDistrict(f"duplicate district_id {district_id!r}", line)
        seen.add(district_id)
        records.append(DistrictRecord(district_id, sppe, count))
    return records


def write_districts(records: Iterable[DistrictRecord], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow([r.district_id, f"{r.sppe:.17g}", r.eligible_count])


def synthetic_districts(
    seed: int = 0,
    num_districts: int = NATIONAL_NUM_DISTRICTS,
    num_eligible: int = NATIONAL_NUM_STUDENTS,
    mean_squared_sppe_target: float = NATIONAL_MEAN_SQUARED_SPPE,
    num_states: int = 51,
) -> list[DistrictRecord]:
    """Seeded stand-in for the district extract, matched to the published aggregates.

    Districts share their state's SPPE; state SPPEs are rescaled so the mean of
    squared SPPE over districts equals the target, and eligibility counts are a
    multinomial split of exactly ``num_eligible`` students.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0xD15,))))
    state_sppe = rng.lognormal(mean=0.0, sigma=0.2, size=num_states)
    state_of = rng.integers(0, num_states, size=num_districts)
    sppe = state_sppe[state_of]
    sppe *= math.sqrt(mean_squared_sppe_target / float(np.mean(sppe**2)))
    sizes = rng.lognormal(mean=0.0, sigma=1.2, size=num_districts)
    counts = rng.multinomial(num_eligible, sizes / sizes.sum())
    width = len(str(num_districts - 1))
    return [
        DistrictRecord(f"D{i:0{width}d}", float(c), int(e))
        for i, (c, e) in enumerate(zip(sppe, counts))
    ]


def mean_squared_sppe(records: Sequence[DistrictRecord]) -> float:
    """``sum(C_l**2) / L``."""
    if not records:
        raise EmptyDataset("no districts")
    c = np.array([r.sppe for r in records], dtype=float)
    return float(np.sum(c**2) / len(c))


# -- closed forms -------------------------------------------------------------


def title1_accuracy(num_districts: int, epsilon: float) -> float:
    """``-2L / eps**2``: one sensitivity-1 counting query per district."""
    epsilon = check_epsilon(epsilon)
    if int(num_districts) != num_districts or num_districts < 1:
        raise ParameterOutOfRange("number of districts must be a positive integer")
    return -laplace_noise_variance(epsilon) * num_districts


def title1_mrt(num_districts: int, epsilon: float) -> float:
    epsilon = check_epsilon(epsilon)
    return 4.0 * num_districts / epsilon**3


def title1_wta(cal: Title1Calibration) -> float:
    """``eta N k_bar / mean(C**2)``."""
    return cal.eta * cal.num_students * cal.k_bar / cal.mean_squared_sppe


def title1_optimal_epsilon(cal: Title1Calibration) -> float:
    """``(4 L mean(C**2) / (eta N k_bar)) ** (1/3)``."""
    if not cal.eta > 0:
        raise ParameterOutOfRange("eta must be positive for a finite optimum")
    return (4.0 * cal.num_districts / title1_wta(cal)) ** (1.0 / 3.0)


def implied_eta(cal: Title1Calibration, epsilon: float) -> float:
    """The privacy weight at which ``epsilon`` would be optimal."""
    epsilon = check_epsilon(epsilon)
    return 4.0 * cal.num_districts * cal.mean_squared_sppe / (cal.num_students * cal.k_bar * epsilon**3)


def title1_rmse(cal: Title1Calibration, epsilon: float) -> float:
    """District-level RMSE in dollars, ``sqrt(-mean(C**2) I / L) = sqrt(2 mean(C**2)) / eps``."""
    accuracy = title1_accuracy(cal.num_districts, epsilon)
    return math.sqrt(-cal.mean_squared_sppe * accuracy / cal.num_districts)


def per_student_cost(rmse: float, num_districts: int, num_students: float) -> float:
    return rmse * num_districts / num_students


# -- simulation ---------------------------------------------------------------


@dataclass(frozen=True)
class AllocationSimulation:
    epsilon: float
    replications: int
    misallocation: np.ndarray  # sum_l C_l (E_hat_l - E_l), one entry per replication
    empirical_rmse: float
    mean_misallocation: float
    misallocation_std_error: float

    def summary(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "replications": self.replications,
            "empirical_rmse": self.empirical_rmse,
            "mean_misallocation": self.mean_misallocation,
            "misallocation_std_error": self.misallocation_std_error,
        }


def simulate_allocation(
    records: Sequence[DistrictRecord],
    epsilon: float,
    replications: int,
    noise: NoiseSource,
    keep_counts: bool = False,
) -> AllocationSimulation | tuple[AllocationSimulation, np.ndarray]:
    """Publish noisy eligibility counts ``replications`` times and measure misallocation.

    Replication ``r`` draws from ``noise.substream(r)``, so results do not depend
    on how replications are scheduled. Squared errors are accumulated in
    replication order.
    """
    epsilon = check_epsilon(epsilon)
    if int(replications) != replications or replications < 1:
        raise ParameterOutOfRange("replications must be a positive integer")
    if not records:
        raise EmptyDataset("no districts")
    counts = Histogram(np.array([r.eligible_count for r in records], dtype=np.int64))
    sppe = np.array([r.sppe for r in records], dtype=float)
    workload = QueryWorkload.identity(len(records))
    misallocation = np.empty(replications)
    sum_sq = 0.0
    kept = np.empty((replications, len(records))) if keep_counts else None
    for rep in range(replications):
        out = laplace_mechanism(counts, workload, epsilon, noise.substream(rep))
        error = out.answers - counts.counts
        dollars = sppe * error
        misallocation[rep] = dollars.sum()
        sum_sq += float(dollars @ dollars)
        if kept is not None:
            kept[rep] = out.answers
    empirical_rmse = math.sqrt(sum_sq / (replications * len(records)))
    std_error = float(misallocation.std(ddof=1) / math.sqrt(replications)) if replications > 1 else float("nan")
    result = AllocationSimulation(
        epsilon, int(replications), misallocation, empirical_rmse, float(misallocation.mean()), std_error
    )
    if kept is not None:
        return result, kept
    return result


# -- report -------------------------------------------------------------------


@dataclass(frozen=True)
class Title1Report:
    epsilon: float
    eta: float
    accuracy: float
    wta: float
    mrt: float
    rmse_dollars: float
    per_student_dollars: float
    empirical_rmse: float | None = None
    replications: int | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def title1_report(
    cal: Title1Calibration,
    epsilon: float | None = None,
    simulation: AllocationSimulation | None = None,
) -> Title1Report:
    """Evaluate the calibration at ``epsilon`` (default: the welfare optimum)."""
    if epsilon is None:
        epsilon = title1_optimal_epsilon(cal)
    epsilon = check_epsilon(epsilon)
    rmse = title1_rmse(cal, epsilon)
    return Title1Report(
        epsilon=epsilon,
        eta=cal.eta,
        accuracy=title1_accuracy(cal.num_districts, epsilon),
        wta=title1_wta(cal),
        mrt=title1_mrt(cal.num_districts, epsilon),
        rmse_dollars=rmse,
        per_student_dollars=per_student_cost(rmse, cal.num_districts, cal.num_students),
        empirical_rmse=None if simulation is None else simulation.empirical_rmse,
        replications=None if simulation is None else simulation.replications,
    )

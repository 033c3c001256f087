"""Toy-scale verification of privacy guarantees.

Two checks live here. :func:`certify_discrete_mechanism` enumerates every pair
of neighbouring histograms and every outcome of a mechanism with an exact,
finite output distribution and reports the largest log probability ratio.
:func:`secret_pair_bayes_factor` computes, by summing over every database an
independent data-generating process can produce, how much one outcome moves an
attacker's odds that a person is in the data with a given record versus absent.

Mechanisms here are *exact*: a callable returning ``{outcome: probability}``.
Histogram mechanisms take a tuple of cell counts; population mechanisms take a
database, a tuple with one entry per person (``None`` when absent, otherwise
the domain cell of their record).
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Callable, Hashable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ParameterOutOfRange, PopulationTooLarge, RangeTooLarge
from .histogram import DataDomain, QueryWorkload, workload_sensitivity
from .mechanisms import check_epsilon

Distribution = Mapping[Hashable, float]
HistogramMechanism = Callable[[tuple[int, ...]], Distribution]
Database = tuple  # entries: None or a domain cell index
PopulationMechanism = Callable[[Database], Distribution]

CERTIFICATE_SLACK = 1e-9
MAX_CERT_DOMAIN = 4
MAX_CERT_RECORDS = 4
MAX_OUTCOMES = 100_000
MAX_SEMANTIC_POPULATION = 3
MAX_SEMANTIC_DOMAIN = 3
ADD_REMOVE = "add-remove"
SUBSTITUTE = "substitute"


@dataclass(frozen=True)
class DpCertificate:
    mechanism: str
    claimed_epsilon: float | None
    measured_max_log_ratio: float
    exhaustive: bool
    fingerprint: str
    neighbors: str = ADD_REMOVE

    @property
    def passes(self) -> bool:
        if self.claimed_epsilon is None:
            return False
        return self.measured_max_log_ratio <= self.claimed_epsilon + CERTIFICATE_SLACK

    def to_dict(self) -> dict:
        out = asdict(self)
        measured = self.measured_max_log_ratio
        out["measured_max_log_ratio"] = measured if math.isfinite(measured) else "inf"
        out["passes"] = self.passes
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# -- pairwise log ratios ------------------------------------------------------


def max_log_ratio(p: Distribution, q: Distribution) -> float:
    """``max_o |ln p(o) - ln q(o)|``; infinite if one side puts mass where the other has none."""
    worst = 0.0
    for outcome in set(p) | set(q):
        a, b = p.get(outcome, 0.0), q.get(outcome, 0.0)
        if a == 0.0 and b == 0.0:
            continue
        if a == 0.0 or b == 0.0:
            return math.inf
        worst = max(worst, abs(math.log(a) - math.log(b)))
    return worst


def _histograms_up_to(size: int, max_n: int) -> Iterator[tuple[int, ...]]:
    for counts in itertools.product(range(max_n + 1), repeat=size):
        if sum(counts) <= max_n:
            yield counts


def neighbor_pairs(domain: DataDomain, max_n: int, neighbors: str = ADD_REMOVE):
    """All histogram pairs within ``max_n`` records that differ by one record.

    ``add-remove`` pairs are at l1 distance 1 (one record added). ``substitute``
    pairs keep the size and change one record's cell (l1 distance 2).
    """
    size = domain.size
    for x in _histograms_up_to(size, max_n):
        if neighbors == ADD_REMOVE:
            if sum(x) < max_n:
                for j in range(size):
                    y = list(x)
                    y[j] += 1
                    yield x, tuple(y)
        elif neighbors == SUBSTITUTE:
            for i in range(size):
                if x[i] == 0:
                    continue
                for j in range(size):
                    if j == i:
                        continue
                    y = list(x)
                    y[i] -= 1
                    y[j] += 1
                    if x < tuple(y):
                        yield x, tuple(y)
        else:
            raise ParameterOutOfRange(f"unknown neighbour relation {neighbors!r}")


def _checked(dist: Distribution) -> Distribution:
    if len(dist) > MAX_OUTCOMES:
        raise RangeTooLarge(f"mechanism has more than {MAX_OUTCOMES} outcomes")
    total = math.fsum(dist.values())
    if any(p < 0 for p in dist.values()) or abs(total - 1.0) > 1e-9:
        raise ParameterOutOfRange(f"outcome probabilities must be nonnegative and sum to 1 (sum={total})")
    return dist


def certify_discrete_mechanism(
    mechanism: HistogramMechanism,
    domain: DataDomain,
    max_n: int,
    *,
    claimed_epsilon: float | None = None,
    neighbors: str = ADD_REMOVE,
    name: str = "custom",
) -> DpCertificate:
    """Exhaustively measure the privacy loss of an exact histogram mechanism."""
    if domain.size > MAX_CERT_DOMAIN or max_n > MAX_CERT_RECORDS:
        raise RangeTooLarge(
            f"exhaustive certification is limited to {MAX_CERT_DOMAIN} cells and "
            f"{MAX_CERT_RECORDS} records"
        )
    if max_n < 1:
        raise ParameterOutOfRange("max_n must be at least 1")
    cache: dict[tuple[int, ...], Distribution] = {}

    def dist(x):
        if x not in cache:
            cache[x] = _checked(mechanism(x))
        return cache[x]

    worst = 0.0
    for x, y in neighbor_pairs(domain, max_n, neighbors):
        worst = max(worst, max_log_ratio(dist(x), dist(y)))
        if worst == math.inf:
            break
    fingerprint = f"domain={domain.size};max_n={max_n}"
    return DpCertificate(name, claimed_epsilon, worst, True, fingerprint, neighbors)


def _databases(population: int, domain_size: int) -> Iterator[Database]:
    return itertools.product((None, *range(domain_size)), repeat=population)


def certify_population_mechanism(
    mechanism: PopulationMechanism,
    domain: DataDomain,
    population: int,
    *,
    claimed_epsilon: float | None = None,
    name: str = "custom",
) -> DpCertificate:
    """Certify a mechanism on person-level databases; neighbours add or remove one person."""
    if domain.size > MAX_CERT_DOMAIN or population > MAX_CERT_RECORDS:
        raise RangeTooLarge("population certification is limited to 4 cells and 4 people")
    worst = 0.0
    for db in _databases(population, domain.size):
        for i, entry in enumerate(db):
            if entry is not None:
                continue
            base = _checked(mechanism(db))
            for cell in range(domain.size):
                other = db[:i] + (cell,) + db[i + 1 :]
                worst = max(worst, max_log_ratio(base, _checked(mechanism(other))))
    fingerprint = f"domain={domain.size};population={population}"
    return DpCertificate(name, claimed_epsilon, worst, True, fingerprint, ADD_REMOVE)


def certify_laplace_mechanism(q: QueryWorkload, epsilon: float, grid_points: int = 10_000) -> DpCertificate:
    """Density-ratio check of the Laplace mechanism.

    For neighbours ``x`` and ``x + e_j`` the log density ratio at output ``z``
    is ``sum_k (|z_k - (Qx)_k - Q_kj| - |z_k - (Qx)_k|) / b``, which the triangle
    inequality bounds by ``||Q_j||_1 / b`` everywhere, tails included. The ratio
    is evaluated on ``grid_points`` outputs along each column direction.
    """
    epsilon = check_epsilon(epsilon)
    sensitivity = workload_sensitivity(q)
    if sensitivity == 0:
        return DpCertificate("laplace", epsilon, 0.0, False, q.fingerprint())
    scale = sensitivity / epsilon
    rows = q.rows
    t = np.linspace(-3.0, 4.0, grid_points)
    worst = 0.0
    for j in range(rows.shape[1]):
        col = rows[:, j]
        if not np.any(col):
            continue
        z = t[:, None] * col[None, :]
        ratio = (np.abs(z - col).sum(axis=1) - np.abs(z).sum(axis=1)) / scale
        tail_bound = np.abs(col).sum() / scale
        if np.any(np.abs(ratio) > tail_bound + 1e-12):
            raise AssertionError("density ratio exceeded the triangle-inequality bound")
        worst = max(worst, float(np.abs(ratio).max()))
    return DpCertificate("laplace", epsilon, worst, False, q.fingerprint())


# -- exact fixture mechanisms -------------------------------------------------


def constant_mechanism(value: Hashable = 0) -> HistogramMechanism:
    """Publish a constant: 0-differentially private."""
    return lambda x: {value: 1.0}


def identity_publication(cell: int = 0) -> HistogramMechanism:
    """Publish one cell count exactly: blatantly non-private."""
    return lambda x: {int(x[cell]): 1.0}


def _convolve(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.convolve(p, q)


def rr_count_mechanism(rho: float, mu: float = 0.5) -> HistogramMechanism:
    """Randomized response on a two-cell histogram (cell 1 = sensitive trait present).

    Each record reports its bit with probability ``rho``, otherwise a
    Bernoulli(``mu``) draw. The outcome is the number of reported ones.
    """
    if not 0 < rho < 1 or not 0 < mu < 1:
        raise ParameterOutOfRange("rho and mu must lie in (0, 1)")
    p1 = rho + (1 - rho) * mu
    p0 = (1 - rho) * mu

    def mechanism(x):
        if len(x) != 2:
            raise ParameterOutOfRange("randomized response works on a two-cell domain")
        dist = np.array([1.0])
        for _ in range(x[0]):
            dist = _convolve(dist, np.array([1 - p0, p0]))
        for _ in range(x[1]):
            dist = _convolve(dist, np.array([1 - p1, p1]))
        return {c: float(p) for c, p in enumerate(dist) if p > 0}

    return mechanism


def rr_population_mechanism(rho: float, mu: float = 0.5) -> PopulationMechanism:
    """Per-person randomized response, published as one bit per person.

    Cell 1 of a two-cell domain is the sensitive trait. A person who is absent
    from the data reports only the innocuous Bernoulli(``mu``) draw.
    """
    if not 0 < rho < 1 or not 0 < mu < 1:
        raise ParameterOutOfRange("rho and mu must lie in (0, 1)")

    def one(entry) -> tuple[float, float]:
        if entry is None:
            p = mu
        else:
            p = rho * entry + (1 - rho) * mu
        return 1 - p, p

    def mechanism(db):
        per_person = [one(entry) for entry in db]
        out = {}
        for bits in itertools.product((0, 1), repeat=len(db)):
            out[bits] = math.prod(pp[b] for pp, b in zip(per_person, bits))
        return out

    return mechanism


def post_process(mechanism: Callable, fn: Callable[[Hashable], Hashable]) -> Callable:
    """Push a mechanism's output distribution through a deterministic map."""

    def mapped(x):
        out: dict = defaultdict(float)
        for outcome, p in mechanism(x).items():
            out[fn(outcome)] += p
        return dict(out)

    return mapped


def database_histogram(db: Database, domain_size: int) -> tuple[int, ...]:
    counts = [0] * domain_size
    for entry in db:
        if entry is not None:
            counts[entry] += 1
    return tuple(counts)


def lift_histogram_mechanism(mechanism: HistogramMechanism, domain_size: int) -> PopulationMechanism:
    """View a histogram mechanism as acting on person-level databases."""
    return lambda db: mechanism(database_histogram(db, domain_size))


# -- Bayes factors ------------------------------------------------------------


def rr_bayes_factor(rho: float, mu: float = 0.5) -> float:
    """Worst-case Bayes factor of randomized response over affirmative and negative reports."""
    if not 0 < rho < 1 or not 0 < mu < 1:
        raise ParameterOutOfRange("rho and mu must lie in (0, 1)")
    return max(1 + rho / ((1 - rho) * mu), 1 + rho / ((1 - rho) * (1 - mu)))


@dataclass(frozen=True)
class DataGeneratingProcess:
    """Independent inclusion model: person ``i`` is in the data with probability
    ``inclusion[i]`` and, if present, has record ``a`` with probability ``records[i][a]``."""

    inclusion: tuple[float, ...]
    records: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        inclusion = tuple(float(p) for p in self.inclusion)
        records = tuple(tuple(float(v) for v in f) for f in self.records)
        if len(inclusion) != len(records) or not inclusion:
            raise ParameterOutOfRange("need one record distribution per person")
        if any(not 0 < p < 1 for p in inclusion):
            raise ParameterOutOfRange("inclusion probabilities must lie in (0, 1)")
        width = {len(f) for f in records}
        if len(width) != 1:
            raise ParameterOutOfRange("record distributions must share a domain")
        for f in records:
            if any(v < 0 for v in f) or abs(math.fsum(f) - 1.0) > 1e-12:
                raise ParameterOutOfRange("each record distribution must sum to 1")
        object.__setattr__(self, "inclusion", inclusion)
        object.__setattr__(self, "records", records)

    @property
    def population(self) -> int:
        return len(self.inclusion)

    @property
    def domain_size(self) -> int:
        return len(self.records[0])

    @classmethod
    def uniform(cls, population: int, domain_size: int, inclusion: float = 0.5) -> DataGeneratingProcess:
        f = tuple([1.0 / domain_size] * domain_size)
        return cls((inclusion,) * population, (f,) * population)

    def probability(self, db: Database) -> float:
        """Probability of a database: product over people of inclusion times record probability."""
        prob = 1.0
        for entry, pi, f in zip(db, self.inclusion, self.records):
            prob *= (1 - pi) if entry is None else pi * f[entry]
        return prob

    def databases(self) -> Iterator[Database]:
        return _databases(self.population, self.domain_size)


def _check_semantic_size(dgp: DataGeneratingProcess) -> None:
    if dgp.population > MAX_SEMANTIC_POPULATION or dgp.domain_size > MAX_SEMANTIC_DOMAIN:
        raise PopulationTooLarge(
            f"exhaustive enumeration is limited to {MAX_SEMANTIC_POPULATION} people and "
            f"{MAX_SEMANTIC_DOMAIN} cells"
        )


def secret_pair_bayes_factor(
    dgp: DataGeneratingProcess,
    mechanism: PopulationMechanism,
    individual: int,
    attribute: int,
    outcome: Hashable,
) -> float:
    """Posterior odds over prior odds of "``individual`` is present with ``attribute``"
    versus "``individual`` is absent", after observing ``outcome``."""
    _check_semantic_size(dgp)
    if not 0 <= individual < dgp.population:
        raise ParameterOutOfRange("individual index out of range")
    if not 0 <= attribute < dgp.domain_size:
        raise ParameterOutOfRange("attribute cell out of range")
    prior_in = dgp.inclusion[individual] * dgp.records[individual][attribute]
    prior_out = 1 - dgp.inclusion[individual]
    if prior_in == 0:
        raise ParameterOutOfRange("secret has zero prior probability")
    post_in = post_out = 0.0
    for db in dgp.databases():
        entry = db[individual]
        if entry is not None and entry != attribute:
            continue
        weight = dgp.probability(db) * mechanism(db).get(outcome, 0.0)
        if entry is None:
            post_out += weight
        else:
            post_in += weight
    if post_in == 0 and post_out == 0:
        raise ParameterOutOfRange(f"outcome {outcome!r} has zero probability under the process")
    if post_out == 0:
        return math.inf
    return (post_in / post_out) / (prior_in / prior_out)


def mechanism_outcomes(mechanism: PopulationMechanism, population: int, domain_size: int) -> list:
    """Every outcome with positive probability on some database, in a stable order."""
    seen = {}
    for db in _databases(population, domain_size):
        for outcome, p in mechanism(db).items():
            if p > 0:
                seen.setdefault(outcome, None)
    return list(seen)


def all_secret_pair_bayes_factors(
    dgp: DataGeneratingProcess, mechanism: PopulationMechanism
) -> Iterator[tuple[int, int, Hashable, float]]:
    """Yield ``(individual, attribute, outcome, factor)`` for every secret pair and outcome."""
    _check_semantic_size(dgp)
    outcomes = mechanism_outcomes(mechanism, dgp.population, dgp.domain_size)
    for i in range(dgp.population):
        for a in range(dgp.domain_size):
            if dgp.records[i][a] == 0:
                continue
            for outcome in outcomes:
                yield i, a, outcome, secret_pair_bayes_factor(dgp, mechanism, i, a, outcome)

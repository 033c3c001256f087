"""epsilon-differentially private publication mechanisms.

* Laplace mechanism: ``Q x + e`` with iid Laplace noise of scale ``dQ / eps``.
* Matrix mechanism: answer a strategy ``A`` with Laplace noise and reconstruct
  the workload answers through ``Q A^+``; publishes ``Q x + Q A^+ (dA) e`` with
  ``e`` of scale ``1 / eps``. Its accuracy is exact:
  ``I = -(2 / eps**2) (dA)**2 ||Q A^+||_F**2``.
* Randomized response on a vector of bits, with the unbiased estimator of the
  population proportion.

Noisy answers are published raw by default (possibly negative, non-integer);
the optional nonnegativity clamp is post-processing and voids the closed-form
accuracy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    DomainMismatch,
    EmptyInput,
    NonPositiveEpsilon,
    ParameterOutOfRange,
    ParseError,
    UnrepresentableWorkload,
)
from .histogram import Histogram, QueryWorkload, exact_answer, workload_sensitivity
from .noise import NoiseSource, laplace_from_uniform

PINV_RTOL = 1e-10
REPRESENTABILITY_RTOL = 1e-8


class MechanismId(str, enum.Enum):
    LAPLACE = "laplace"
    MATRIX = "matrix"
    RANDOMIZED_RESPONSE = "randomized-response"


def check_epsilon(epsilon: float) -> float:
    if not epsilon > 0 or not np.isfinite(epsilon):
        raise NonPositiveEpsilon(f"epsilon must be positive and finite, got {epsilon!r}")
    return float(epsilon)


def laplace_noise_variance(epsilon: float) -> float:
    """Variance of a Laplace draw with scale ``1 / epsilon``."""
    return 2.0 / epsilon**2


@dataclass(frozen=True)
class MechanismOutput:
    answers: np.ndarray
    epsilon: float
    mechanism: MechanismId
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        check_epsilon(self.epsilon)
        answers = np.array(self.answers, dtype=float)
        answers.setflags(write=False)
        object.__setattr__(self, "answers", answers)
        object.__setattr__(self, "mechanism", MechanismId(self.mechanism))

    def to_record(self) -> str:
        """One tab-separated line; numbers carry 17 significant digits (exact round trip)."""
        answers = " ".join(f"{v:.17g}" for v in self.answers)
        return "\t".join(
            [self.mechanism.value, f"{self.epsilon:.17g}", str(self.seed), str(self.stream_id), answers]
        )

    @classmethod
    def from_record(cls, line: str) -> MechanismOutput:
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 5:
            raise ParseError(f"expected 5 tab-separated fields, found {len(parts)}")
        mech, eps, seed, stream, answers = parts
        try:
            values = [float(tok) for tok in answers.split()]
            return cls(np.array(values), float(eps), MechanismId(mech), int(seed), int(stream))
        except ValueError as exc:
            raise ParseError(str(exc)) from None


# -- Laplace mechanism --------------------------------------------------------


def laplace_mechanism(
    h: Histogram,
    q: QueryWorkload,
    epsilon: float,
    noise: NoiseSource,
    *,
    clamp_nonnegative: bool = False,
) -> MechanismOutput:
    epsilon = check_epsilon(epsilon)
    exact = exact_answer(q, h)
    scale = workload_sensitivity(q) / epsilon
    answers = exact + laplace_from_uniform(noise.centered_uniform(q.num_queries), scale)
    if clamp_nonnegative:
        answers = np.maximum(answers, 0.0)
    return MechanismOutput(answers, epsilon, MechanismId.LAPLACE, noise.seed, noise.stream_id)


def laplace_mechanism_accuracy(q: QueryWorkload, epsilon: float) -> float:
    """``-k * 2 * (dQ / eps)**2``."""
    epsilon = check_epsilon(epsilon)
    return -q.num_queries * 2.0 * (workload_sensitivity(q) / epsilon) ** 2


# -- matrix mechanism ---------------------------------------------------------


def pseudo_inverse(a: QueryWorkload | np.ndarray) -> np.ndarray:
    """Moore-Penrose inverse by SVD.

    Singular values below ``1e-10`` times the largest are treated as zero.
    """
    if isinstance(a, QueryWorkload):
        if a.is_identity:
            return np.eye(a.shape[0])
        matrix = a.rows
    else:
        matrix = np.asarray(a, dtype=float)
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(matrix.T.shape)
    keep = s > PINV_RTOL * s[0]
    return (vt[keep].T / s[keep]) @ u[:, keep].T


def _looks_like_identity(w: QueryWorkload) -> bool:
    if w.is_identity:
        return True
    k, n = w.shape
    return k == n and np.array_equal(w.rows, np.eye(n))


class StrategyDecomposition:
    """Strategy ``A`` for workload ``Q`` with ``A^+``, ``Q A^+`` and ``dA``.

    Construction verifies that every query in ``Q`` is a linear combination of
    strategy queries (``Q = Q A^+ A``). Identity strategies take a fast path that
    never builds dense matrices.
    """

    def __init__(self, q: QueryWorkload, a: QueryWorkload):
        if q.domain != a.domain:
            raise DomainMismatch("workload and strategy must share a domain")
        self.workload = q
        self.strategy = a
        self.strategy_sensitivity = workload_sensitivity(a)
        self._identity_strategy = _looks_like_identity(a)
        self._identity_workload = self._identity_strategy and _looks_like_identity(q)
        if not self._identity_strategy:
            self._check_representable()

    def _check_representable(self) -> None:
        q = self.workload.rows
        residual = q - self.reconstruction @ self.strategy.rows
        scale = max(np.linalg.norm(q), np.finfo(float).tiny)
        if np.linalg.norm(residual) > REPRESENTABILITY_RTOL * scale:
            raise UnrepresentableWorkload(
                "workload is not spanned by the strategy rows "
                f"(relative residual {np.linalg.norm(residual) / scale:.3g})"
            )

    @cached_property
    def pseudo_inverse(self) -> np.ndarray:
        return pseudo_inverse(self.strategy)

    @cached_property
    def reconstruction(self) -> np.ndarray:
        """``Q A^+``."""
        if self._identity_strategy:
            return np.array(self.workload.rows)
        return self.workload.rows @ self.pseudo_inverse

    @cached_property
    def frobenius_sq(self) -> float:
        """``||Q A^+||_F**2``."""
        if self._identity_workload:
            return float(self.workload.shape[0])
        return float(np.sum(self.reconstruction**2))

    @property
    def num_strategy_queries(self) -> int:
        return self.strategy.shape[0]

    def noise_to_answers(self, strategy_noise: np.ndarray) -> np.ndarray:
        """Map scaled strategy noise (last axis) through ``Q A^+``."""
        if self._identity_workload:
            return strategy_noise
        return strategy_noise @ self.reconstruction.T

    def accuracy(self, epsilon: float) -> float:
        epsilon = check_epsilon(epsilon)
        return -laplace_noise_variance(epsilon) * self.strategy_sensitivity**2 * self.frobenius_sq


def decompose(q: QueryWorkload, a: QueryWorkload) -> StrategyDecomposition:
    return StrategyDecomposition(q, a)


def _as_decomposition(q: QueryWorkload, a: QueryWorkload | None) -> StrategyDecomposition:
    return StrategyDecomposition(q, q if a is None else a)


def matrix_mechanism(
    h: Histogram,
    q: QueryWorkload,
    a: QueryWorkload,
    epsilon: float,
    noise: NoiseSource,
    *,
    clamp_nonnegative: bool = False,
) -> MechanismOutput:
    epsilon = check_epsilon(epsilon)
    dec = _as_decomposition(q, a)
    answers = matrix_mechanism_samples(h, dec, epsilon, noise, size=None)
    if clamp_nonnegative:
        answers = np.maximum(answers, 0.0)
    return MechanismOutput(answers, epsilon, MechanismId.MATRIX, noise.seed, noise.stream_id)


def matrix_mechanism_samples(
    h: Histogram,
    dec: StrategyDecomposition,
    epsilon: float,
    noise: NoiseSource,
    size: int | None = None,
) -> np.ndarray:
    """Draw ``size`` independent mechanism outputs as rows of an array.

    With ``size=None`` a single answer vector is returned; it consumes the
    stream exactly like :func:`matrix_mechanism`.
    """
    epsilon = check_epsilon(epsilon)
    exact = exact_answer(dec.workload, h)
    m = dec.num_strategy_queries
    shape = m if size is None else (size, m)
    e = laplace_from_uniform(noise.centered_uniform(shape), 1.0 / epsilon)
    return exact + dec.noise_to_answers(dec.strategy_sensitivity * e)


def matrix_mechanism_accuracy(q: QueryWorkload, a: QueryWorkload, epsilon: float) -> float:
    """``-(2 / eps**2) (dA)**2 ||Q A^+||_F**2``; exact, not an approximation."""
    return _as_decomposition(q, a).accuracy(epsilon)


# -- randomized response ------------------------------------------------------


def _check_open_unit(name: str, value: float) -> float:
    if not 0.0 < value < 1.0:
        raise ParameterOutOfRange(f"{name} must lie in (0, 1), got {value!r}")
    return float(value)


def randomized_response_publish(
    bits, rho: float, mu: float = 0.5, noise: NoiseSource | None = None
) -> np.ndarray:
    """Publish ``d_i = T_i x_i + (1 - T_i) z_i``.

    ``T_i ~ Bernoulli(rho)`` picks the sensitive answer; otherwise the
    innocuous bit ``z_i ~ Bernoulli(mu)`` is reported.
    """
    rho = _check_open_unit("rho", rho)
    mu = _check_open_unit("mu", mu)
    x = np.asarray(bits)
    if x.size and not np.all((x == 0) | (x == 1)):
        raise ParameterOutOfRange("randomized response input must be 0/1 bits")
    noise = noise if noise is not None else NoiseSource()
    truthful = noise.random(x.shape) < rho
    innocuous = noise.random(x.shape) < mu
    return np.where(truthful, x, innocuous).astype(np.int8)


def rr_estimator(d, rho: float, mu: float = 0.5) -> float:
    """Unbiased estimate ``(mean(d) - mu (1 - rho)) / rho``. Not clamped to [0, 1]."""
    if not 0.0 < rho <= 1.0:
        raise ParameterOutOfRange(f"rho must lie in (0, 1], got {rho!r}")
    if not 0.0 <= mu <= 1.0:
        raise ParameterOutOfRange(f"mu must lie in [0, 1], got {mu!r}")
    d = np.asarray(d, dtype=float)
    if d.size == 0:
        raise EmptyInput("no responses to estimate from")
    return (float(d.mean()) - mu * (1.0 - rho)) / rho


# -- budget accounting --------------------------------------------------------


@dataclass
class BudgetLedger:
    """Running privacy-loss account for publications from one histogram.

    Sequential releases add their budgets. A workload over disjoint partitions
    (one query per school district, say) is charged once: parallel composition.
    """

    entries: list[tuple[str, float]] = field(default_factory=list)

    def charge(self, label: str, epsilon: float) -> float:
        self.entries.append((label, check_epsilon(epsilon)))
        return self.total

    def charge_output(self, label: str, output: MechanismOutput) -> float:
        return self.charge(label, output.epsilon)

    def charge_parallel(self, label: str, epsilons) -> float:
        """Charge disjoint releases: the cost is the largest of their budgets."""
        values = [check_epsilon(e) for e in epsilons]
        if not values:
            raise EmptyInput("parallel release with no parts")
        return self.charge(label, max(values))

    @property
    def total(self) -> float:
        return float(sum(eps for _, eps in self.entries))

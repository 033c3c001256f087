"""Utilitarian social choice over privacy loss and accuracy.

Each person ``i`` has indirect utility ``v_i(eps, I) = -k_i eps + a_i + b_i I``.
The planner maximizes the sum subject to the production frontier; the optimum
sets the frontier slope (MRT) equal to the willingness to accept privacy loss
``WTA = sum(k) / sum(b)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from .errors import (
    BracketDoesNotStraddle,
    EmptyInput,
    ParameterOutOfRange,
    ParseError,
    ZeroDataWeight,
)
from .histogram import QueryWorkload
from .mechanisms import StrategyDecomposition, check_epsilon

DEFAULT_BRACKET = (1e-6, 1e6)
MAX_BISECTION_STEPS = 200
MRT_RTOL = 1e-10


def _vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float, ndmin=1)
    if arr.ndim != 1:
        raise ParameterOutOfRange(f"{name} must be a vector")
    if not np.all(np.isfinite(arr)):
        raise ParameterOutOfRange(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


class PreferenceProfile:
    """Privacy weights ``k``, data intercepts ``a`` and data weights ``b``.

    ``counts`` gives each row a multiplicity, so a homogeneous population of
    46 million students is one row with count 46e6 rather than three huge
    vectors. Sums and means account for the multiplicities.
    """

    def __init__(self, k, a, b, counts=None):
        self.k = _vector(k, "k")
        self.a = _vector(a, "a")
        self.b = _vector(b, "b")
        if counts is None:
            counts = np.ones(len(self.k))
        self.counts = _vector(counts, "counts")
        if not len(self.k) == len(self.a) == len(self.b) == len(self.counts):
            raise ParameterOutOfRange("k, a, b (and counts) must have the same length")
        if len(self.k) == 0:
            raise EmptyInput("preference profile needs at least one person")
        if np.any(self.k < 0):
            raise ParameterOutOfRange("privacy weights k must be nonnegative")
        if np.any(self.b < 0):
            raise ParameterOutOfRange("data weights b must be nonnegative")
        if np.any(self.counts <= 0):
            raise ParameterOutOfRange("row multiplicities must be positive")
        if not self.total_b > 0:
            raise ZeroDataWeight("sum of data weights must be positive for a finite WTA")

    @classmethod
    def compact(cls, n: float, k_bar: float, b_bar: float, a_bar: float = 0.0) -> PreferenceProfile:
        """``n`` identical people with the given mean weights."""
        return cls([k_bar], [a_bar], [b_bar], counts=[n])

    @classmethod
    def from_csv(cls, stream: TextIO) -> PreferenceProfile:
        """Read columns ``k,a,b`` (and an optional ``count``) with a header row."""
        reader = csv.DictReader(stream)
        fields = reader.fieldnames or []
        if not {"k", "a", "b"} <= set(fields):
            raise ParseError("preference CSV needs columns k, a, b", 1)
        k, a, b, counts = [], [], [], []
        for row in reader:
            try:
                k.append(float(row["k"]))
                a.append(float(row["a"]))
                b.append(float(row["b"]))
                counts.append(float(row["count"]) if row.get("count") else 1.0)
            except (TypeError, ValueError) as exc:
                raise ParseError(str(exc), reader.line_num) from None
        return cls(k, a, b, counts)

    @property
    def size(self) -> float:
        return float(self.counts.sum())

    @property
    def total_k(self) -> float:
        return float(self.counts @ self.k)

    @property
    def total_a(self) -> float:
        return float(self.counts @ self.a)

    @property
    def total_b(self) -> float:
        return float(self.counts @ self.b)

    @property
    def k_bar(self) -> float:
        return self.total_k / self.size

    @property
    def b_bar(self) -> float:
        return self.total_b / self.size

    def scaled(self, k_factor: float = 1.0, b_factor: float = 1.0) -> PreferenceProfile:
        return PreferenceProfile(self.k * k_factor, self.a, self.b * b_factor, self.counts)


@dataclass(frozen=True)
class UtilityCurvatureSpec:
    """Inputs for one person's data-utility weight.

    ``expected_second_derivative`` is ``E_x[U''(Pi' Q x)]`` (strictly negative);
    ``wealth_weights`` is ``Pi``, one weight per workload query.
    """

    expected_second_derivative: float
    wealth_weights: tuple[float, ...]

    def __post_init__(self):
        if not self.expected_second_derivative < 0:
            raise ParameterOutOfRange("utility must be strictly concave: E[U''] < 0")
        weights = tuple(float(w) for w in np.ravel(self.wealth_weights))
        if not all(math.isfinite(w) for w in weights):
            raise ParameterOutOfRange("wealth weights must be finite")
        object.__setattr__(self, "wealth_weights", weights)


def swf(epsilon: float, accuracy: float, prefs: PreferenceProfile) -> float:
    """Utilitarian welfare ``sum(a) - eps sum(k) + I sum(b)``."""
    return prefs.total_a - epsilon * prefs.total_k + accuracy * prefs.total_b


def wta(prefs: PreferenceProfile) -> float:
    """Willingness to accept privacy loss, ``sum(k) / sum(b)``."""
    if not prefs.total_b > 0:
        raise ZeroDataWeight("sum of data weights must be positive")
    return prefs.total_k / prefs.total_b


def optimal_epsilon(
    mrt: Callable[[float], float],
    wta_value: float,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    *,
    rtol: float = MRT_RTOL,
    max_steps: int = MAX_BISECTION_STEPS,
) -> float:
    """Solve ``mrt(eps) = wta_value`` for a decreasing ``mrt`` by bisection.

    Bisection happens on ``log(eps)`` so wide brackets converge as quickly as
    narrow ones. Stops once ``|mrt - wta| <= rtol * wta`` or the bracket has
    collapsed to adjacent floats.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0 < lo < hi:
        raise ParameterOutOfRange(f"bracket must satisfy 0 < lo < hi, got {bracket!r}")
    f_lo, f_hi = mrt(lo) - wta_value, mrt(hi) - wta_value
    if not (f_lo > 0 > f_hi):
        raise BracketDoesNotStraddle(
            f"need mrt(lo) > wta > mrt(hi); got mrt({lo:g})={f_lo + wta_value:.6g}, "
            f"mrt({hi:g})={f_hi + wta_value:.6g}, wta={wta_value:.6g}"
        )
    target = abs(wta_value) * rtol
    best, best_gap = lo, abs(f_lo)
    for _ in range(max_steps):
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            mid = 0.5 * (lo + hi)
        gap = mrt(mid) - wta_value
        if abs(gap) < best_gap:
            best, best_gap = mid, abs(gap)
        if abs(gap) <= target:
            return mid
        if gap > 0:
            lo = mid
        else:
            hi = mid
        if not lo < 0.5 * (lo + hi) < hi:
            break
    return best


def matrix_mechanism_optimal_epsilon(q: QueryWorkload, a: QueryWorkload, wta_value: float) -> float:
    """Closed form ``(4 (dA)**2 ||Q A^+||_F**2 / WTA) ** (1/3)``."""
    if not wta_value > 0:
        raise ParameterOutOfRange("WTA must be positive for an interior optimum")
    dec = StrategyDecomposition(q, a)
    return (4.0 * dec.strategy_sensitivity**2 * dec.frobenius_sq / wta_value) ** (1.0 / 3.0)


def data_utility_weight(spec: UtilityCurvatureSpec, q: QueryWorkload, a: QueryWorkload) -> float:
    """Weight ``b_i`` on accuracy from a second-order expansion of expected utility.

    ``b_i = -(1/2) E[U''] ||Pi' Q A^+||**2 / ||Q A^+||_F**2``.
    """
    dec = StrategyDecomposition(q, a)
    weights = np.asarray(spec.wealth_weights, dtype=float)
    if weights.shape != (q.num_queries,):
        raise ParameterOutOfRange(
            f"need one wealth weight per workload query ({q.num_queries}), got {weights.size}"
        )
    if dec.frobenius_sq == 0:
        return 0.0
    projected = weights @ dec.reconstruction
    return -0.5 * spec.expected_second_derivative * float(projected @ projected) / dec.frobenius_sq


def swf_along_frontier(prefs: PreferenceProfile, accuracy: Callable[[float], float]) -> Callable[[float], float]:
    """Welfare as a function of ``eps`` alone, with ``I`` read off the frontier."""

    def welfare(epsilon: float) -> float:
        check_epsilon(epsilon)
        return swf(epsilon, accuracy(epsilon), prefs)

    return welfare

"""Privacy-accuracy production frontiers and their slopes.

A frontier maps privacy loss ``eps`` to the best attainable accuracy
``I(eps) <= 0``. Its slope ``dI/deps`` is the marginal rate of transformation
(MRT): the accuracy given up per unit of privacy protection gained.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .errors import NonPositiveEpsilon, ParameterOutOfRange
from .histogram import QueryWorkload
from .mechanisms import MechanismId, StrategyDecomposition, check_epsilon

MAIN_TEXT = "main-text"
APPENDIX = "appendix"
CONVENTIONS = (MAIN_TEXT, APPENDIX)


@dataclass(frozen=True)
class FrontierPoint:
    epsilon: float
    accuracy: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise NonPositiveEpsilon(f"frontier points need epsilon > 0, got {self.epsilon!r}")
        if not self.accuracy <= 0:
            raise ParameterOutOfRange(f"accuracy must be <= 0, got {self.accuracy!r}")


@dataclass(frozen=True)
class FrontierCurve:
    mechanism: MechanismId
    points: tuple[FrontierPoint, ...]
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        eps = [p.epsilon for p in self.points]
        acc = [p.accuracy for p in self.points]
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise ValueError("frontier points must be strictly increasing in epsilon")
        if any(b < a for a, b in zip(acc, acc[1:])):
            raise ValueError("frontier accuracy must be nondecreasing in epsilon")

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([p.epsilon for p in self.points])

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([p.accuracy for p in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["epsilon", "accuracy"])
        for p in self.points:
            writer.writerow([f"{p.epsilon:.17g}", f"{p.accuracy:.17g}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "mechanism": self.mechanism.value,
            "parameters": self.parameters,
            "points": [{"epsilon": p.epsilon, "accuracy": p.accuracy} for p in self.points],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# -- randomized response ------------------------------------------------------


def rr_epsilon_of_rho(rho: float) -> float:
    """Privacy loss of randomized response at mu = 1/2: ``ln((1 + rho) / (1 - rho))``."""
    if not 0.0 <= rho < 1.0:
        raise ParameterOutOfRange(f"rho must lie in [0, 1), got {rho!r}")
    return math.log1p(rho) - math.log1p(-rho)


def rr_rho_of_epsilon(epsilon: float) -> float:
    """Inverse of :func:`rr_epsilon_of_rho`; ``(e^eps - 1) / (e^eps + 1) = tanh(eps / 2)``."""
    if not epsilon >= 0:
        raise ParameterOutOfRange(f"epsilon must be nonnegative, got {epsilon!r}")
    return math.tanh(epsilon / 2.0)


def rr_rho_prime(epsilon: float) -> float:
    """``d rho / d eps = 1 / (1 + cosh eps)``."""
    return 1.0 / (1.0 + math.cosh(epsilon))


def _check_rr_params(rho, pi, mu, n) -> None:
    if not 0.0 < rho <= 1.0:
        raise ParameterOutOfRange(f"rho must lie in (0, 1], got {rho!r}")
    if not 0.0 <= pi <= 1.0:
        raise ParameterOutOfRange(f"pi must lie in [0, 1], got {pi!r}")
    if not 0.0 <= mu <= 1.0:
        raise ParameterOutOfRange(f"mu must lie in [0, 1], got {mu!r}")
    if int(n) != n or n < 1:
        raise ParameterOutOfRange(f"n must be a positive integer, got {n!r}")


def rr_variance(rho: float, pi: float, mu: float, n: int) -> float:
    """Sampling variance of the randomized-response estimate of ``pi``."""
    _check_rr_params(rho, pi, mu, n)
    beta = rho * (pi - mu) + mu
    return beta * (1.0 - beta) / (rho**2 * n)


def rr_accuracy(rho: float, pi: float, mu: float, n: int, convention: str = MAIN_TEXT) -> float:
    """``-Var`` (main-text) or ``Var(rho=1) - Var(rho)`` (appendix)."""
    if convention not in CONVENTIONS:
        raise ParameterOutOfRange(f"unknown accuracy convention {convention!r}")
    var = rr_variance(rho, pi, mu, n)
    if convention == APPENDIX:
        return rr_variance(1.0, pi, mu, n) - var
    return -var


def _central_difference(f, x: float) -> float:
    h = 1e-6 * max(x, 1.0)
    return (f(x + h) - f(x - h)) / (2.0 * h)


def rr_frontier_slope(epsilon: float, pi: float, mu: float = 0.5, n: int = 1) -> float:
    """``dI/deps`` for randomized response, by central difference of the variance formula."""
    epsilon = check_epsilon(epsilon)
    _check_rr_params(1.0, pi, mu, n)

    def accuracy(eps):
        return rr_accuracy(rr_rho_of_epsilon(eps), pi, mu, n)

    return _central_difference(accuracy, epsilon)


# -- matrix mechanism ---------------------------------------------------------


def matrix_mechanism_mrt(q: QueryWorkload, a: QueryWorkload, epsilon: float) -> float:
    """``4 (dA)**2 ||Q A^+||_F**2 / eps**3``, the analytic slope of the frontier."""
    epsilon = check_epsilon(epsilon)
    dec = StrategyDecomposition(q, a)
    return 4.0 * dec.strategy_sensitivity**2 * dec.frobenius_sq / epsilon**3


# -- frontier specifications --------------------------------------------------


class FrontierSpec(Protocol):
    mechanism: MechanismId

    def accuracy(self, epsilon: float) -> float: ...

    def slope(self, epsilon: float) -> float: ...

    def parameters(self) -> dict: ...


@dataclass(frozen=True)
class RandomizedResponseFrontier:
    pi: float
    n: int
    mu: float = 0.5
    convention: str = MAIN_TEXT
    mechanism: MechanismId = MechanismId.RANDOMIZED_RESPONSE

    def __post_init__(self):
        _check_rr_params(1.0, self.pi, self.mu, self.n)
        if self.convention not in CONVENTIONS:
            raise ParameterOutOfRange(f"unknown accuracy convention {self.convention!r}")

    def accuracy(self, epsilon: float) -> float:
        epsilon = check_epsilon(epsilon)
        return rr_accuracy(rr_rho_of_epsilon(epsilon), self.pi, self.mu, self.n, self.convention)

    def slope(self, epsilon: float) -> float:
        return rr_frontier_slope(epsilon, self.pi, self.mu, self.n)

    def parameters(self) -> dict:
        return {"pi": self.pi, "mu": self.mu, "n": self.n, "convention": self.convention}


class MatrixMechanismFrontier:
    mechanism = MechanismId.MATRIX

    def __init__(self, q: QueryWorkload, a: QueryWorkload | None = None):
        self.decomposition = StrategyDecomposition(q, q if a is None else a)

    @property
    def coefficient(self) -> float:
        """``2 (dA)**2 ||Q A^+||_F**2``, so that ``I = -coefficient / eps**2``."""
        dec = self.decomposition
        return 2.0 * dec.strategy_sensitivity**2 * dec.frobenius_sq

    def accuracy(self, epsilon: float) -> float:
        return self.decomposition.accuracy(epsilon)

    def slope(self, epsilon: float) -> float:
        epsilon = check_epsilon(epsilon)
        return 2.0 * self.coefficient / epsilon**3

    def parameters(self) -> dict:
        dec = self.decomposition
        return {
            "workload": dec.workload.fingerprint(),
            "strategy": dec.strategy.fingerprint(),
            "strategy_sensitivity": dec.strategy_sensitivity,
            "frobenius_sq": dec.frobenius_sq,
        }


def frontier_curve(spec: FrontierSpec, eps_grid: Sequence[float]) -> FrontierCurve:
    grid = [float(e) for e in eps_grid]
    if not grid:
        raise ValueError("epsilon grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("epsilon grid must be strictly increasing")
    points = [FrontierPoint(e, spec.accuracy(e)) for e in grid]
    return FrontierCurve(spec.mechanism, tuple(points), spec.parameters())


def epsilon_grid(lo: float, hi: float, count: int, geometric: bool = True) -> np.ndarray:
    """Inclusive grid from ``lo`` to ``hi``; geometric spacing unless told otherwise."""
    if count < 1:
        raise ValueError("grid needs at least one point")
    if not 0 < lo <= hi:
        raise ValueError("grid needs 0 < lo <= hi")
    if count == 1:
        return np.array([lo])
    if lo == hi:
        raise ValueError("a grid with several points needs lo < hi")
    return np.geomspace(lo, hi, count) if geometric else np.linspace(lo, hi, count)

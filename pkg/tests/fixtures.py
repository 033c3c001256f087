"""Exact mechanisms used only as test fixtures."""

import math

from privacy_frontier.errors import ParameterOutOfRange


def clamped_geometric_count(epsilon, cells=None, upper=4):
    """Count of records in ``cells`` plus two-sided geometric noise, clamped to [0, upper].

    Mass that would fall outside the range piles onto the endpoints, which keeps
    the mechanism exactly epsilon-DP for a sensitivity-1 count.
    """
    alpha = math.exp(-epsilon)
    norm = (1 - alpha) / (1 + alpha)

    def mechanism(x):
        n = sum(x) if cells is None else sum(x[c] for c in cells)
        if n > upper:
            raise ParameterOutOfRange("count exceeds the clamp range")
        out = {0: alpha**n / (1 + alpha), upper: alpha ** (upper - n) / (1 + alpha)}
        for z in range(1, upper):
            out[z] = norm * alpha ** abs(z - n)
        return out

    return mechanism

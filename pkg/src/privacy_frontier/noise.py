"""Seeded, splittable randomness for the mechanisms.

A :class:`NoiseSource` is identified by ``(seed, stream_id)``; the same pair
always replays the same sequence, and distinct stream ids give independent
streams (numpy ``SeedSequence`` spawn keys). Replications that run in parallel
should each take their own :meth:`NoiseSource.substream`.
"""

from __future__ import annotations

import numpy as np

from .errors import NonPositiveScale

_MAX_SEED = 2**64 - 1


class NoiseSource:
    def __init__(self, seed: int = 0, stream_id: int = 0, *, _path: tuple[int, ...] = ()):
        if not 0 <= int(seed) <= _MAX_SEED:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if int(stream_id) < 0:
            raise ValueError("stream_id must be nonnegative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path = tuple(int(p) for p in _path)
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self._path))
        self._rng = np.random.Generator(np.random.PCG64(sequence))

    def __repr__(self):
        suffix = f", path={self._path}" if self._path else ""
        return f"NoiseSource(seed={self.seed}, stream_id={self.stream_id}{suffix})"

    def substream(self, index: int) -> NoiseSource:
        """Independent child stream; deterministic in (seed, stream_id, index)."""
        return NoiseSource(self.seed, self.stream_id, _path=(*self._path, int(index)))

    def random(self, size=None):
        """Uniform draws on ``[0, 1)``."""
        return self._rng.random(size)

    def centered_uniform(self, size=None):
        """Uniform draws on the open interval ``(-1/2, 1/2)``."""
        u = self._rng.random(size) - 0.5
        if size is None:
            while u == -0.5:
                u = self._rng.random() - 0.5
            return u
        bad = u == -0.5
        while np.any(bad):
            u[bad] = self._rng.random(int(bad.sum())) - 0.5
            bad = u == -0.5
        return u

    def laplace(self, scale: float, size=None):
        """Laplace(0, scale) draws by inverse CDF; see :func:`laplace_from_uniform`."""
        _check_scale(scale)
        return laplace_from_uniform(self.centered_uniform(size), scale)

    def bernoulli(self, p: float, size=None):
        return (self._rng.random(size) < p).astype(np.int8)


def _check_scale(scale: float) -> None:
    if not scale > 0 or not np.isfinite(scale):
        raise NonPositiveScale(f"Laplace scale must be positive and finite, got {scale!r}")


def laplace_from_uniform(u, scale: float):
    """Map ``u`` in ``(-1/2, 1/2)`` to Laplace(0, scale): ``-b sign(u) ln(1 - 2|u|)``."""
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def sample_laplace(scale: float, noise: NoiseSource) -> float:
    """One Laplace draw with mean 0 and variance ``2 * scale**2``."""
    _check_scale(scale)
    return float(noise.laplace(scale))

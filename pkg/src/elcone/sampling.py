"""Counter-based random streams and cone samplers.

Every stream is a Philox generator keyed by (seed, stream id), so identical
keys give identical sequences on every platform and distinct ids never
overlap.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .cones import ConeDims, PointPQ

_MASK64 = (1 << 64) - 1
MODES = ("interior", "boundary", "mix")


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = int(getattr(self, name))
            if not 0 <= v <= _MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")
            object.__setattr__(self, name, v)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=(self.stream << 64) | self.seed))

    def fork(self, child: int) -> "RngStream":
        return RngStream(self.seed, _splitmix64(self.stream ^ _splitmix64(int(child) & _MASK64)))


RngLike = Union[RngStream, np.random.Generator, int]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return RngStream(int(rng)).generator()


def unit_vectors(q: int, n: int, rng: RngLike) -> np.ndarray:
    """n directions uniform on the unit sphere of R^q, as an (n, q) array."""
    g = as_generator(rng)
    U = g.standard_normal((n, q))
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    U = U / norms
    U[np.all(U == 0.0, axis=1), 0] = 1.0
    return U


def _boundary_mask(g: np.random.Generator, n: int, mode: str) -> np.ndarray:
    if mode == "interior":
        return np.zeros(n, dtype=bool)
    if mode == "boundary":
        return np.ones(n, dtype=bool)
    if mode == "mix":
        return g.random(n) < 0.25
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def sample_M_batch(dims: ConeDims, n: int, rng: RngLike, mode: str = "mix") -> np.ndarray:
    """(n, p+q) array of points of M(p,q).

    x has absolute-normal entries; u = r * d with d a random direction and r
    uniform on [0, sum x) (interior) or r = sum x (boundary).
    """
    g = as_generator(rng)
    X = np.abs(g.standard_normal((n, dims.p)))
    D = unit_vectors(dims.q, n, g)
    s = X.sum(axis=1)
    r = s * g.random(n)
    on_boundary = _boundary_mask(g, n, mode)
    r[on_boundary] = s[on_boundary]
    return np.hstack([X, r[:, None] * D])


def sample_L_batch(dims: ConeDims, n: int, rng: RngLike, mode: str = "mix") -> np.ndarray:
    """(n, p+q) array of points of L(p,q): x = ||u|| e + slack with slack >= 0."""
    g = as_generator(rng)
    U = g.standard_normal((n, dims.q))
    slack = np.abs(g.standard_normal((n, dims.p)))
    on_boundary = _boundary_mask(g, n, mode)
    zero_at = g.integers(0, dims.p, size=n)
    rows = np.nonzero(on_boundary)[0]
    slack[rows, zero_at[rows]] = 0.0
    X = np.linalg.norm(U, axis=1)[:, None] + slack
    return np.hstack([X, U])


def sample_M(dims: ConeDims, rng: RngLike, mode: str = "mix") -> PointPQ:
    return PointPQ.from_flat(sample_M_batch(dims, 1, rng, mode)[0], dims)


def sample_L(dims: ConeDims, rng: RngLike, mode: str = "mix") -> PointPQ:
    return PointPQ.from_flat(sample_L_batch(dims, 1, rng, mode)[0], dims)

"""Uniform grids and reproducible Brownian increments.

Randomness comes from the counter-based Philox generator: every path is
keyed by (master seed, path index), so the i-th increment of path p is a
pure function of those integers.  Ensembles are therefore bit-identical
for a fixed master seed no matter how path generation is scheduled, and a
path can be refined in place by Brownian-bridge midpoints drawn from a
disjoint counter block of the same key.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SimulationGrid",
    "BrownianPath",
    "path_key",
    "sample_brownian",
    "refine_brownian",
    "sample_ensemble_increments",
    "refine_ensemble_increments",
]

_KEY_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class SimulationGrid:
    """Uniform grid t_i = i*T/n, i = 0..n."""

    n: int
    T: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"grid needs at least 2 steps, got {self.n}")
        if self.T <= 0.0:
            raise ValueError(f"horizon must be positive, got {self.T}")

    @property
    def dt(self) -> float:
        return self.T / self.n

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * (self.T / self.n)

    def refined(self) -> "SimulationGrid":
        return SimulationGrid(2 * self.n, self.T)


def path_key(master_seed: int, path_index: int) -> int:
    """128-bit Philox key for one path: high word seed, low word index."""
    return ((master_seed & _KEY_MASK) << 64) | (path_index & _KEY_MASK)


def _generator(key: int, counter_block: int = 0) -> np.random.Generator:
    # disjoint counter blocks partition one key's stream (refinement levels)
    counter = np.array([0, 0, counter_block, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass(frozen=True)
class BrownianPath:
    """Increments of B on a grid: increments[i] ~ N(0, dt), i = 0..n-1."""

    grid: SimulationGrid
    increments: np.ndarray
    seed: int
    level: int = 0  # number of bridge refinements applied since sampling

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=float)
        if inc.shape != (self.grid.n,):
            raise ValueError(
                f"expected {self.grid.n} increments, got shape {inc.shape}"
            )
        object.__setattr__(self, "increments", inc)

    @property
    def values(self) -> np.ndarray:
        """B at the grid times, starting from B_0 = 0."""
        out = np.empty(self.grid.n + 1)
        out[0] = 0.0
        np.cumsum(self.increments, out=out[1:])
        return out


def sample_brownian(grid: SimulationGrid, seed: int) -> BrownianPath:
    """Draw the increments of one path, deterministic in (seed, grid)."""
    gen = _generator(seed, counter_block=0)
    inc = gen.standard_normal(grid.n) * np.sqrt(grid.dt)
    return BrownianPath(grid=grid, increments=inc, seed=seed)


def _exact_pair_split(d: np.ndarray, w: np.ndarray):
    """Split each coarse increment d into (d/2 + w, d/2 - w) with pair sums
    reproducing d as exactly as binary64 permits.

    The naive split misses d by an ulp whenever the additions round; the
    residual is absorbed into the smaller-magnitude member, which restores
    bitwise equality whenever a representable pair exists.  When |w|
    exceeds |d| both members have magnitude ~|w| and no pair of doubles at
    that scale can sum exactly to the full-precision d; a one-ulp residual
    then remains, which is immaterial for every coupling downstream.
    """
    f1 = 0.5 * d + w
    f2 = d - f1
    for _ in range(4):
        delta = d - (f1 + f2)
        mask = delta != 0.0
        if not mask.any():
            break
        into_f2 = mask & (np.abs(f2) <= np.abs(f1))
        nf2 = np.where(into_f2, f2 + delta, f2)
        nf1 = np.where(mask & ~into_f2, f1 + delta, f1)
        if np.array_equal(nf1, f1) and np.array_equal(nf2, f2):
            break
        f1, f2 = nf1, nf2
    return f1, f2


def refine_brownian(path: BrownianPath) -> BrownianPath:
    """Brownian-bridge midpoint refinement onto the doubled grid.

    Coarse increment i splits into fine increments (d/2 + w, d/2 - w) with
    w ~ N(0, dt/4) drawn from the path key's next counter block, so the
    pair sums back to the coarse increment exactly and further levels stay
    reproducible.
    """
    grid2 = path.grid.refined()
    gen = _generator(path.seed, counter_block=path.level + 1)
    w = gen.standard_normal(path.grid.n) * (0.5 * np.sqrt(path.grid.dt))
    f1, f2 = _exact_pair_split(path.increments, w)
    fine = np.empty(grid2.n)
    fine[0::2] = f1
    fine[1::2] = f2
    return BrownianPath(grid=grid2, increments=fine, seed=path.seed, level=path.level + 1)


def sample_ensemble_increments(grid: SimulationGrid, master_seed: int, m: int,
                               path_offset: int = 0) -> np.ndarray:
    """Increment matrix (m, n) for paths path_offset .. path_offset+m-1.

    Row p is exactly sample_brownian(grid, path_key(master_seed, offset+p)):
    the ensemble is a stack of independently keyed paths, so any chunking
    of the index range reproduces the same rows.
    """
    out = np.empty((m, grid.n))
    scale = np.sqrt(grid.dt)
    for p in range(m):
        gen = _generator(path_key(master_seed, path_offset + p), counter_block=0)
        out[p] = gen.standard_normal(grid.n)
    out *= scale
    return out


def refine_ensemble_increments(increments: np.ndarray, dt: float, master_seed: int,
                               level: int, path_offset: int = 0) -> np.ndarray:
    """Vectorized bridge refinement of an (m, n) increment matrix."""
    m, n = increments.shape
    fine = np.empty((m, 2 * n))
    scale = 0.5 * np.sqrt(dt)
    for p in range(m):
        gen = _generator(path_key(master_seed, path_offset + p), counter_block=level + 1)
        w = gen.standard_normal(n) * scale
        f1, f2 = _exact_pair_split(increments[p], w)
        fine[p, 0::2] = f1
        fine[p, 1::2] = f2
    return fine

"""
Training and test point sets.

All randomness comes from numpy Philox generators keyed by (seed, stream),
so every set is reproducible from its seed. Sets for the scaled domain are
produced by sampling the original domain and multiplying by b.
"""

import math
from pathlib import Path
from typing import Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from common.models import Box, TrainConfig
from mfp_solver.constants import STREAM_BOUNDARY, STREAM_INTERIOR
from mfp_solver.exceptions import ConfigurationError
from mfp_solver.utils.formatters import write_csv


def philox_generator(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator for one (seed, stream) pair"""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))
    )


class PointSet(BaseModel):
    """
    Points of one role in a run.

    Attributes:
        points: Array of shape (count, d)
        kind: interior or boundary
        seed: Generator seed, None for grids
    """
    points: np.ndarray
    kind: Literal["interior", "boundary"]
    seed: Optional[int] = None

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def count(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def scaled(self, b: float) -> "PointSet":
        """Same set mapped by x -> b*x"""
        if b == 1.0:
            return self
        return self.model_copy(update={"points": self.points * b})


def uniform_grid(domain: Box, count: int) -> PointSet:
    """
    Equispaced grid including both endpoints on every axis.

    Raises:
        ConfigurationError: If count < 2, or in 2D count is not a perfect square.
    """
    if domain.dim == 1:
        if count < 2:
            raise ConfigurationError(f"A 1D grid needs at least 2 points, got {count}")
        xs = np.linspace(domain.lo[0], domain.hi[0], count)
        return PointSet(points=xs[:, None], kind="interior")
    side = math.isqrt(count)
    if side * side != count or side < 2:
        raise ConfigurationError(f"A 2D grid needs a perfect-square count >= 4, got {count}")
    axes = [np.linspace(lo, hi, side) for lo, hi in zip(domain.lo, domain.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return PointSet(points=np.stack([m.ravel() for m in mesh], axis=1), kind="interior")


def periodic_grid(domain: Box, count: int) -> PointSet:
    """
    Equispaced 1D grid on [lo, hi), right endpoint excluded.

    Raises:
        ConfigurationError: For 2D domains or count < 2.
    """
    if domain.dim != 1:
        raise ConfigurationError("Periodic grids are only defined for 1D domains")
    if count < 2:
        raise ConfigurationError(f"A periodic grid needs at least 2 points, got {count}")
    lo, hi = domain.lo[0], domain.hi[0]
    xs = lo + (hi - lo) * np.arange(count) / count
    return PointSet(points=xs[:, None], kind="interior")


def latin_hypercube(domain: Box, count: int, seed: int) -> PointSet:
    """
    Latin hypercube sample: per axis, one point in each of count equal strata.

    Each axis draws a random permutation of the strata and a uniform
    position inside each stratum.
    """
    if count < 1:
        raise ConfigurationError(f"Latin hypercube needs count >= 1, got {count}")
    rng = philox_generator(seed, STREAM_INTERIOR)
    columns = []
    for lo, hi in zip(domain.lo, domain.hi):
        unit = (rng.permutation(count) + rng.random(count)) / count
        columns.append(lo + (hi - lo) * unit)
    return PointSet(points=np.stack(columns, axis=1), kind="interior", seed=seed)


def boundary_sample(domain: Box, count: int, seed: Optional[int] = None) -> PointSet:
    """
    Points on the boundary of the domain.

    1D: exactly the two endpoints. 2D: count/4 points per edge, edges taken
    counterclockwise from (lo_x, lo_y); positions along an edge are j/m when
    seed is None, uniform random otherwise.

    Raises:
        ConfigurationError: If count is not 2 in 1D or not a positive multiple of 4 in 2D.
    """
    if domain.dim == 1:
        if count != 2:
            raise ConfigurationError(f"A 1D boundary has exactly 2 points, got count={count}")
        return PointSet(
            points=np.array([[domain.lo[0]], [domain.hi[0]]]), kind="boundary", seed=seed
        )
    if count <= 0 or count % 4:
        raise ConfigurationError(f"2D boundary count must be a positive multiple of 4, got {count}")
    per_edge = count // 4
    if seed is None:
        ts = [np.arange(per_edge) / per_edge for _ in range(4)]
    else:
        rng = philox_generator(seed, STREAM_BOUNDARY)
        ts = [rng.random(per_edge) for _ in range(4)]
    x0, y0 = domain.lo
    x1, y1 = domain.hi
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    edges = []
    for k, t in enumerate(ts):
        (ax, ay), (bx, by) = corners[k], corners[(k + 1) % 4]
        xs = ax + t * (bx - ax) if ax != bx else np.full(per_edge, ax)
        ys = ay + t * (by - ay) if ay != by else np.full(per_edge, ay)
        edges.append(np.stack([xs, ys], axis=1))
    return PointSet(points=np.concatenate(edges), kind="boundary", seed=seed)


def training_sets(domain: Box, config: TrainConfig, seed: int, with_boundary: bool = True) -> Tuple[PointSet, Optional[PointSet]]:
    """
    Interior and boundary training sets of one seed in the original domain.

    The seed equal to config.uniform_seed gets a uniform interior grid and
    an equispaced boundary; every other seed gets a Latin hypercube and a
    random boundary.

    Args:
        domain: Original (unscaled) problem domain.
        config: Run configuration (counts, uniform_seed).
        seed: Training-set seed.
        with_boundary: False for regression targets.

    Returns:
        (interior, boundary or None)
    """
    if seed == config.uniform_seed:
        interior = uniform_grid(domain, config.interior_count)
        boundary_seed = None
    else:
        interior = latin_hypercube(domain, config.interior_count, seed)
        boundary_seed = seed
    if not with_boundary:
        return interior, None
    return interior, boundary_sample(domain, config.boundary_count, boundary_seed)


def write_points_csv(points: PointSet, path: Union[str, Path]) -> Path:
    """One point per row, columns x (and y)"""
    header = ["x", "y"][:points.dim]
    return write_csv(path, header, (tuple(float(v) for v in row) for row in points.points))

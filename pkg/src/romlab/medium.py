"""Spatial problem definition: mesh, cross sections, source, boundary data.

Cross sections and the volume source are piecewise constant per cell, so
directional transport solves are exact and the weighted L2 norm of a
cell-average vector is the exact norm of its piecewise-constant
representative.  All types here are immutable after construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import defaults
from .errors import (
    GridMismatch,
    LambdaAtLeastOne,
    LengthMismatch,
    NonPositiveSigmaT,
    WrongHalf,
)

DEFAULT_LAMBDA_MAX = defaults.LAMBDA_MAX


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Strictly increasing cell edges spanning [x_left, x_right]."""

    edges: np.ndarray

    def __post_init__(self):
        edges = _frozen_array(self.edges)
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("grid needs at least two edges")
        if not np.all(np.isfinite(edges)):
            raise ValueError("grid edges must be finite")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("grid edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def uniform(cls, x_left: float, x_right: float, ncells: int) -> "SpatialGrid":
        if ncells < 1:
            raise ValueError("ncells must be at least 1")
        return cls(np.linspace(float(x_left), float(x_right), ncells + 1))

    @property
    def x_left(self) -> float:
        return float(self.edges[0])

    @property
    def x_right(self) -> float:
        return float(self.edges[-1])

    @property
    def ncells(self) -> int:
        return self.edges.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def same_as(self, other: "SpatialGrid") -> bool:
        return self is other or np.array_equal(self.edges, other.edges)


@dataclass(frozen=True, eq=False)
class MediumProfile:
    """Per-cell cross sections and source on a grid.  Build with make_medium.

    ``lam`` is the scattering ratio max(sigma_s/sigma_t); ``sigma_r`` is the
    normalized scattering cross section sigma_s/lam, left as None for a pure
    absorber (lam = 0) and never dereferenced in that case.
    """

    grid: SpatialGrid
    sigma_t: np.ndarray
    sigma_s: np.ndarray
    q: np.ndarray
    lam: float
    sigma_r: np.ndarray | None
    cell_weights: np.ndarray  # sigma_t * h, the L2(sigma_t) quadrature weights

    @property
    def ncells(self) -> int:
        return self.grid.ncells


def make_medium(grid, sigma_t, sigma_s, q, lambda_max: float = DEFAULT_LAMBDA_MAX) -> MediumProfile:
    """Validate per-cell data and derive the scattering ratio.

    Raises LengthMismatch, NonPositiveSigmaT, or LambdaAtLeastOne when the
    admissibility constraints fail.  lambda_max < 1 caps the scattering
    ratio; source iteration degrades as the ratio approaches 1.
    """
    sigma_t = _frozen_array(sigma_t)
    sigma_s = _frozen_array(sigma_s)
    q = _frozen_array(q)
    m = grid.ncells
    for name, arr in (("sigma_t", sigma_t), ("sigma_s", sigma_s), ("q", q)):
        if arr.shape != (m,):
            raise LengthMismatch(f"{name} has length {arr.size}, grid has {m} cells")
    if not np.all(np.isfinite(sigma_t)) or np.any(sigma_t <= 0):
        raise NonPositiveSigmaT("sigma_t entries must be positive and finite")
    if np.any(sigma_s < 0) or np.any(q < 0):
        raise ValueError("sigma_s and q must be nonnegative")
    ratios = sigma_s / sigma_t
    lam = float(np.max(ratios)) if m else 0.0
    if lam > lambda_max:
        raise LambdaAtLeastOne(
            f"max sigma_s/sigma_t = {lam:.6g} exceeds the cap {lambda_max}"
        )
    sigma_r = _frozen_array(sigma_s / lam) if lam > 0 else None
    weights = _frozen_array(sigma_t * grid.widths)
    return MediumProfile(grid, sigma_t, sigma_s, q, lam, sigma_r, weights)


@dataclass(frozen=True, eq=False)
class ScalarFlux:
    """Cell-averaged scalar flux on a grid."""

    values: np.ndarray
    grid: SpatialGrid

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.shape != (self.grid.ncells,):
            raise LengthMismatch(
                f"flux has {values.size} values, grid has {self.grid.ncells} cells"
            )
        object.__setattr__(self, "values", values)


def weighted_l2_norm(flux: ScalarFlux, medium: MediumProfile) -> float:
    """Exact L2(sigma_t) norm of the piecewise-constant flux."""
    if not flux.grid.same_as(medium.grid):
        raise GridMismatch("flux and medium live on different grids")
    return float(np.sqrt(np.sum(flux.values**2 * medium.cell_weights)))


def weighted_norm_of(values: np.ndarray, medium: MediumProfile) -> float:
    """L2(sigma_t) norm of a raw cell-average vector (no grid check)."""
    return float(np.sqrt(np.sum(np.asarray(values) ** 2 * medium.cell_weights)))


class _BoundaryFunction:
    """One side's inflow data as a function of the direction cosine."""

    def evaluate(self, mu):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantBoundary(_BoundaryFunction):
    value: float

    def evaluate(self, mu):
        return self.value * np.ones_like(np.asarray(mu, dtype=float))

    def bounds_on(self, lo: float, hi: float):
        return self.value, self.value


@dataclass(frozen=True)
class LinearBoundary(_BoundaryFunction):
    """value(mu) = slope * mu + intercept on the side's inflow half."""

    slope: float
    intercept: float

    def evaluate(self, mu):
        return self.slope * np.asarray(mu, dtype=float) + self.intercept

    def bounds_on(self, lo: float, hi: float):
        a, b = self.slope * lo + self.intercept, self.slope * hi + self.intercept
        return min(a, b), max(a, b)


@dataclass(frozen=True, eq=False)
class TabulatedBoundary(_BoundaryFunction):
    """Sorted (mu, value) table, linearly interpolated and clamped outside."""

    mus: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        mus = _frozen_array(self.mus)
        values = _frozen_array(self.values)
        if mus.ndim != 1 or mus.size < 1 or mus.shape != values.shape:
            raise ValueError("table needs equal-length 1-d mu and value arrays")
        if not (np.all(np.isfinite(mus)) and np.all(np.isfinite(values))):
            raise ValueError("table entries must be finite")
        if np.any(np.diff(mus) <= 0):
            raise ValueError("table mus must be strictly increasing")
        object.__setattr__(self, "mus", mus)
        object.__setattr__(self, "values", values)

    def evaluate(self, mu):
        return np.interp(np.asarray(mu, dtype=float), self.mus, self.values)

    @property
    def max_slope(self) -> float:
        """Empirical Lipschitz constant: the largest absolute table slope."""
        if self.mus.size < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.values) / np.diff(self.mus))))

    def bounds_on(self, lo: float, hi: float):
        return float(np.min(self.values)), float(np.max(self.values))


@dataclass(frozen=True, eq=False)
class BoundarySpec:
    """Inflow data: ``left`` on mu > 0 at x_left, ``right`` on mu < 0 at x_right.

    With require_nonnegative the data are checked to be >= 0 on their halves,
    as expected of physical intensities.
    """

    left: _BoundaryFunction
    right: _BoundaryFunction
    require_nonnegative: bool = False

    def __post_init__(self):
        if self.require_nonnegative:
            for side, fn, lo, hi in (
                ("left", self.left, 0.0, 1.0),
                ("right", self.right, -1.0, 0.0),
            ):
                low, _ = fn.bounds_on(lo, hi)
                if low < 0:
                    raise ValueError(f"{side} boundary data is negative on its half")

    def side_value(self, side: str, mu: float) -> float:
        if side == "left":
            if mu <= 0:
                raise WrongHalf(f"left boundary queried at mu = {mu} (needs mu > 0)")
            return float(self.left.evaluate(mu))
        if side == "right":
            if mu >= 0:
                raise WrongHalf(f"right boundary queried at mu = {mu} (needs mu < 0)")
            return float(self.right.evaluate(mu))
        raise ValueError(f"unknown side {side!r}")


def eval_boundary(spec: BoundarySpec, mu: float) -> float:
    """Inflow value for direction mu: left data for mu > 0, right for mu < 0."""
    if mu > 0:
        return spec.side_value("left", mu)
    if mu < 0:
        return spec.side_value("right", mu)
    raise WrongHalf("mu = 0 belongs to neither inflow half")


def inflow_values(spec: BoundarySpec, mus: np.ndarray) -> np.ndarray:
    """Vectorized eval_boundary over an array of nonzero cosines."""
    mus = np.asarray(mus, dtype=float)
    if np.any(mus == 0):
        raise WrongHalf("mu = 0 belongs to neither inflow half")
    out = np.empty_like(mus)
    pos = mus > 0
    out[pos] = np.asarray(spec.left.evaluate(mus[pos]), dtype=float)
    out[~pos] = np.asarray(spec.right.evaluate(mus[~pos]), dtype=float)
    return out

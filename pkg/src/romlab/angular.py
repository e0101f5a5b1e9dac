"""Velocity-space discretization: truncated partitions, quadratures, sampling.

The direction interval [-1, 1] minus the band (-delta, delta) is split into
n mirror-symmetric cells.  Deterministic quadratures (midpoint, composite
Gauss) and seeded uniform-per-cell random quadratures are built on top of
the partition.  Random draws come from a counter-based 64-bit mix so that
identical (seed, sample, cell) keys give identical ordinates on every
platform and under any parallel schedule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import defaults
from .errors import AlphaUnbounded, DeltaOutOfRange, OddN

DEFAULT_ALPHA_MAX = defaults.ALPHA_MAX

_U64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    """SplitMix64 finalizer on a 64-bit lane."""
    x &= _U64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _U64
    return x ^ (x >> 31)


def _stream_base(master_seed: int, sample_index: int) -> int:
    h = _mix64((int(master_seed) & _U64) ^ _GOLDEN)
    return _mix64(h ^ _mix64(((int(sample_index) + 1) * _GOLDEN) & _U64))


def _keyed_uniforms(base: int, keys: np.ndarray) -> np.ndarray:
    """One uniform in [0, 1) per integer key, from the stream at ``base``."""
    k = keys.astype(np.uint64)
    with np.errstate(over="ignore"):
        x = np.uint64(base) + (k + np.uint64(1)) * np.uint64(_GOLDEN)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
    return (x >> np.uint64(11)).astype(np.float64) * 2.0**-53


def uniform_stream(master_seed: int, sample_index: int, count: int) -> np.ndarray:
    """First ``count`` uniforms of the (seed, sample) stream, keyed 0..count-1."""
    base = _stream_base(master_seed, sample_index)
    return _keyed_uniforms(base, np.arange(count, dtype=np.uint64))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VelocityPartition:
    """Mirror-symmetric cells covering [-1, -delta) and (delta, 1].

    Cells are stored in ascending mu order: indices 0..m-1 cover the
    negative half, m..n-1 the positive half, and cell n-1-i is the mirror
    image of cell i.  ``weights`` are cell measures over |S| = 2(1-delta)
    and sum to 1; ``alpha`` = n * weights are the rescaled weights, capped
    so the randomized-quadrature theory applies.
    """

    delta: float
    lower: np.ndarray
    upper: np.ndarray
    weights: np.ndarray
    alpha: np.ndarray
    layout: str

    @property
    def n(self) -> int:
        return self.lower.size

    @property
    def m(self) -> int:
        return self.lower.size // 2

    @property
    def half_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """(negative-half edges, positive-half edges), each ascending, m+1 long."""
        m = self.m
        neg = np.append(self.lower[:m], self.upper[m - 1])
        pos = np.append(self.lower[m:], self.upper[-1])
        return neg, pos


def build_partition(
    n: int,
    delta: float,
    layout: str = "uniform",
    ratio: float = 1.0,
    alpha_max: float = DEFAULT_ALPHA_MAX,
) -> VelocityPartition:
    """Split each truncated half-interval into m = n/2 cells.

    ``uniform`` gives equal widths (alpha = 1 exactly).  ``graded`` gives
    geometric widths growing away from the truncation by ``ratio`` per cell;
    the rescaled weights must stay below alpha_max.
    """
    if n < 2 or n % 2 != 0:
        raise OddN(f"partition needs an even n >= 2, got {n}")
    if not (0.0 < delta < 1.0):
        raise DeltaOutOfRange(f"delta must lie in (0, 1), got {delta}")
    m = n // 2
    if layout == "uniform":
        pos_edges = np.linspace(delta, 1.0, m + 1)
    elif layout == "graded":
        if ratio <= 0:
            raise ValueError("graded ratio must be positive")
        widths = ratio ** np.arange(m)
        widths *= (1.0 - delta) / widths.sum()
        pos_edges = delta + np.concatenate([[0.0], np.cumsum(widths)])
        pos_edges[-1] = 1.0
    else:
        raise ValueError(f"unknown layout {layout!r}")

    pos_lo, pos_hi = pos_edges[:-1], pos_edges[1:]
    lower = np.concatenate([-pos_hi[::-1], pos_lo])
    upper = np.concatenate([-pos_lo[::-1], pos_hi])
    widths_all = upper - lower
    weights = widths_all / (2.0 * (1.0 - delta))
    weights = weights / weights.sum()
    alpha = n * weights
    amax = float(np.max(alpha))
    if amax > alpha_max * (1.0 + 1e-12):
        raise AlphaUnbounded(
            f"max rescaled weight {amax:.6g} exceeds the cap {alpha_max}"
        )
    return VelocityPartition(
        float(delta), _frozen(lower), _frozen(upper), _frozen(weights), _frozen(alpha), layout
    )


@dataclass(frozen=True, eq=False)
class QuadratureSet:
    """Ordinates and weights on the truncated direction space.

    ``provenance`` records how the set was built (rule or sample seed) so
    that emitted artifacts are reproducible from their metadata alone.
    """

    mus: np.ndarray
    weights: np.ndarray
    delta: float
    provenance: str

    @property
    def n(self) -> int:
        return self.mus.size


def dom_quadrature(partition: VelocityPartition, rule: str = "midpoint", order: int | None = None) -> QuadratureSet:
    """Deterministic quadrature on the partition's truncated space.

    ``midpoint`` takes cell midpoints with the partition weights.  ``gauss``
    ignores the cell structure and lays a composite Gauss-Legendre rule of
    ``order`` nodes (default m) over each half-interval, with weights
    normalized to sum to 1.
    """
    if rule == "midpoint":
        mus = 0.5 * (partition.lower + partition.upper)
        return QuadratureSet(
            _frozen(mus),
            partition.weights,
            partition.delta,
            f"dom-midpoint(n={partition.n},delta={partition.delta})",
        )
    if rule == "gauss":
        k = partition.m if order is None else int(order)
        mus, weights = composite_gauss(partition.delta, k)
        return QuadratureSet(
            _frozen(mus),
            _frozen(weights),
            partition.delta,
            f"dom-gauss(order={k},delta={partition.delta})",
        )
    raise ValueError(f"unknown quadrature rule {rule!r}")


def composite_gauss(delta: float, nodes_per_half: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [-1,-delta] and [delta,1], weights summing to 1.

    Valid for delta = 0 as well (nodes are interior, so none lands on 0).
    """
    if not (0.0 <= delta < 1.0):
        raise DeltaOutOfRange(f"delta must lie in [0, 1), got {delta}")
    if nodes_per_half < 1:
        raise ValueError("need at least one node per half")
    t, w = leggauss(nodes_per_half)
    pos = delta + 0.5 * (t + 1.0) * (1.0 - delta)
    mus = np.concatenate([-pos[::-1], pos])
    weights = np.concatenate([w[::-1], w]) / 4.0  # GL weights sum to 2 per half
    return mus, weights


def reference_quadrature(delta: float, nodes_per_half: int) -> QuadratureSet:
    """High-order composite Gauss set standing in for the exact direction average."""
    mus, weights = composite_gauss(delta, nodes_per_half)
    return QuadratureSet(
        _frozen(mus),
        _frozen(weights),
        float(delta),
        f"reference-gauss(N={nodes_per_half},delta={delta})",
    )


def rom_sample(partition: VelocityPartition, master_seed: int, sample_index: int) -> QuadratureSet:
    """One random quadrature: a uniform draw per positive cell, mirrored.

    Each positive-half cell j gets mu_j ~ Uniform(S_j) from the stream keyed
    by (master_seed, sample_index, j); the negative half is the exact
    negation, matching the mirror coupling the bias analysis relies on.
    """
    n, m = partition.n, partition.m
    base = _stream_base(master_seed, sample_index)
    u = _keyed_uniforms(base, np.arange(m, n, dtype=np.uint64))
    pos_lo = partition.lower[m:]
    pos_hi = partition.upper[m:]
    pos_mu = pos_lo + u * (pos_hi - pos_lo)
    mus = np.concatenate([-pos_mu[::-1], pos_mu])
    return QuadratureSet(
        _frozen(mus),
        partition.weights,
        partition.delta,
        f"rom(seed={master_seed},index={sample_index},n={n},delta={partition.delta})",
    )

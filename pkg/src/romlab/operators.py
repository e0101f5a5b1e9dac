"""Dense-matrix laboratory for the transport and iteration operators.

Matrices act on cell-average vectors; the inner product carries the per-
cell weights sigma_t * h, so operator norms are taken on the similarity
transform D^{1/2} A D^{-1/2} where they reduce to ordinary singular
values.  This module exists to measure what the convergence analysis only
bounds: non-expansiveness, Lipschitz behavior in the ordinate, traces of
the Gram operator, and the sampling statistics of the quadrature-induced
operator and boundary deviations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import defaults
from ._parallel import indexed_map
from .angular import (
    QuadratureSet,
    VelocityPartition,
    reference_quadrature,
    rom_sample,
    uniform_stream,
)
from .errors import NoConvergence, PureAbsorber, ReferenceNotConverged, ZeroMu
from .medium import BoundarySpec, MediumProfile, inflow_values, weighted_norm_of
from .sweep import averaged_response_matrix, transmission_averages


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Matrix action on cell averages plus the inner-product weights."""

    entries: np.ndarray
    weight: np.ndarray
    label: str

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        weight = np.asarray(self.weight, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must be a square matrix")
        if weight.shape != (entries.shape[0],):
            raise ValueError("weight length must match the matrix size")
        if not np.all(np.isfinite(entries)):
            raise ValueError("entries must be finite")
        if np.any(weight <= 0):
            raise ValueError("weights must be strictly positive")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "weight", weight)

    def adjoint_entries(self) -> np.ndarray:
        """Matrix of the adjoint in the weighted inner product: D^-1 A^T D."""
        d = self.weight
        return (self.entries.T * d[None, :]) / d[:, None]


def transport_matrix(medium: MediumProfile, mu: float) -> DenseOperator:
    """Dense realization of the single-direction scattering response.

    Column j is the zero-inflow sweep of the unit cell-average source
    sigma_r * e_j, exact by linearity of the sweep.
    """
    if mu == 0:
        raise ZeroMu("transport operator undefined at mu = 0")
    if medium.lam == 0:
        raise PureAbsorber("transport matrix needs lambda > 0")
    entries = averaged_response_matrix(medium, [mu], [1.0], medium.sigma_r)
    return DenseOperator(entries, medium.cell_weights, f"A(mu={mu})")


def iteration_matrix(medium: MediumProfile, quad: QuadratureSet) -> DenseOperator:
    """Quadrature average of the transport matrices over the ordinate set."""
    if np.any(quad.mus == 0):
        raise ZeroMu("quadrature contains mu = 0")
    if medium.lam == 0:
        raise PureAbsorber("iteration matrix needs lambda > 0")
    entries = averaged_response_matrix(medium, quad.mus, quad.weights, medium.sigma_r)
    return DenseOperator(entries, medium.cell_weights, f"T[{quad.provenance}]")


def reference_iteration_matrix(
    medium: MediumProfile,
    delta: float,
    initial_nodes: int = defaults.REF_INITIAL_NODES,
    entry_tol: float = defaults.REF_ENTRY_TOL,
    max_nodes: int = defaults.REF_MAX_NODES,
) -> tuple[DenseOperator, int]:
    """Continuum iteration matrix via a composite Gauss rule, refined to cert.

    Doubles the nodes per half-interval until successive matrices agree
    entrywise below entry_tol; raises ReferenceNotConverged past max_nodes.
    """
    if medium.lam == 0:
        raise PureAbsorber("iteration matrix needs lambda > 0")
    nodes = initial_nodes
    quad = reference_quadrature(delta, nodes)
    current = averaged_response_matrix(medium, quad.mus, quad.weights, medium.sigma_r)
    while 2 * nodes <= max_nodes:
        nodes *= 2
        quad = reference_quadrature(delta, nodes)
        refined = averaged_response_matrix(
            medium, quad.mus, quad.weights, medium.sigma_r
        )
        gap = float(np.max(np.abs(refined - current)))
        current = refined
        if gap < entry_tol:
            return (
                DenseOperator(current, medium.cell_weights, f"T_ref(N={nodes})"),
                nodes,
            )
    raise ReferenceNotConverged(
        f"iteration matrix not entrywise-converged below {entry_tol} at {max_nodes} nodes/half"
    )


def weighted_operator_norm(
    op: DenseOperator,
    rel_tol: float = defaults.POWER_ITER_REL_TOL,
    max_iter: int = defaults.POWER_ITER_MAX_ITER,
) -> float:
    """Largest singular value of D^{1/2} entries D^{-1/2} by power iteration.

    Iterates the Gram matrix with a fixed pseudo-random start vector until
    the eigenvalue estimate is stationary to rel_tol; deterministic for a
    given matrix on every platform.
    """
    d = np.sqrt(op.weight)
    a = op.entries * (d[:, None] / d[None, :])
    gram = a.T @ a
    m = gram.shape[0]
    v = uniform_stream(0x5EED0FA2, 0, m) - 0.5
    v /= np.linalg.norm(v)
    estimate = -1.0
    for _ in range(max_iter):
        w = gram @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - estimate) <= rel_tol * nw:
            return float(np.sqrt(nw))
        estimate = nw
    raise NoConvergence(
        f"power iteration not stationary to {rel_tol} within {max_iter} steps"
    )


def gram_trace(medium: MediumProfile, mu: float) -> float:
    """Trace of (adjoint o operator) for the single-direction response.

    Equals the squared Hilbert-Schmidt norm: sum_ij entries_ij^2 * D_i / D_j.
    Bounded by |x_R - x_L| / |mu| * max(sigma_t)^2 * max(1/sigma_t).
    """
    op = transport_matrix(medium, mu)
    d = op.weight
    return float(np.sum(op.entries**2 * (d[:, None] / d[None, :])))


@dataclass(frozen=True, eq=False)
class DeltaStats:
    """Monte-Carlo statistics of a sampled deviation (operator or vector).

    ``entry_mean`` / ``entry_se`` hold the elementwise sample mean and its
    standard error, used to verify that the deviations are mean-zero.
    """

    n: int
    samples: int
    mean_norm: float
    mean_sq_norm: float
    se_mean: float
    se_mean_sq: float
    max_norm: float
    entry_mean: np.ndarray
    entry_se: np.ndarray


def _collect_stats(n: int, norms: np.ndarray, entries: np.ndarray) -> DeltaStats:
    count = norms.size
    sq = norms**2
    entry_mean = entries.mean(axis=0)
    entry_var = entries.var(axis=0, ddof=1)
    stats = DeltaStats(
        n=n,
        samples=count,
        mean_norm=float(norms.mean()),
        mean_sq_norm=float(sq.mean()),
        se_mean=float(norms.std(ddof=1) / np.sqrt(count)),
        se_mean_sq=float(sq.std(ddof=1) / np.sqrt(count)),
        max_norm=float(norms.max()),
        entry_mean=entry_mean,
        entry_se=np.sqrt(entry_var / count),
    )
    return stats


def iteration_deviation_stats(
    medium: MediumProfile,
    partition: VelocityPartition,
    master_seed: int,
    sample_count: int,
    ref_nodes: int = defaults.REF_INITIAL_NODES,
    jobs: int = 1,
) -> DeltaStats:
    """Norm statistics of (sampled iteration matrix - reference) over draws.

    Each sample assembles the iteration matrix for one random quadrature
    and measures its weighted-norm distance to the certified reference.
    """
    if sample_count < 2:
        raise ValueError("need at least two samples")
    ref_op, _ = reference_iteration_matrix(medium, partition.delta, ref_nodes)
    weight = medium.cell_weights

    def one(i: int):
        quad = rom_sample(partition, master_seed, i)
        t = averaged_response_matrix(medium, quad.mus, quad.weights, medium.sigma_r)
        delta = t - ref_op.entries
        norm = weighted_operator_norm(DenseOperator(delta, weight, f"dT[{i}]"))
        return norm, delta

    results = indexed_map(one, sample_count, jobs)
    norms = np.array([r[0] for r in results])
    deltas = np.stack([r[1] for r in results])
    return _collect_stats(partition.n, norms, deltas)


def boundary_deviation_stats(
    medium: MediumProfile,
    boundary: BoundarySpec,
    partition: VelocityPartition,
    master_seed: int,
    sample_count: int,
    ref_nodes: int = defaults.REF_INITIAL_NODES,
    entry_tol: float = defaults.REF_ENTRY_TOL,
    max_nodes: int = defaults.REF_MAX_NODES,
    jobs: int = 1,
) -> DeltaStats:
    """Norm statistics of the sampled boundary-propagation quadrature error.

    Per sample, the deviation is the ordinate-weighted boundary profile
    minus its certified reference average; statistics are over the
    L2(sigma_t) norms, with elementwise means kept for the mean-zero check.
    """
    if sample_count < 2:
        raise ValueError("need at least two samples")

    def averaged_profile(quad: QuadratureSet) -> np.ndarray:
        values = inflow_values(boundary, quad.mus)
        profiles = transmission_averages(medium, quad.mus)
        return (quad.weights * values) @ profiles

    nodes = ref_nodes
    b_ref = averaged_profile(reference_quadrature(partition.delta, nodes))
    while True:
        if 2 * nodes > max_nodes:
            raise ReferenceNotConverged(
                f"boundary average not converged below {entry_tol} at {max_nodes} nodes/half"
            )
        nodes *= 2
        refined = averaged_profile(reference_quadrature(partition.delta, nodes))
        gap = float(np.max(np.abs(refined - b_ref)))
        b_ref = refined
        if gap < entry_tol:
            break

    def one(i: int):
        quad = rom_sample(partition, master_seed, i)
        delta = averaged_profile(quad) - b_ref
        return weighted_norm_of(delta, medium), delta

    results = indexed_map(one, sample_count, jobs)
    norms = np.array([r[0] for r in results])
    deltas = np.stack([r[1] for r in results])
    return _collect_stats(partition.n, norms, deltas)

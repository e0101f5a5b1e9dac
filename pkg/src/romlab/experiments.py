"""End-to-end convergence studies at desk scale.

Velocity-discretization error is isolated by construction: the certified
reference solution and every test run share one spatial mesh, and the
solver tolerance is pinned far below the smallest velocity error the study
can resolve.  Random-quadrature studies draw their per-sample streams from
(master_seed, sample_index), so tables are bitwise reproducible at any
parallelism degree.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import defaults
from ._parallel import indexed_map
from .angular import build_partition, dom_quadrature, reference_quadrature, rom_sample
from .errors import ConfigError, PureAbsorber, ReferenceNotConverged, TooFewPoints
from .medium import (
    BoundarySpec,
    ConstantBoundary,
    MediumProfile,
    ScalarFlux,
    SpatialGrid,
    inflow_values,
    make_medium,
    weighted_norm_of,
)
from .solver import solve
from .sweep import batched_sweep


@dataclass(frozen=True)
class ErrorRow:
    """One study row; ``flagged`` rows are excluded from slope fits."""

    n: int
    estimate: float
    se: float
    samples: int
    flagged: bool
    wall_time: float


@dataclass(frozen=True, eq=False)
class ErrorTable:
    kind: str
    rows: tuple[ErrorRow, ...]

    def unflagged(self) -> tuple[ErrorRow, ...]:
        return tuple(r for r in self.rows if not r.flagged)


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares slope of log(estimate) against log(n)."""

    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class RegularizationRow:
    delta: float
    error: float
    f_norm: float
    bound: float
    satisfied: bool
    wall_time: float


@dataclass(frozen=True, eq=False)
class RegularizationTable:
    rows: tuple[RegularizationRow, ...]


@dataclass(frozen=True, eq=False)
class StudyConfig:
    """Everything a convergence study needs, with derived safeguards.

    The solver tolerance must sit at least three orders below the cubic
    velocity-error scale of the largest n, so measured errors are purely
    velocity discretization; None derives the cap value.  ``ref_target``
    is the certification gap for the reference solution, defaulting to one
    hundredth of that same scale.
    """

    medium: MediumProfile
    boundary: BoundarySpec
    delta: float
    n_list: tuple[int, ...]
    sample_count: int
    master_seed: int
    solver_tol: float | None = None
    ref_nodes: int = defaults.REF_INITIAL_NODES
    ref_max_nodes: int = defaults.REF_MAX_NODES
    ref_target: float | None = None
    max_iter: int = defaults.SOLVER_MAX_ITER
    layout: str = "uniform"
    ratio: float = 1.0

    def __post_init__(self):
        n_list = tuple(int(n) for n in self.n_list)
        if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
            raise ConfigError("/study/n_list", "must be a strictly increasing list")
        object.__setattr__(self, "n_list", n_list)
        cap = defaults.SOLVER_TOL_COEFF * max(n_list) ** -3
        tol = cap if self.solver_tol is None else float(self.solver_tol)
        if tol > cap:
            raise ConfigError(
                "/solver/tol",
                f"must be <= {defaults.SOLVER_TOL_COEFF:g} * n_max^-3 = {cap:.3g} to keep "
                f"solver error below the velocity errors measured, got {tol:.3g}",
            )
        object.__setattr__(self, "solver_tol", tol)
        target = (
            defaults.REF_TARGET_COEFF * max(n_list) ** -3
            if self.ref_target is None
            else float(self.ref_target)
        )
        object.__setattr__(self, "ref_target", target)
        if self.sample_count < 1:
            raise ConfigError("/study/samples", "must be at least 1")

    @property
    def n_max(self) -> int:
        return max(self.n_list)


def benchmark_config(
    n_list=(8, 16, 32, 64, 128),
    sample_count: int = 64,
    master_seed: int = 20240901,
    ncells: int = defaults.SPATIAL_CELLS,
    delta: float = 0.003125,
    **overrides,
) -> StudyConfig:
    """The default Lipschitz benchmark: unit slab, lambda = 1/2, one-sided inflow.

    sigma_t = 1, sigma_s = 0.5, q = 0 on [0, 1]; unit inflow on the left,
    none on the right.  The jump across mu = 0 together with the small
    truncation keeps the direction integrand effectively rough over the
    studied n range, exposing the 3/2-order rates for both deterministic
    midpoint sets and single random runs.
    """
    grid = SpatialGrid.uniform(0.0, 1.0, ncells)
    ones = np.ones(ncells)
    medium = make_medium(grid, ones, 0.5 * ones, 0.0 * ones)
    boundary = BoundarySpec(ConstantBoundary(1.0), ConstantBoundary(0.0))
    return StudyConfig(
        medium=medium,
        boundary=boundary,
        delta=delta,
        n_list=tuple(n_list),
        sample_count=sample_count,
        master_seed=master_seed,
        **overrides,
    )


def bias_benchmark_config(
    n_list=(4, 8, 16, 32),
    sample_count: int = 20000,
    master_seed: int = 20240901,
    ncells: int = 100,
    delta: float = 0.0125,
    **overrides,
) -> StudyConfig:
    """Strong-scattering source-driven problem for bias measurements.

    sigma_t = 1, sigma_s = 0.9, q = 1 with no inflow.  Removing the
    boundary term strips the lambda-independent noise channel, and the
    near-unity scattering ratio amplifies the second-order quadrature bias,
    so the cubic bias decay is resolvable above the Monte-Carlo noise floor
    at desk-scale sample counts.
    """
    grid = SpatialGrid.uniform(0.0, 1.0, ncells)
    ones = np.ones(ncells)
    medium = make_medium(grid, ones, 0.9 * ones, ones)
    boundary = BoundarySpec(ConstantBoundary(0.0), ConstantBoundary(0.0))
    return StudyConfig(
        medium=medium,
        boundary=boundary,
        delta=delta,
        n_list=tuple(n_list),
        sample_count=sample_count,
        master_seed=master_seed,
        **overrides,
    )


def _certified_solve(
    medium, boundary, delta, nodes, max_nodes, target, tol, max_iter
) -> tuple[ScalarFlux, int, float]:
    """Reference-quadrature solve, nodes doubled until the change certifies.

    Returns (flux, nodes used, certified gap); raises ReferenceNotConverged
    if the gap stays above ``target`` at ``max_nodes`` per half-interval.
    """
    quad = reference_quadrature(delta, nodes)
    phi, report = solve(medium, boundary, quad, tol, max_iter)
    if not report.converged:
        raise ReferenceNotConverged("reference solve hit the iteration cap")
    while 2 * nodes <= max_nodes:
        nodes *= 2
        quad = reference_quadrature(delta, nodes)
        refined, report = solve(medium, boundary, quad, tol, max_iter)
        if not report.converged:
            raise ReferenceNotConverged("reference solve hit the iteration cap")
        gap = weighted_norm_of(refined.values - phi.values, medium)
        phi = refined
        if gap <= target:
            return phi, nodes, gap
    raise ReferenceNotConverged(
        f"reference gap above {target:.3g} at {max_nodes} nodes/half"
    )


def _certified_reference(config: StudyConfig) -> tuple[ScalarFlux, int, float]:
    """Reference flux with a doubling certificate on the quadrature order."""
    return _certified_solve(
        config.medium,
        config.boundary,
        config.delta,
        config.ref_nodes,
        config.ref_max_nodes,
        config.ref_target,
        config.solver_tol,
        config.max_iter,
    )


def reference_solution(config: StudyConfig) -> ScalarFlux:
    """Certified high-order quadrature solve on the study's spatial mesh."""
    phi, _, _ = _certified_reference(config)
    return phi


def single_run_error_study(config: StudyConfig, jobs: int = 1) -> ErrorTable:
    """Mean single-sample error against the certified reference, per n."""
    if config.sample_count < 16:
        raise ConfigError("/study/samples", "single-run study needs at least 16 samples")
    ref, _, _ = _certified_reference(config)
    rows = []
    for n in config.n_list:
        start = time.perf_counter()
        partition = build_partition(n, config.delta, config.layout, config.ratio)

        def one(i: int) -> float:
            quad = rom_sample(partition, config.master_seed, i)
            phi, report = solve(
                config.medium, config.boundary, quad, config.solver_tol, config.max_iter
            )
            if not report.converged:
                raise ReferenceNotConverged(f"sample {i} hit the iteration cap")
            return weighted_norm_of(phi.values - ref.values, config.medium)

        errors = np.array(indexed_map(one, config.sample_count, jobs))
        rows.append(
            ErrorRow(
                n=n,
                estimate=float(errors.mean()),
                se=float(errors.std(ddof=1) / np.sqrt(errors.size)),
                samples=errors.size,
                flagged=False,
                wall_time=time.perf_counter() - start,
            )
        )
    return ErrorTable("single-run", tuple(rows))


def _jackknife_norm_se(phis: np.ndarray, ref: np.ndarray, weights: np.ndarray) -> float:
    """Jackknife SE of || mean(phis) - ref || over the sample axis."""
    count = phis.shape[0]
    # theta_i = || (sum - phi_i)/(count-1) - ref ||, expanded to avoid an
    # (samples, cells) temporary at large sample counts
    v = phis.sum(axis=0) - (count - 1) * ref
    vv = float(np.sum(v**2 * weights))
    cross = phis @ (weights * v)
    own = np.einsum("ij,j,ij->i", phis, weights, phis)
    theta = np.sqrt(np.maximum(vv - 2.0 * cross + own, 0.0)) / (count - 1)
    return float(np.sqrt((count - 1) / count * ((theta - theta.mean()) ** 2).sum()))


def bias_study(config: StudyConfig, jobs: int = 1, row_cap_power: float = 3.0) -> ErrorTable:
    """Error of the sample-mean flux per n, with a noise-floor guard.

    Samples are added in deterministic doubling stages until the jackknife
    SE drops below the configured fraction of the estimate (default a
    fifth) or the row's cap is hit; rows still noise-dominated at the cap
    are flagged and excluded from slope fits.  ``sample_count`` caps the
    largest n.  Resolving the n^-3 bias against the n^-3/2 single-run
    noise needs sample counts growing like n^3, so smaller n may draw up
    to sample_count * (n_max / n)**row_cap_power.
    """
    if config.sample_count < 2:
        raise ConfigError("/study/samples", "bias study needs at least 2 samples")
    ref, _, _ = _certified_reference(config)
    weights = config.medium.cell_weights
    initial = defaults.BIAS_INITIAL_SAMPLES
    fraction = defaults.BIAS_SE_FRACTION
    rows = []
    for n in config.n_list:
        start = time.perf_counter()
        partition = build_partition(n, config.delta, config.layout, config.ratio)
        cap = int(np.ceil(config.sample_count * (config.n_max / n) ** row_cap_power))

        def one(i: int) -> np.ndarray:
            quad = rom_sample(partition, config.master_seed, i)
            phi, report = solve(
                config.medium, config.boundary, quad, config.solver_tol, config.max_iter
            )
            if not report.converged:
                raise ReferenceNotConverged(f"sample {i} hit the iteration cap")
            return phi.values

        count = min(initial, cap)
        phis = np.empty((0, config.medium.ncells))
        while True:
            done = phis.shape[0]
            block = indexed_map(lambda i: one(done + i), count - done, jobs)
            phis = np.vstack([phis, np.stack(block)])
            estimate = weighted_norm_of(phis.mean(axis=0) - ref.values, config.medium)
            se = _jackknife_norm_se(phis, ref.values, weights)
            if se <= fraction * estimate or count >= cap:
                break
            count = min(2 * count, cap)
        rows.append(
            ErrorRow(
                n=n,
                estimate=estimate,
                se=se,
                samples=count,
                flagged=bool(se > fraction * estimate),
                wall_time=time.perf_counter() - start,
            )
        )
    return ErrorTable("bias", tuple(rows))


def dom_error_study(config: StudyConfig, rule: str = "midpoint") -> ErrorTable:
    """Deterministic-quadrature error against the same reference, per n."""
    if rule not in ("midpoint", "gauss"):
        raise ValueError(f"unknown quadrature rule {rule!r}")
    ref, _, _ = _certified_reference(config)
    rows = []
    for n in config.n_list:
        start = time.perf_counter()
        partition = build_partition(n, config.delta, config.layout, config.ratio)
        quad = dom_quadrature(partition, rule)
        phi, report = solve(
            config.medium, config.boundary, quad, config.solver_tol, config.max_iter
        )
        if not report.converged:
            raise ReferenceNotConverged(f"n={n} hit the iteration cap")
        rows.append(
            ErrorRow(
                n=n,
                estimate=weighted_norm_of(phi.values - ref.values, config.medium),
                se=0.0,
                samples=1,
                flagged=False,
                wall_time=time.perf_counter() - start,
            )
        )
    return ErrorTable(f"dom-{rule}", tuple(rows))


def fit_slope(table: ErrorTable) -> SlopeFit:
    """Ordinary least squares of log(estimate) on log(n) over unflagged rows."""
    rows = table.unflagged()
    if len(rows) < 3:
        raise TooFewPoints(f"slope fit needs >= 3 unflagged rows, got {len(rows)}")
    if any(r.estimate <= 0 for r in rows):
        raise ValueError("slope fit needs positive estimates")
    x = np.log([r.n for r in rows])
    y = np.log([r.estimate for r in rows])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r_sq = 1.0 if ss_tot == 0 else 1.0 - float((resid**2).sum()) / ss_tot
    return SlopeFit(float(slope), float(intercept), r_sq)


def regularization_study(
    medium: MediumProfile,
    boundary: BoundarySpec,
    delta_list,
    reference_delta: float,
    target: float | None = None,
    solver_tol: float = 1e-11,
    ref_nodes: int = defaults.REF_INITIAL_NODES,
    ref_max_nodes: int = defaults.REF_MAX_NODES,
    max_iter: int = defaults.SOLVER_MAX_ITER,
) -> RegularizationTable:
    """Truncation error against the stability bound, per truncation level.

    The near-untruncated model at reference_delta stands in for the full
    one.  For each delta the measured flux difference is checked against
    ||f|| / (1 - lambda) plus the certification allowance, where f is the
    consistency error of the truncated direction average evaluated on the
    reference angular flux.
    """
    delta_list = [float(d) for d in delta_list]
    if reference_delta >= min(delta_list):
        raise ValueError("reference_delta must be below every studied delta")
    if medium.lam == 0:
        raise PureAbsorber("regularization bound needs lambda > 0")
    if target is None:
        target = defaults.REGULARIZATION_TARGET

    ref_flux, ref_nodes_used, ref_gap = _certified_solve(
        medium, boundary, reference_delta, ref_nodes, ref_max_nodes, target,
        solver_tol, max_iter,
    )
    frozen_source = medium.sigma_s * ref_flux.values + medium.q

    def direction_average(delta: float, nodes: int) -> np.ndarray:
        quad = reference_quadrature(delta, nodes)
        avg, _ = batched_sweep(
            medium, quad.mus, frozen_source, inflow_values(boundary, quad.mus)
        )
        return quad.weights @ avg

    i_ref = direction_average(reference_delta, ref_nodes_used)
    rows = []
    for delta in delta_list:
        start = time.perf_counter()
        phi_d, nodes_d, gap_d = _certified_solve(
            medium, boundary, delta, ref_nodes, ref_max_nodes, target,
            solver_tol, max_iter,
        )
        error = weighted_norm_of(phi_d.values - ref_flux.values, medium)
        f = direction_average(delta, nodes_d) - i_ref
        f_norm = weighted_norm_of(f, medium)
        allowance = ref_gap + gap_d + 4 * solver_tol
        bound = f_norm / (1.0 - medium.lam) + allowance
        rows.append(
            RegularizationRow(
                delta=delta,
                error=error,
                f_norm=f_norm,
                bound=bound,
                satisfied=bool(error <= bound),
                wall_time=time.perf_counter() - start,
            )
        )
    return RegularizationTable(tuple(rows))

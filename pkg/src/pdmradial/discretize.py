"""Finite-difference discretization and tridiagonal eigensolvers.

Both orderings reduce to symmetric tridiagonal eigenproblems on a
uniform interior grid with the solution pinned to zero at r = 0 and
r = r_max:

* naive ordering: standard 3-point second difference plus diagonal
  W(r), as a generalized problem with diagonal weight 2 m(r);
* BenDaniel-Duke: conservative divergence-form stencil with midpoint
  flux coefficients, a plain symmetric problem whose eigenvalues are
  2E.

The single dim=1, ell=0 case is even-parity: its regular solution is
finite at the origin, so the grid carries an extra node at r = 0 with
a reflecting stencil row (symmetrized by a sqrt(2) similarity scaling).

Eigenvalue extraction follows the Sturm-bisection + inverse-iteration
approach for symmetric tridiagonals; the heavy lifting is delegated to
``scipy.linalg.eigh_tridiagonal`` (LAPACK stebz/stein, i.e. exactly
that algorithm), with residuals recomputed here against the assembled
operators.  ``sturm_count`` reimplements the eigenvalue-counting
recurrence independently for self-consistency checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ContinuumError
from .model import (
    ModelParams,
    Ordering,
    bdd_sturm_liouville_form,
    naive_closed_form_energy,
    naive_form,
    nu_label,
)

__all__ = [
    "RadialGrid",
    "TridiagonalOperator",
    "GeneralizedProblem",
    "Eigenpairs",
    "SpectrumLevel",
    "Spectrum",
    "build_grid",
    "assemble_naive",
    "assemble_bdd",
    "reduce_to_standard",
    "sturm_count",
    "lowest_eigenpairs",
    "solve_spectrum",
    "refine_and_extrapolate",
]

#: Default number of interior grid points.
DEFAULT_POINTS = 4000

#: Target exponent of the Gaussian tail at the box edge: the decaying
#: solution is ~ exp(-45) of its turning-point size at r_max.
TAIL_EXPONENT = 45.0

#: Largest box the heuristic will build before declaring the requested
#: level unresolvable (near-threshold states need ever larger boxes).
R_MAX_CAP = 50.0

#: Inverse-iteration residuals above RESIDUAL_FACTOR * tol mark a level
#: as not converged.
RESIDUAL_FACTOR = 1e3


@dataclass(frozen=True)
class RadialGrid:
    """Uniform interior grid on (0, r_max] with Dirichlet ends.

    ``num_interior`` points sit at r_i = i h, i = 1..M, with
    h = r_max/(M+1); the solution is pinned to zero at r = 0 and
    r = r_max.  With ``include_origin`` an extra node at r = 0 is
    carried (even-parity boundary; used only for dim=1, ell=0).
    """

    r_max: float
    num_interior: int
    include_origin: bool = False

    def __post_init__(self) -> None:
        if self.r_max <= 0 or not math.isfinite(self.r_max):
            raise ValueError("r_max must be positive and finite")
        if self.num_interior < 64:
            raise ValueError("grid needs at least 64 interior points")

    @property
    def h(self) -> float:
        return self.r_max / (self.num_interior + 1)

    @property
    def n_nodes(self) -> int:
        return self.num_interior + (1 if self.include_origin else 0)

    def nodes(self) -> np.ndarray:
        start = 0 if self.include_origin else 1
        return self.h * np.arange(start, self.num_interior + 1, dtype=float)

    def refined(self) -> "RadialGrid":
        """Same box with the spacing exactly halved (M -> 2M + 1)."""
        return RadialGrid(self.r_max, 2 * self.num_interior + 1, self.include_origin)

    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights for functions vanishing at both ends."""
        w = np.full(self.n_nodes, self.h)
        if self.include_origin:
            w[0] = 0.5 * self.h
        return w


def build_grid(
    params: ModelParams,
    k_levels: int,
    form=None,
    r_max: float | None = None,
    num_points: int | None = None,
) -> RadialGrid:
    """Choose a box and resolution able to hold the first k bound levels.

    The box must contain the classical turning point of the highest
    requested level plus enough forbidden region for the Gaussian tail
    exp(-kappa r**2 / 2), kappa = sqrt(omega**2 - 2 lam E_hat), to decay
    by exp(-45); E_hat is the closed-form naive estimate of level
    k_levels-1, used as a heuristic for both orderings.  Overrides pin
    r_max and/or the point count directly.  Deterministic.
    """
    if k_levels < 1:
        raise ValueError("k_levels must be >= 1")
    points = DEFAULT_POINTS if num_points is None else num_points
    if r_max is not None:
        return RadialGrid(r_max, points, include_origin=params.even_origin)

    e_top = naive_closed_form_energy(k_levels - 1, params)
    decay_sq = params.omega**2 - 2.0 * params.lam * e_top
    if params.lam > 0.0 and (e_top >= params.threshold or decay_sq <= 0.0):
        raise ContinuumError(
            f"level {k_levels - 1} likely in continuum: estimate {e_top:g} reaches "
            f"the threshold {params.threshold:g}"
        )
    kappa = math.sqrt(decay_sq)
    turning_sq = 2.0 * e_top / decay_sq
    box = math.sqrt(turning_sq + 2.0 * TAIL_EXPONENT / kappa)
    if params.lam > 0.0 and box > R_MAX_CAP:
        raise ContinuumError(
            f"level {k_levels - 1} likely in continuum: resolving it would need "
            f"r_max ~ {box:.1f} > {R_MAX_CAP:g} (estimate {e_top:g} crowds the "
            f"threshold {params.threshold:g})"
        )
    return RadialGrid(box, points, include_origin=params.even_origin)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal operator (shared off-diagonal)."""

    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "diag", np.asarray(self.diag, dtype=float))
        object.__setattr__(self, "off", np.asarray(self.off, dtype=float))
        if self.off.shape[0] != max(self.diag.shape[0] - 1, 0):
            raise ValueError("off-diagonal length must be len(diag) - 1")
        if not (np.all(np.isfinite(self.diag)) and np.all(np.isfinite(self.off))):
            raise ValueError("operator entries must be finite")

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y


@dataclass(frozen=True)
class GeneralizedProblem:
    """Pair (A, b) for A x = E b x with positive diagonal weight b."""

    op: TridiagonalOperator
    weight: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "weight", np.asarray(self.weight, dtype=float))
        if self.weight.shape[0] != self.op.n:
            raise ValueError("weight length must match the operator")
        if not np.all(self.weight > 0.0):
            raise ValueError("weight entries must be positive")


def _origin_symmetrize(diag: np.ndarray, off: np.ndarray) -> None:
    # The reflecting origin row couples to its neighbour with twice the
    # neighbour's coupling back; scaling the origin coordinate by
    # 1/sqrt(2) symmetrizes the matrix (off entry = geometric mean)
    # without moving eigenvalues.  Callers undo the scaling on
    # eigenvectors via origin_unscale.
    off[0] *= math.sqrt(2.0)


def origin_unscale(grid: RadialGrid, x: np.ndarray) -> np.ndarray:
    """Map a symmetrized-coordinate eigenvector to physical samples."""
    if not grid.include_origin:
        return x
    out = x.copy()
    out[0] *= math.sqrt(2.0)
    return out


def assemble_naive(grid: RadialGrid, params: ModelParams) -> GeneralizedProblem:
    """Discretize -R'' + W R = 2 m E R as (A, b) with b = 2 m(r)."""
    form = naive_form(params)
    r = grid.nodes()
    h2 = grid.h**2
    diag = 2.0 / h2 + form.standard_potential(r)
    off = np.full(grid.n_nodes - 1, -1.0 / h2)
    if grid.include_origin:
        _origin_symmetrize(diag, off)
    return GeneralizedProblem(TridiagonalOperator(diag, off), form.weight(r))


def assemble_bdd(grid: RadialGrid, params: ModelParams) -> TridiagonalOperator:
    """Conservative discretization of the BenDaniel-Duke divergence form.

    diag_i = (p_{i-1/2} + p_{i+1/2})/h**2 + U(r_i) and
    off_i = -p_{i+1/2}/h**2 with p evaluated at cell midpoints, so the
    operator is symmetric and discretely self-adjoint.  Its eigenvalues
    are 2E; the solvers halve them on output.
    """
    form = bdd_sturm_liouville_form(params)
    r = grid.nodes()
    h = grid.h
    p_left = form.inverse_mass(r - 0.5 * h)
    p_right = form.inverse_mass(r + 0.5 * h)
    if grid.include_origin:
        # Zero flux through r = 0 by symmetry: the origin cell sees the
        # right interface twice.
        p_left[0] = p_right[0]
    diag = (p_left + p_right) / h**2 + form.sl_potential(r)
    off = -p_right[:-1] / h**2
    if grid.include_origin:
        _origin_symmetrize(diag, off)
    return TridiagonalOperator(diag, off)


def reduce_to_standard(
    gp: GeneralizedProblem,
) -> tuple[TridiagonalOperator, Callable[[np.ndarray], np.ndarray]]:
    """Congruence-reduce (A, b) to a standard symmetric tridiagonal C.

    C = D^{-1/2} A D^{-1/2} with D = diag(b) keeps the eigenvalues of
    the pair; eigenvectors map back through x = y / sqrt(b).
    """
    b = gp.weight
    sqrt_b = np.sqrt(b)
    diag = gp.op.diag / b
    off = gp.op.off / (sqrt_b[:-1] * sqrt_b[1:])
    inv_sqrt_b = 1.0 / sqrt_b

    def back_map(y: np.ndarray) -> np.ndarray:
        return y * inv_sqrt_b if y.ndim == 1 else y * inv_sqrt_b[:, None]

    return TridiagonalOperator(diag, off), back_map


def sturm_count(op: TridiagonalOperator, sigma: float) -> int:
    """Number of eigenvalues of ``op`` strictly below ``sigma``.

    Sign count of the LDL^T pivots of (op - sigma I); the standard
    Sturm-sequence recurrence on the leading minors.
    """
    diag, off = op.diag, op.off
    pivmin = 1e-300 + 1e-30 * float(np.max(np.abs(off), initial=0.0)) ** 2
    d = diag[0] - sigma
    count = 1 if d < 0.0 else 0
    for i in range(1, op.n):
        if abs(d) < pivmin:
            d = -pivmin
        d = (diag[i] - sigma) - off[i - 1] * off[i - 1] / d
        if d < 0.0:
            count += 1
    return count


@dataclass(frozen=True)
class Eigenpairs:
    """Lowest eigenpairs of one (possibly generalized) problem."""

    values: np.ndarray
    vectors: np.ndarray  # columns, in the original (generalized) coordinates
    residuals: np.ndarray
    converged: np.ndarray

    def __len__(self) -> int:
        return self.values.shape[0]


def lowest_eigenpairs(
    op: TridiagonalOperator,
    k: int,
    tol: float | None = None,
    weight: np.ndarray | None = None,
) -> Eigenpairs:
    """k algebraically smallest eigenpairs, with residual bookkeeping.

    Bisection tolerance defaults to 1e-10 * max(1, |E|) per level.
    Residuals ||A x - E B x|| / ||x|| are evaluated on the original
    problem; levels whose residual exceeds 1e3 * tol are reported with
    ``converged=False`` (other levels are unaffected).
    """
    if not 1 <= k <= op.n:
        raise ValueError("need 1 <= k <= operator size")
    if weight is not None:
        problem = GeneralizedProblem(op, weight)
        reduced, back_map = reduce_to_standard(problem)
    else:
        reduced, back_map = op, lambda y: y

    values, vectors = eigh_tridiagonal(
        reduced.diag, reduced.off, select="i", select_range=(0, k - 1)
    )
    order = np.argsort(values)
    values = values[order]
    vectors = back_map(vectors[:, order])

    residuals = np.empty(k)
    converged = np.empty(k, dtype=bool)
    for j in range(k):
        x = vectors[:, j]
        # deterministic sign: largest-magnitude component positive
        if x[int(np.argmax(np.abs(x)))] < 0.0:
            x = -x
            vectors[:, j] = x
        bx = x if weight is None else weight * x
        res = np.linalg.norm(op.matvec(x) - values[j] * bx) / np.linalg.norm(x)
        residuals[j] = res
        tol_j = tol if tol is not None else 1e-10 * max(1.0, abs(values[j]))
        converged[j] = res <= RESIDUAL_FACTOR * tol_j
    return Eigenpairs(values, vectors, residuals, converged)


@dataclass(frozen=True)
class SpectrumLevel:
    """One bound level with its numerical provenance."""

    n: int
    energy: float
    nu: float
    residual: float
    trusted: bool
    converged: bool
    error_estimate: float | None = None


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenpairs of one (params, ordering, method, grid) solve."""

    params: ModelParams
    ordering: Ordering
    method: str
    grid: RadialGrid
    levels: tuple[SpectrumLevel, ...]
    vectors: np.ndarray | None = None  # physical R samples, columns
    quality_tags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        energies = [lv.energy for lv in self.levels]
        if any(b <= a for a, b in zip(energies, energies[1:])):
            raise ValueError("spectrum energies must be strictly ascending")

    @property
    def energies(self) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels])


def _trusted(params: ModelParams, energy: float, error_estimate: float) -> bool:
    thr = params.threshold
    if not math.isfinite(thr):
        return True
    margin = max(10.0 * error_estimate, 1e-6 * thr)
    return energy < thr - margin


def _quality_tags(params: ModelParams) -> tuple[str, ...]:
    return ("reduced-accuracy-boundary",) if params.reduced_accuracy_boundary else ()


def _solve_raw(params: ModelParams, ordering: Ordering, k: int, grid: RadialGrid) -> Eigenpairs:
    if ordering is Ordering.NAIVE:
        gp = assemble_naive(grid, params)
        pairs = lowest_eigenpairs(gp.op, k, weight=gp.weight)
        return pairs
    op = assemble_bdd(grid, params)
    pairs = lowest_eigenpairs(op, k)
    # operator eigenvalues are 2E
    return Eigenpairs(pairs.values / 2.0, pairs.vectors, pairs.residuals, pairs.converged)


def _normalized_radial(grid: RadialGrid, vectors: np.ndarray) -> np.ndarray:
    w = grid.trapezoid_weights()
    out = np.empty_like(vectors)
    for j in range(vectors.shape[1]):
        x = origin_unscale(grid, vectors[:, j])
        norm = math.sqrt(float(np.sum(w * x * x)))
        out[:, j] = x / norm
    return out


def solve_spectrum(params: ModelParams, ordering: Ordering, k: int, grid: RadialGrid) -> Spectrum:
    """Single-grid finite-difference solve (no error estimate)."""
    pairs = _solve_raw(params, ordering, k, grid)
    levels = tuple(
        SpectrumLevel(
            n=j,
            energy=float(pairs.values[j]),
            nu=nu_label(j, params),
            residual=float(pairs.residuals[j]),
            trusted=_trusted(params, float(pairs.values[j]), 0.0) and bool(pairs.converged[j]),
            converged=bool(pairs.converged[j]),
        )
        for j in range(k)
    )
    return Spectrum(
        params,
        ordering,
        "fd",
        grid,
        levels,
        vectors=_normalized_radial(grid, pairs.vectors),
        quality_tags=_quality_tags(params),
    )


def refine_and_extrapolate(
    params: ModelParams,
    ordering: Ordering,
    k: int,
    grid: RadialGrid | None = None,
    r_max: float | None = None,
    num_points: int | None = None,
) -> Spectrum:
    """Richardson-extrapolated finite-difference spectrum.

    Solves at spacings h and h/2 (same box) and combines per level as
    E* = E_{h/2} + (E_{h/2} - E_h)/3, the second-order elimination, with
    error estimate |E_{h/2} - E_h|/3.  Levels within a margin of
    max(10 * error, 1e-6 * threshold) of the continuum threshold are
    flagged untrusted: that close to the top of the potential the box,
    not the physics, pins the eigenvalue.
    """
    coarse_grid = grid or build_grid(params, k, r_max=r_max, num_points=num_points)
    fine_grid = coarse_grid.refined()
    coarse = _solve_raw(params, ordering, k, coarse_grid)
    fine = _solve_raw(params, ordering, k, fine_grid)

    levels = []
    for j in range(k):
        e_h = float(coarse.values[j])
        e_h2 = float(fine.values[j])
        e_star = e_h2 + (e_h2 - e_h) / 3.0
        err = abs(e_h2 - e_h) / 3.0
        conv = bool(coarse.converged[j] and fine.converged[j])
        levels.append(
            SpectrumLevel(
                n=j,
                energy=e_star,
                nu=nu_label(j, params),
                residual=float(fine.residuals[j]),
                trusted=_trusted(params, e_star, err) and conv,
                converged=conv,
                error_estimate=err,
            )
        )
    return Spectrum(
        params,
        ordering,
        "fd",
        fine_grid,
        tuple(levels),
        vectors=_normalized_radial(fine_grid, fine.vectors),
        quality_tags=_quality_tags(params),
    )

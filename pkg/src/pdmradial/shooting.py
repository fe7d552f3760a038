"""Independent eigenvalue oracle: Numerov shooting with node counting.

Works exclusively on the no-first-derivative shapes of the radial
equation (the naive generalized form and the BenDaniel-Duke Liouville
form), both of which read

    u''(r) = f(r) u(r),    f(r) = W(r) - 2 m(r) E,

so the same fourth-order integrator covers both orderings and shares
nothing with the finite-difference divergence-form path.

A sweep integrates outward from the origin (seeded with the regular
power-law behaviour r**s, s = ell + (dim-1)/2) and inward from r_max
(seeded with a WKB-like decay), matching at the outermost classical
turning point.  The interior node count of the outward solution indexes
eigenvalues; the scaled log-derivative mismatch at the matching point
is the quantity driven to zero.

Eigenvalue search is two-phase: bisection on the node count isolates
the target window, then Brent refinement of the mismatch pins the
eigenvalue.  Both phases are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.optimize import brentq

from .discretize import RadialGrid, Spectrum, SpectrumLevel
from .errors import (
    BracketError,
    IntegrationError,
    NotAnEigenvalueError,
    ShootingConvergenceError,
)
from .model import (
    EffectiveRadialForm,
    Formulation,
    ModelParams,
    Ordering,
    bdd_liouville_form,
    naive_closed_form_energy,
    naive_form,
    nu_label,
)

__all__ = [
    "ShootSpec",
    "SweepResult",
    "RadialSolution",
    "shooting_form",
    "numerov_sweep",
    "find_eigenvalue",
    "solve_levels",
    "eigenfunction",
]

_RENORM_CAP = 1e250
_MAX_BISECTIONS = 300


def shooting_form(params: ModelParams, ordering: Ordering) -> EffectiveRadialForm:
    """The no-first-derivative form used by the oracle for an ordering."""
    if ordering is Ordering.NAIVE:
        return naive_form(params)
    return bdd_liouville_form(params)


@dataclass
class ShootSpec:
    """A shooting problem: integrable form plus grid, with cached terms.

    The origin seed exponent s follows the regular branch of the
    reduced solution, s = ell + (dim-1)/2.  For s = 1 there is no
    centrifugal singularity and the outward sweep starts exactly at
    r = 0 with u(0) = 0; for s = 0 (dim=1, ell=0 only) the grid carries
    the origin node and the sweep starts with the even reflection
    u'(0) = 0.  No series correction terms beyond the power law are
    used; this is the documented accuracy limit for the eta = 0 case.
    """

    form: EffectiveRadialForm
    grid: RadialGrid
    w_nodes: np.ndarray = field(init=False, repr=False)
    b_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.form.formulation is Formulation.STURM_LIOUVILLE:
            raise ValueError("shooting needs a no-first-derivative form")
        if self.grid.include_origin != self.form.params.even_origin:
            raise ValueError("grid origin node must match the even-parity case")
        r = self.grid.nodes()
        self.w_nodes = np.asarray(self.form.standard_potential(r), dtype=float)
        self.b_nodes = np.asarray(self.form.weight(r), dtype=float)

    @property
    def params(self) -> ModelParams:
        return self.form.params

    @property
    def series_exponent(self) -> float:
        return self.params.radial_exponent

    def coefficient(self, energy: float) -> np.ndarray:
        """f(r) = W(r) - 2 m(r) E on the grid nodes."""
        return self.w_nodes - self.b_nodes * energy


@dataclass(frozen=True)
class SweepResult:
    node_count: int
    mismatch: float
    match_index: int
    tail_decaying: bool


@dataclass(frozen=True)
class RadialSolution:
    """Matched, normalized eigenfunction samples and their norms."""

    params: ModelParams
    grid: RadialGrid
    energy: float
    is_liouville: bool     # whether R = sqrt(m) v (bdd) rather than R = v
    v: np.ndarray          # Liouville variable, unit-weight normalized
    radial: np.ndarray     # R = sqrt(m) v (bdd) or v (naive)
    full_factor: np.ndarray  # r**(-(dim-1)/2) R, the full-space radial factor
    norm_unit: float       # integral of v**2 dr (== 1 after normalization)
    norm_mass: float       # integral of v**2 * 2m dr
    node_count: int
    mismatch: float

    def radial_norm_direct(self) -> float:
        """Integral of R**2 dr from the stored R samples."""
        w = self.grid.trapezoid_weights()
        return float(np.sum(w * self.radial**2))

    def radial_norm_via_mass(self) -> float:
        """Same quantity computed from v through the transformation."""
        w = self.grid.trapezoid_weights()
        if not self.is_liouville:
            return float(np.sum(w * self.v**2))
        r = self.grid.nodes()
        m = 1.0 + self.params.lam * r * r
        return float(np.sum(w * self.v**2 * m))

    def full_space_norm(self) -> float:
        """N-dimensional norm: integral of full_factor**2 r**(dim-1) dr.

        Equals radial_norm_direct by the factorization identity."""
        r = self.grid.nodes()
        w = self.grid.trapezoid_weights()
        return float(np.sum(w * self.full_factor**2 * r ** (self.params.dim - 1)))


@njit(cache=True)
def _sweep_outward(f, h2, u0, u1, i_match):
    """Propagate u'' = f u from node 0; return (nodes, u[im-1], u[im], u[im+1]).

    Counts strict sign changes over node pairs (0,1)..(im-1,im).
    Renormalizes the running pair against overflow, frozen over the
    last few steps so the returned triple shares one scale.
    """
    nodes = 0
    if (u0 > 0.0 and u1 < 0.0) or (u0 < 0.0 and u1 > 0.0):
        nodes += 1
    # positions already covered by the seeds (i_match is clipped >= 2,
    # so only the um1 cases can actually fire)
    um1 = 0.0
    um0 = 0.0
    up1 = 0.0
    if i_match - 1 == 0:
        um1 = u0
    elif i_match - 1 == 1:
        um1 = u1
    if i_match == 1:
        um0 = u1
    a_prev = 1.0 - (h2 / 12.0) * f[0]
    a_cur = 1.0 - (h2 / 12.0) * f[1]
    u_prev = u0
    u_cur = u1
    for i in range(1, i_match + 1):
        a_next = 1.0 - (h2 / 12.0) * f[i + 1]
        b_cur = 2.0 + (5.0 * h2 / 6.0) * f[i]
        u_next = (b_cur * u_cur - a_prev * u_prev) / a_next
        if i + 1 <= i_match:
            if (u_cur > 0.0 and u_next < 0.0) or (u_cur < 0.0 and u_next > 0.0):
                nodes += 1
            elif u_next == 0.0:
                nodes += 1
        if i + 1 == i_match - 1:
            um1 = u_next
        elif i + 1 == i_match:
            um0 = u_next
        elif i + 1 == i_match + 1:
            up1 = u_next
        mag = abs(u_next)
        if mag > _RENORM_CAP and i + 1 < i_match - 1:
            scale = 1.0 / mag
            u_cur *= scale
            u_next *= scale
        u_prev = u_cur
        u_cur = u_next
        a_prev = a_cur
        a_cur = a_next
    return nodes, um1, um0, up1


@njit(cache=True)
def _sweep_inward(f, h2, w_last, w_second, i_match):
    """Propagate u'' = f u from the outer edge down to i_match - 1."""
    n = f.shape[0]
    # positions already covered by the seeds (i_match is clipped
    # <= n - 3, so only the up1 cases can actually fire)
    um1 = 0.0
    um0 = 0.0
    up1 = 0.0
    if i_match + 1 == n - 1:
        up1 = w_last
    elif i_match + 1 == n - 2:
        up1 = w_second
    if i_match == n - 1:
        um0 = w_last
    elif i_match == n - 2:
        um0 = w_second
    if i_match - 1 == n - 2:
        um1 = w_second
    a_next = 1.0 - (h2 / 12.0) * f[n - 1]
    a_cur = 1.0 - (h2 / 12.0) * f[n - 2]
    u_next = w_last
    u_cur = w_second
    for i in range(n - 2, i_match - 1, -1):
        a_prev = 1.0 - (h2 / 12.0) * f[i - 1]
        b_cur = 2.0 + (5.0 * h2 / 6.0) * f[i]
        u_prev = (b_cur * u_cur - a_next * u_next) / a_prev
        if i - 1 == i_match + 1:
            up1 = u_prev
        elif i - 1 == i_match:
            um0 = u_prev
        elif i - 1 == i_match - 1:
            um1 = u_prev
        mag = abs(u_prev)
        if mag > _RENORM_CAP and i - 1 > i_match + 1:
            scale = 1.0 / mag
            u_cur *= scale
            u_prev *= scale
        u_next = u_cur
        u_cur = u_prev
        a_next = a_cur
        a_cur = a_prev
    return um1, um0, up1


@njit(cache=True)
def _fill_outward(f, h2, u0, u1, i_stop, out):
    """Outward propagation storing samples out[0..i_stop]; returns nodes."""
    nodes = 0
    out[0] = u0
    out[1] = u1
    if (u0 > 0.0 and u1 < 0.0) or (u0 < 0.0 and u1 > 0.0):
        nodes += 1
    a_prev = 1.0 - (h2 / 12.0) * f[0]
    a_cur = 1.0 - (h2 / 12.0) * f[1]
    for i in range(1, i_stop):
        a_next = 1.0 - (h2 / 12.0) * f[i + 1]
        b_cur = 2.0 + (5.0 * h2 / 6.0) * f[i]
        out[i + 1] = (b_cur * out[i] - a_prev * out[i - 1]) / a_next
        if (out[i] > 0.0 and out[i + 1] < 0.0) or (out[i] < 0.0 and out[i + 1] > 0.0):
            nodes += 1
        mag = abs(out[i + 1])
        if mag > _RENORM_CAP:
            scale = 1.0 / mag
            for j in range(i + 2):
                out[j] *= scale
        a_prev = a_cur
        a_cur = a_next
    return nodes


@njit(cache=True)
def _fill_inward(f, h2, w_last, w_second, i_start, out):
    """Inward propagation storing samples out[i_start..n-1]."""
    n = f.shape[0]
    out[n - 1] = w_last
    out[n - 2] = w_second
    a_next = 1.0 - (h2 / 12.0) * f[n - 1]
    a_cur = 1.0 - (h2 / 12.0) * f[n - 2]
    for i in range(n - 2, i_start, -1):
        a_prev = 1.0 - (h2 / 12.0) * f[i - 1]
        b_cur = 2.0 + (5.0 * h2 / 6.0) * f[i]
        out[i - 1] = (b_cur * out[i] - a_next * out[i + 1]) / a_prev
        mag = abs(out[i - 1])
        if mag > _RENORM_CAP:
            scale = 1.0 / mag
            for j in range(i - 1, n):
                out[j] *= scale
        a_next = a_cur
        a_cur = a_prev
    return out


def _match_index(f: np.ndarray) -> tuple[int, bool]:
    """Outermost classical turning point (last sign change of f).

    Returns the first node of the outer forbidden tail, clipped to keep
    a derivative stencil on both sides, plus whether the tail actually
    decays (f > 0 at the box edge).
    """
    n = f.shape[0]
    allowed = np.nonzero(f < 0.0)[0]
    if allowed.size == 0:
        idx = int(np.argmin(f))
    else:
        idx = int(allowed[-1]) + 1
    idx = min(max(idx, 2), n - 3)
    tail_decaying = bool(f[-1] > 0.0)
    return idx, tail_decaying


def _start_values(spec: ShootSpec, f: np.ndarray, h: float) -> tuple[float, float]:
    """First two outward samples selecting the regular origin branch."""
    s = spec.series_exponent
    h2 = h * h
    if s == 0.0:
        # even reflection across r = 0 (grid node 0 sits at the origin)
        u0 = 1.0
        u1 = (1.0 + (5.0 * h2 / 12.0) * f[0]) / (1.0 - (h2 / 12.0) * f[1])
        return u0, u1
    if s == 1.0:
        # no centrifugal singularity: start exactly at r = 0 with u = 0,
        # which suppresses the irregular branch to machine level
        u0 = 1.0
        u1 = (2.0 + (5.0 * h2 / 6.0) * f[0]) * u0 / (1.0 - (h2 / 12.0) * f[1])
        return u0, u1
    return 1.0, 2.0**s


def _inward_seed(f: np.ndarray, h: float) -> tuple[float, float]:
    f_bar = 0.5 * (f[-1] + f[-2])
    if f_bar <= 0.0:
        return 1.0, 1.0
    return 1.0, math.exp(min(math.sqrt(f_bar) * h, 200.0))


def _log_derivative(um1: float, um0: float, up1: float, f: np.ndarray, i: int, h: float) -> float:
    """u'/u at node i from the O(h^4) Numerov-consistent formula."""
    h2 = h * h
    du = ((1.0 - h2 * f[i + 1] / 6.0) * up1 - (1.0 - h2 * f[i - 1] / 6.0) * um1) / (2.0 * h)
    if um0 == 0.0:
        return math.inf if du >= 0.0 else -math.inf
    return du / um0


def numerov_sweep(spec: ShootSpec, energy: float) -> SweepResult:
    """One bidirectional integration at trial energy.

    Returns the interior node count of the outward solution and the
    scaled log-derivative mismatch at the matching point.  The mismatch
    is continuous and strictly decreasing in E between node transitions
    and crosses zero exactly at the matched eigenvalues.
    """
    f = spec.coefficient(energy)
    if not np.all(np.isfinite(f)):
        raise IntegrationError("integration failed: non-finite coefficient sample")
    h = spec.grid.h
    h2 = h * h
    i_match, tail_decaying = _match_index(f)
    u0, u1 = _start_values(spec, f, h)
    nodes, om1, om0, op1 = _sweep_outward(f, h2, u0, u1, i_match)
    w_last, w_second = _inward_seed(f, h)
    im1, im0, ip1 = _sweep_inward(f, h2, w_last, w_second, i_match)
    d_out = _log_derivative(om1, om0, op1, f, i_match, h)
    d_in = _log_derivative(im1, im0, ip1, f, i_match, h)
    if math.isinf(d_out) or math.isinf(d_in):
        mismatch = math.copysign(1e300, d_out - d_in) if d_out != d_in else 0.0
    else:
        scale = max(1.0, 0.5 * (abs(d_out) + abs(d_in)))
        mismatch = (d_out - d_in) / scale
    return SweepResult(nodes, mismatch, i_match, tail_decaying)


def _default_bracket(spec: ShootSpec, n_target: int) -> tuple[float, float]:
    p = spec.params
    lo = 1e-9 * p.omega
    estimate = naive_closed_form_energy(n_target, p)
    thr = p.threshold
    if math.isfinite(thr):
        hi = min(1.5 * estimate + p.omega, thr * (1.0 - 1e-12))
    else:
        hi = 1.5 * estimate + p.omega
    for _ in range(64):
        if numerov_sweep(spec, hi).node_count > n_target:
            return lo, hi
        if math.isfinite(thr):
            gap = thr - hi
            if gap <= 1e-12 * thr:
                break
            hi = thr - 0.25 * gap
        else:
            hi *= 2.0
    raise BracketError(
        f"no bound level with {n_target} nodes found below "
        f"{'the continuum threshold' if math.isfinite(thr) else 'the search cap'}"
    )


def find_eigenvalue(
    spec: ShootSpec,
    n_target: int,
    bracket: tuple[float, float] | None = None,
    tol: float = 1e-9,
) -> float:
    """Energy of the bound state with exactly ``n_target`` interior nodes.

    Bisection on the node count isolates the window around the target
    level; once both window ends carry the target count with opposite
    mismatch signs, Brent iteration refines the root to width <= tol.
    """
    if n_target < 0:
        raise ValueError("n_target must be >= 0")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if bracket is None:
        lo, hi = _default_bracket(spec, n_target)
    else:
        lo, hi = bracket
        if not lo < hi:
            raise BracketError("bracket must satisfy lo < hi")

    sweep_lo = numerov_sweep(spec, lo)
    sweep_hi = numerov_sweep(spec, hi)
    if not (sweep_lo.node_count <= n_target < sweep_hi.node_count):
        raise BracketError(
            f"bracket invalid: node counts ({sweep_lo.node_count}, "
            f"{sweep_hi.node_count}) do not span target {n_target}"
        )

    def above(sweep: SweepResult) -> bool:
        return sweep.node_count > n_target or (
            sweep.node_count == n_target and sweep.mismatch < 0.0
        )

    for _ in range(_MAX_BISECTIONS):
        lo_ready = sweep_lo.node_count == n_target and sweep_lo.mismatch > 0.0
        hi_ready = sweep_hi.node_count == n_target and sweep_hi.mismatch < 0.0
        if lo_ready and hi_ready:
            break
        if sweep_lo.mismatch == 0.0 and sweep_lo.node_count == n_target:
            return lo
        if sweep_hi.mismatch == 0.0 and sweep_hi.node_count == n_target:
            return hi
        mid = 0.5 * (lo + hi)
        sweep_mid = numerov_sweep(spec, mid)
        if above(sweep_mid):
            hi, sweep_hi = mid, sweep_mid
        else:
            lo, sweep_lo = mid, sweep_mid
        if hi - lo < max(1e-15, 1e-14 * abs(hi)):
            raise ShootingConvergenceError(
                f"no convergence: node-count window for level {n_target} "
                "collapsed before the mismatch changed sign"
            )
    else:
        raise ShootingConvergenceError(
            f"no convergence isolating level {n_target} within "
            f"{_MAX_BISECTIONS} bisections"
        )

    try:
        root = brentq(
            lambda e: numerov_sweep(spec, e).mismatch,
            lo,
            hi,
            xtol=tol,
            rtol=4.0 * np.finfo(float).eps,
            maxiter=200,
        )
    except (ValueError, RuntimeError) as exc:
        raise ShootingConvergenceError(f"no convergence refining level {n_target}: {exc}")
    return float(root)


def solve_levels(
    spec: ShootSpec,
    k: int,
    tol: float = 1e-9,
) -> Spectrum:
    """First k eigenvalues by repeated node-targeted searches."""
    params = spec.params
    levels = []
    for n in range(k):
        energy = find_eigenvalue(spec, n, tol=tol)
        residual = abs(numerov_sweep(spec, energy).mismatch)
        thr = params.threshold
        if math.isfinite(thr):
            margin = max(10.0 * tol, 1e-6 * thr)
            trusted = energy < thr - margin
        else:
            trusted = True
        levels.append(
            SpectrumLevel(
                n=n,
                energy=energy,
                nu=nu_label(n, params),
                residual=residual,
                trusted=trusted,
                converged=True,
                error_estimate=tol,
            )
        )
    tags = ("reduced-accuracy-boundary",) if params.reduced_accuracy_boundary else ()
    return Spectrum(params, spec.form.ordering, "shoot", spec.grid, tuple(levels), None, tags)


def eigenfunction(spec: ShootSpec, energy: float, mismatch_tol: float = 1e-3) -> RadialSolution:
    """Matched, continuous eigenfunction samples at a converged energy.

    The outward and inward solutions are joined at the matching point;
    a residual derivative mismatch beyond ``mismatch_tol`` raises
    ``NotAnEigenvalueError``.  The Liouville variable v is normalized to
    unit weight (integral v**2 dr = 1); both that norm and the
    mass-weighted norm, the reconstructed R, and the full-space radial
    factor are reported.
    """
    sweep = numerov_sweep(spec, energy)
    if not abs(sweep.mismatch) <= mismatch_tol:
        raise NotAnEigenvalueError(
            f"not an eigenvalue: derivative mismatch {sweep.mismatch:.3e} "
            f"exceeds {mismatch_tol:g}"
        )
    f = spec.coefficient(energy)
    h = spec.grid.h
    h2 = h * h
    n = f.shape[0]
    i_match = sweep.match_index
    u0, u1 = _start_values(spec, f, h)
    out = np.zeros(n)
    _fill_outward(f, h2, u0, u1, i_match + 1, out)
    inner = np.zeros(n)
    w_last, w_second = _inward_seed(f, h)
    _fill_inward(f, h2, w_last, w_second, i_match - 1, inner)
    if inner[i_match] == 0.0 or out[i_match] == 0.0:
        raise NotAnEigenvalueError("matched solution vanishes at the matching point")
    v = out.copy()
    v[i_match:] = inner[i_match:] * (out[i_match] / inner[i_match])

    weights = spec.grid.trapezoid_weights()
    norm_unit = float(np.sum(weights * v * v))
    v = v / math.sqrt(norm_unit)
    if v[int(np.argmax(np.abs(v)))] < 0.0:
        v = -v
    r = spec.grid.nodes()
    m = 1.0 + spec.params.lam * r * r
    norm_unit = float(np.sum(weights * v * v))
    norm_mass = float(np.sum(weights * v * v * 2.0 * m))
    if spec.form.formulation is Formulation.LIOUVILLE:
        radial = np.sqrt(m) * v
    else:
        radial = v.copy()
    exponent = -(spec.params.dim - 1) / 2.0
    full = np.empty_like(radial)
    positive = r > 0.0
    full[positive] = r[positive] ** exponent * radial[positive]
    if not np.all(positive):
        # origin node exists only for dim = 1, where the factor is r**0
        full[~positive] = radial[~positive]
    return RadialSolution(
        params=spec.params,
        grid=spec.grid,
        energy=energy,
        is_liouville=spec.form.formulation is Formulation.LIOUVILLE,
        v=v,
        radial=radial,
        full_factor=full,
        norm_unit=norm_unit,
        norm_mass=norm_mass,
        node_count=sweep.node_count,
        mismatch=sweep.mismatch,
    )

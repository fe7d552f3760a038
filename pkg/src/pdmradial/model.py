"""Physical model definitions for the deformed radial oscillator.

The system is a particle with position-dependent mass

    m(r) = 1 + lam * r**2

in the bounded oscillator potential

    V(r) = omega**2 * r**2 / (2 * m(r)),

reduced to a half-line radial problem in ``dim`` spatial dimensions.
Because the gradient does not commute with m(r), two Hermitian kinetic
orderings are in play and they define different Hamiltonians:

* ``naive``   -- (1/m) applied outside the full Laplacian,
* ``bdd``     -- the BenDaniel-Duke divergence form, div((1/m) grad).

All formulas use hbar = 1 and a unit mass scale, so energies are in
units of omega at lam = 0.  This module provides the parameter
container, the exact effective-potential forms of the radial equation
for each ordering, and the closed-form reference spectrum of the naive
ordering.  The solver modules consume these forms; nothing here
discretizes anything.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HBAR",
    "Ordering",
    "Formulation",
    "ModelParams",
    "EffectiveRadialForm",
    "eta",
    "eta_signed",
    "radial_exponent",
    "mass_eval",
    "potential_eval",
    "continuum_threshold",
    "naive_form",
    "bdd_sturm_liouville_form",
    "bdd_liouville_form",
    "naive_closed_form_energy",
    "closed_form_energy_at_nu",
    "nu_label",
]

#: Action scale.  Fixed; lam and omega absorb the physical scale.
HBAR = 1.0


class Ordering(enum.Enum):
    """Which Hermitian kinetic-operator ordering is in force."""

    NAIVE = "naive"
    BENDANIEL_DUKE = "bdd"


class Formulation(enum.Enum):
    """Algebraically equivalent shapes of the radial equation.

    NAIVE_GENERALIZED   -R'' + W R = 2 m E R          (weight 2m)
    STURM_LIOUVILLE     -(p R')' + U R = 2 E R        (p = 1/m, unit weight)
    LIOUVILLE           -v'' + W v = 2 m E v          (R = sqrt(m) v)
    """

    NAIVE_GENERALIZED = "naive-generalized"
    STURM_LIOUVILLE = "sturm-liouville"
    LIOUVILLE = "liouville"


def eta(ell: int, dim: int) -> float:
    """Centrifugal index |ell - 1 + dim/2| of the radial reduction.

    Enters the radial equation only through eta**2 - 1/4, the
    coefficient of the 1/r**2 term.  Exactly representable as a
    half-integer.
    """
    if ell < 0 or dim < 1:
        raise ValueError("require ell >= 0 and dim >= 1")
    return abs(eta_signed(ell, dim))


def eta_signed(ell: int, dim: int) -> float:
    """Signed centrifugal index ell - 1 + dim/2.

    The sign selects the physical small-r branch: the regular radial
    solution behaves like r**(eta_signed + 1/2).  The sign matters only
    for dim = 1, ell = 0, where the physical (even-parity) solution is
    finite at the origin instead of vanishing.
    """
    return ell - 1.0 + dim / 2.0


def radial_exponent(ell: int, dim: int) -> float:
    """Small-r power s of the regular reduced solution, R ~ r**s.

    s = ell + (dim - 1)/2.  Always >= 0; s = 0 only for dim = 1,
    ell = 0 (even-parity states, finite at the origin).
    """
    return ell + (dim - 1) / 2.0


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs and quantum numbers of one radial problem.

    Parameters
    ----------
    dim : int
        Spatial dimension N >= 1.
    ell : int
        Angular momentum quantum number, >= 0.
    lam : float
        Mass-deformation strength (1/length**2), >= 0.  Negative values
        are rejected: they make m(r) vanish at finite radius.
    omega : float
        Oscillator frequency, > 0.
    hbar : float
        Action scale; must remain 1 (kept as an explicit field so the
        convention is visible in run manifests).
    levels : int
        Number of bound states requested by default, >= 1.
    """

    dim: int
    ell: int
    lam: float
    omega: float
    hbar: float = HBAR
    levels: int = 6

    def __post_init__(self) -> None:
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ValueError("dim must be an integer >= 1")
        if not isinstance(self.ell, int) or self.ell < 0:
            raise ValueError("ell must be an integer >= 0")
        if not isinstance(self.levels, int) or self.levels < 1:
            raise ValueError("levels must be an integer >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0 (m(r) would vanish at r = 1/sqrt(-lambda))")
        if self.omega <= 0:
            raise ValueError("omega must be > 0")
        if self.hbar != HBAR:
            raise ValueError("hbar is fixed at 1; rescale lambda and omega instead")

    @property
    def eta(self) -> float:
        return eta(self.ell, self.dim)

    @property
    def eta_signed(self) -> float:
        return eta_signed(self.ell, self.dim)

    @property
    def radial_exponent(self) -> float:
        return radial_exponent(self.ell, self.dim)

    @property
    def even_origin(self) -> bool:
        """True when the regular solution is finite at r = 0 (dim=1, ell=0)."""
        return self.radial_exponent == 0.0

    @property
    def reduced_accuracy_boundary(self) -> bool:
        """True for the eta = 0 case (dim=2, ell=0), where the r**(1/2)
        behaviour at the origin degrades the uniform-grid convergence."""
        return self.eta == 0.0

    @property
    def threshold(self) -> float:
        return continuum_threshold(self)


def mass_eval(r, lam: float):
    """Mass profile and its first two derivatives at radius ``r``.

    Returns ``(m, m', m'')`` = ``(1 + lam r**2, 2 lam r, 2 lam)``.
    Accepts scalars or arrays.
    """
    r = np.asarray(r, dtype=float)
    m = 1.0 + lam * r * r
    mp = 2.0 * lam * r
    mpp = np.full_like(m, 2.0 * lam)
    if m.ndim == 0:
        return float(m), float(mp), float(mpp)
    return m, mp, mpp


def potential_eval(r, params: ModelParams):
    """Oscillator term omega**2 r**2 / (2 (1 + lam r**2)).

    Monotone nondecreasing in r and bounded above by omega**2/(2 lam)
    when lam > 0.
    """
    r = np.asarray(r, dtype=float)
    out = params.omega**2 * r * r / (2.0 * (1.0 + params.lam * r * r))
    return float(out) if out.ndim == 0 else out


def continuum_threshold(params: ModelParams) -> float:
    """Supremum of the potential: omega**2/(2 lam), or inf for lam = 0.

    Eigenvalues at or above this value cannot be bound states of the
    infinite-domain problem; finite-box levels found there are flagged
    untrusted by the solvers.
    """
    if params.lam == 0.0:
        return math.inf
    return params.omega**2 / (2.0 * params.lam)


def nu_label(n: int, params: ModelParams) -> float:
    """Principal label nu = 2n + ell + dim/2 of level n.

    This is the degeneracy label of the constant-mass oscillator and
    the argument of the naive closed form.
    """
    return 2.0 * n + params.ell + params.dim / 2.0


def _centrifugal(r: np.ndarray, eta2_minus_quarter: float) -> np.ndarray:
    # The coefficient is exactly 0.0 for eta = 1/2 (half-integers are
    # binary-exact); skip the division so r = 0 nodes stay finite.
    if eta2_minus_quarter == 0.0:
        return np.zeros_like(r)
    return eta2_minus_quarter / (r * r)


@dataclass(frozen=True)
class EffectiveRadialForm:
    """One exact algebraic shape of the radial eigenvalue equation.

    Term evaluators are vectorized over numpy arrays.  Which evaluators
    are meaningful depends on ``formulation``; asking for an undefined
    term raises ``ValueError``.
    """

    ordering: Ordering
    formulation: Formulation
    params: ModelParams

    @property
    def _eta2_minus_quarter(self) -> float:
        e = self.params.eta
        return e * e - 0.25

    def standard_potential(self, r):
        """W(r) of the no-first-derivative forms  -u'' + W u = 2 m E u."""
        if self.formulation is Formulation.STURM_LIOUVILLE:
            raise ValueError("Sturm-Liouville form has no standard potential; use sl_potential")
        r = np.asarray(r, dtype=float)
        p = self.params
        w = _centrifugal(r, self._eta2_minus_quarter) + p.omega**2 * r * r
        if self.formulation is Formulation.LIOUVILLE:
            m = 1.0 + p.lam * r * r
            w = w - p.lam * p.dim / m + 3.0 * p.lam**2 * r * r / (m * m)
        out = np.asarray(w, dtype=float)
        return float(out) if out.ndim == 0 else out

    def sl_potential(self, r):
        """U(r) of the divergence form  -(p R')' + U R = 2 E R."""
        if self.formulation is not Formulation.STURM_LIOUVILLE:
            raise ValueError("sl_potential is defined only for the Sturm-Liouville form")
        r = np.asarray(r, dtype=float)
        p = self.params
        m = 1.0 + p.lam * r * r
        u = (
            _centrifugal(r, self._eta2_minus_quarter) / m
            - p.lam * (p.dim - 1) / (m * m)
            + 2.0 * potential_eval(r, p)
        )
        out = np.asarray(u, dtype=float)
        return float(out) if out.ndim == 0 else out

    def inverse_mass(self, r):
        """p(r) = 1/m(r), the flux coefficient of the divergence form."""
        r = np.asarray(r, dtype=float)
        out = 1.0 / (1.0 + self.params.lam * r * r)
        return float(out) if out.ndim == 0 else out

    def weight(self, r):
        """Diagonal weight b(r) multiplying E: 2 m(r), or 1 for the
        Sturm-Liouville form."""
        r = np.asarray(r, dtype=float)
        if self.formulation is Formulation.STURM_LIOUVILLE:
            out = np.ones_like(r)
        else:
            out = 2.0 * (1.0 + self.params.lam * r * r)
        return float(out) if out.ndim == 0 else out

    def shooting_coefficient(self, r, energy: float):
        """f(r) = W(r) - b(r) E for the integrable forms  u'' = f u."""
        if self.formulation is Formulation.STURM_LIOUVILLE:
            raise ValueError("shooting requires a no-first-derivative form")
        return self.standard_potential(r) - self.weight(r) * energy


def naive_form(params: ModelParams) -> EffectiveRadialForm:
    """Radial equation of the naive ordering, -R'' + W R = 2 m E R.

    W(r) = (eta**2 - 1/4)/r**2 + omega**2 r**2; the mass enters only
    through the weight 2 m(r).  Uses the exact identity
    2 m(r) V(r) = omega**2 r**2, so W is independent of lam.
    """
    return EffectiveRadialForm(Ordering.NAIVE, Formulation.NAIVE_GENERALIZED, params)


def bdd_sturm_liouville_form(params: ModelParams) -> EffectiveRadialForm:
    """BenDaniel-Duke equation in divergence form, -( (1/m) R' )' + U R = 2 E R.

    U(r) = (eta**2 - 1/4)/(m r**2) - lam (dim - 1)/m**2 + 2 V(r), with
    unit weight.  This is the natural shape for a conservative
    finite-difference discretization.
    """
    return EffectiveRadialForm(Ordering.BENDANIEL_DUKE, Formulation.STURM_LIOUVILLE, params)


def bdd_liouville_form(params: ModelParams) -> EffectiveRadialForm:
    """BenDaniel-Duke equation with the first derivative removed.

    Substituting R = sqrt(m) v gives  -v'' + W v = 2 m E v  with

        W(r) = (eta**2 - 1/4)/r**2 + omega**2 r**2
               - lam dim / m + 3 lam**2 r**2 / m**2.

    At lam = 0 this coincides with the naive form: the orderings are
    identical at constant mass.
    """
    return EffectiveRadialForm(Ordering.BENDANIEL_DUKE, Formulation.LIOUVILLE, params)


def form_for(params: ModelParams, ordering: Ordering, formulation: Formulation) -> EffectiveRadialForm:
    """Dispatch helper used by the solvers."""
    if ordering is Ordering.NAIVE:
        if formulation is not Formulation.NAIVE_GENERALIZED:
            raise ValueError("the naive ordering is handled in its generalized form")
        return naive_form(params)
    if formulation is Formulation.STURM_LIOUVILLE:
        return bdd_sturm_liouville_form(params)
    if formulation is Formulation.LIOUVILLE:
        return bdd_liouville_form(params)
    raise ValueError(f"unsupported combination {ordering} / {formulation}")


def closed_form_energy_at_nu(nu: float, params: ModelParams) -> float:
    """Naive-ordering energy at principal label nu.

    Derivation: with W independent of lam, the naive equation at energy
    E is an oscillator with effective frequency Omega**2 = omega**2 -
    2 lam E, whose spectrum is E = Omega nu.  Self-consistency gives a
    quadratic with positive root

        E = nu sqrt(omega**2 + lam**2 nu**2) - lam nu**2,

    evaluated here in the cancellation-free quotient form.  Strictly
    increasing in nu and bounded above by omega**2/(2 lam) for lam > 0.
    This is a derived reference, validated against the shooting oracle
    in the test suite before being trusted.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    lam, omega = params.lam, params.omega
    root = math.sqrt(omega * omega + lam * lam * nu * nu)
    return nu * omega * omega / (root + lam * nu)


def naive_closed_form_energy(n: int, params: ModelParams) -> float:
    """Closed-form naive-ordering energy of level n (nu = 2n + ell + dim/2)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return closed_form_energy_at_nu(nu_label(n, params), params)

"""Exception types shared across the package."""

from __future__ import annotations


class PdmError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(PdmError):
    """Invalid configuration file entry or command-line argument."""


class ContinuumError(PdmError):
    """A requested level has no usable bound-state estimate below the
    continuum threshold (or would need an impractically large box)."""


class BracketError(PdmError):
    """Shooting bracket does not span the requested node count."""


class ShootingConvergenceError(PdmError):
    """Eigenvalue refinement failed to converge within the iteration cap."""


class IntegrationError(PdmError):
    """The shooting coefficient became non-finite at a grid node."""


class NotAnEigenvalueError(PdmError):
    """Matched solution has a discontinuous derivative beyond tolerance."""


class NoDegeneratePairsError(PdmError):
    """The requested principal label admits a single (n, ell) pair."""


class ThresholdUnboundedError(PdmError):
    """Accumulation analysis requested for lam = 0 (no finite threshold)."""

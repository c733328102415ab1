"""Discretized probability distributions over a hidden phase on [0, 2*pi).

The central object is :class:`PhaseDistribution`: either a density sampled
on a uniform periodic grid, or an exact point mass.  Sequential transverse
spin measurements multiply the density by Bernoulli likelihood factors
``(1 + eta*cos(lambda - phi)) / 2`` and renormalize; quadrature uses the
periodic trapezoidal rule, which is exact for trigonometric polynomials of
degree below the grid size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, TextIO

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateUpdateError,
    ImpossibleOutcomeError,
)

__all__ = [
    "TWO_PI",
    "DEFAULT_GRID_SIZE",
    "wrap_angle",
    "wrap_signed",
    "circular_distance",
    "circular_midpoint",
    "PhaseGrid",
    "PhaseDistribution",
    "CircularStats",
    "uniform",
    "delta",
    "from_weights",
    "update",
    "prob_plus",
    "prob_minus",
    "sample_outcome",
    "first_moment",
    "circular_stats",
    "normalization_error",
    "write_density_csv",
]

TWO_PI = 2.0 * math.pi

# Exact quadrature for up to ~4000 sequential likelihood factors while
# keeping a 1/sqrt(P) posterior width resolved up to P ~ 1e5.
DEFAULT_GRID_SIZE = 4096

MIN_GRID_SIZE = 16

# Concentration below which the mean direction is reported as undefined.
CONCENTRATION_FLOOR = 1e-9


def wrap_angle(angle: float) -> float:
    """Reduce an angle in radians to [0, 2*pi)."""
    reduced = math.fmod(float(angle), TWO_PI)
    if reduced < 0.0:
        reduced += TWO_PI
    if reduced >= TWO_PI:  # fmod rounding at the boundary
        reduced -= TWO_PI
    return reduced


def wrap_signed(angle: float) -> float:
    """Reduce an angle in radians to (-pi, pi]."""
    reduced = wrap_angle(angle)
    if reduced > math.pi:
        reduced -= TWO_PI
    return reduced


def circular_distance(a: float, b: float) -> float:
    """Shortest arc length between two angles, in [0, pi]."""
    return abs(wrap_signed(a - b))


def circular_midpoint(a: float, b: float) -> float:
    """Midpoint of the shorter arc between two angles, in (-pi, pi]."""
    return wrap_signed(a + 0.5 * wrap_signed(b - a))


class PhaseGrid:
    """Uniform periodic grid of ``size`` nodes on [0, 2*pi).

    Node k sits at ``2*pi*k/size``.  The node cosines and sines are
    precomputed once so that per-measurement likelihoods reduce to two
    scalar-vector products instead of a transcendental evaluation.
    """

    __slots__ = ("size", "nodes", "cos", "sin")

    def __init__(self, size: int):
        if not isinstance(size, (int, np.integer)):
            raise ConfigurationError(f"grid size must be an integer, got {size!r}")
        size = int(size)
        if size < MIN_GRID_SIZE or size % 2 != 0:
            raise ConfigurationError(
                f"grid size must be an even integer >= {MIN_GRID_SIZE}, got {size}"
            )
        self.size = size
        nodes = TWO_PI * np.arange(size) / size
        nodes.flags.writeable = False
        self.nodes = nodes
        self.cos = np.cos(nodes)
        self.sin = np.sin(nodes)
        self.cos.flags.writeable = False
        self.sin.flags.writeable = False

    def integrate(self, values: np.ndarray) -> float:
        """Periodic trapezoidal quadrature of node ``values`` over [0, 2*pi).

        Implemented as ``2*pi * mean(values)`` so that integrating the
        constant 1 returns ``2*pi`` exactly for any grid size.
        """
        return TWO_PI * float(np.mean(values))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PhaseGrid) and other.size == self.size

    def __hash__(self) -> int:
        return hash(("PhaseGrid", self.size))

    def __repr__(self) -> str:
        return f"PhaseGrid(size={self.size})"


class CircularStats(NamedTuple):
    """First trigonometric moment summary of a phase distribution."""

    mean_direction: float  # radians in (-pi, pi]; nan when undefined
    concentration: float  # |first moment|, in [0, 1]


@dataclass(frozen=True, eq=False)
class PhaseDistribution:
    """Probability distribution of the hidden relative phase.

    Either a grid density (``weights`` holds node densities in 1/radian,
    normalized so the trapezoidal integral is 1) or an exact point mass at
    ``delta_angle`` (``weights is None``).  Instances are immutable;
    :func:`update` returns a new distribution.
    """

    grid: PhaseGrid
    weights: np.ndarray | None = None
    delta_angle: float | None = None

    def __post_init__(self):
        if (self.weights is None) == (self.delta_angle is None):
            raise ConfigurationError(
                "exactly one of weights and delta_angle must be provided"
            )
        if self.weights is not None and self.weights.flags.writeable:
            raise ConfigurationError(
                "weights must be a read-only array; build distributions via "
                "uniform(), delta(), from_weights() or update()"
            )

    @property
    def is_delta(self) -> bool:
        return self.delta_angle is not None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PhaseDistribution):
            return NotImplemented
        if self.grid != other.grid or self.is_delta != other.is_delta:
            return False
        if self.is_delta:
            return self.delta_angle == other.delta_angle
        return bool(np.array_equal(self.weights, other.weights))


def _freeze(weights: np.ndarray) -> np.ndarray:
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    weights.flags.writeable = False
    return weights


def uniform(grid_size: int = DEFAULT_GRID_SIZE) -> PhaseDistribution:
    """Flat prior: density 1/(2*pi) at every node."""
    grid = grid_size if isinstance(grid_size, PhaseGrid) else PhaseGrid(grid_size)
    weights = _freeze(np.full(grid.size, 1.0 / TWO_PI))
    return PhaseDistribution(grid=grid, weights=weights)


def delta(lambda0: float, grid_size: int = DEFAULT_GRID_SIZE) -> PhaseDistribution:
    """Exact point mass at phase ``lambda0`` (reduced to [0, 2*pi)).

    The point mass is a distinct variant, not a narrow numerical peak:
    quadrature operations evaluate integrands at ``lambda0`` exactly.
    """
    grid = grid_size if isinstance(grid_size, PhaseGrid) else PhaseGrid(grid_size)
    return PhaseDistribution(grid=grid, delta_angle=wrap_angle(lambda0))


def from_weights(grid: PhaseGrid | int, weights) -> PhaseDistribution:
    """Build a grid distribution from raw non-negative node values.

    The values are validated (finite, non-negative, not all zero) and
    renormalized so the trapezoidal integral equals 1.
    """
    if not isinstance(grid, PhaseGrid):
        grid = PhaseGrid(grid)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (grid.size,):
        raise ConfigurationError(
            f"weights must have shape ({grid.size},), got {weights.shape}"
        )
    if not np.all(np.isfinite(weights)):
        raise ConfigurationError("weights must be finite")
    if np.any(weights < 0.0):
        raise ConfigurationError("weights must be non-negative")
    norm = grid.integrate(weights)
    if norm <= 0.0:
        raise ConfigurationError("weights must not be identically zero")
    return PhaseDistribution(grid=grid, weights=_freeze(weights / norm))


def _check_eta(eta: int) -> int:
    if eta not in (1, -1):
        raise ConfigurationError(f"outcome must be +1 or -1, got {eta!r}")
    return int(eta)


def _likelihood_grid(d: PhaseDistribution, phi: float, eta: int) -> np.ndarray:
    # (1 + eta*cos(lambda - phi)) / 2 on the nodes, via the cached node
    # cosines: cos(lambda - phi) = cos(phi)*cos(lambda) + sin(phi)*sin(lambda).
    grid = d.grid
    c = math.cos(phi) * grid.cos + math.sin(phi) * grid.sin
    factor = 0.5 * (1.0 + eta * c)
    # rounding can push an exact zero to -1e-17; densities stay >= 0
    np.maximum(factor, 0.0, out=factor)
    return factor


def _likelihood_point(lambda0: float, phi: float, eta: int) -> float:
    value = 0.5 * (1.0 + eta * math.cos(lambda0 - phi))
    return max(value, 0.0)


def update(d: PhaseDistribution, phi: float, eta: int) -> PhaseDistribution:
    """Posterior after observing outcome ``eta`` along axis angle ``phi``.

    The density is multiplied by ``(1 + eta*cos(lambda - phi)) / 2`` and
    renormalized.  Point masses are unchanged (reweighting a point mass is
    a no-op) unless the likelihood at the point is exactly zero, which
    raises :class:`ImpossibleOutcomeError`.

    Raises
    ------
    DegenerateUpdateError
        If the updated density vanishes at every node.
    """
    eta = _check_eta(eta)
    phi = wrap_angle(phi)
    if d.is_delta:
        if _likelihood_point(d.delta_angle, phi, eta) == 0.0:
            raise ImpossibleOutcomeError(
                f"outcome {eta:+d} along phi={phi!r} has zero likelihood at "
                f"the point mass {d.delta_angle!r}"
            )
        return d
    posterior = d.weights * _likelihood_grid(d, phi, eta)
    norm = d.grid.integrate(posterior)
    if norm <= 0.0:
        raise DegenerateUpdateError(
            "posterior density is identically zero on the grid"
        )
    return PhaseDistribution(grid=d.grid, weights=_freeze(posterior / norm))


def prob_plus(d: PhaseDistribution, phi: float) -> float:
    """Probability of outcome +1 along axis angle ``phi``.

    Evaluates ``integral of g(lambda) * (1 + cos(lambda - phi))/2`` by the
    grid quadrature (exact at the point for point masses); the result is
    clamped to [0, 1].
    """
    phi = wrap_angle(phi)
    if d.is_delta:
        p = _likelihood_point(d.delta_angle, phi, +1)
    else:
        p = d.grid.integrate(d.weights * _likelihood_grid(d, phi, +1))
    return min(max(p, 0.0), 1.0)


def prob_minus(d: PhaseDistribution, phi: float) -> float:
    """Probability of outcome -1; complements :func:`prob_plus` exactly."""
    return 1.0 - prob_plus(d, phi)


def sample_outcome(d: PhaseDistribution, phi: float, rng: np.random.Generator) -> int:
    """Draw one outcome (+1 or -1) along axis angle ``phi``.

    Consumes exactly one uniform variate from ``rng``, so fixed seeds give
    reproducible outcome sequences.
    """
    return 1 if rng.random() < prob_plus(d, phi) else -1


def first_moment(d: PhaseDistribution) -> complex:
    """First trigonometric moment ``integral of exp(i*lambda) g(lambda)``."""
    if d.is_delta:
        return complex(math.cos(d.delta_angle), math.sin(d.delta_angle))
    grid = d.grid
    re = grid.integrate(d.weights * grid.cos)
    im = grid.integrate(d.weights * grid.sin)
    return complex(re, im)


def circular_stats(d: PhaseDistribution) -> CircularStats:
    """Mean direction and concentration of the distribution.

    The mean direction is ``arg`` of the first moment, in (-pi, pi]; the
    concentration is its modulus, in [0, 1].  When the concentration is
    below 1e-9 the direction is undefined and reported as ``nan``.
    """
    moment = first_moment(d)
    concentration = min(abs(moment), 1.0)
    if concentration < CONCENTRATION_FLOOR:
        return CircularStats(math.nan, concentration)
    return CircularStats(math.atan2(moment.imag, moment.real), concentration)


def normalization_error(d: PhaseDistribution) -> float:
    """Absolute deviation of the quadrature mass from 1 (0 for point masses)."""
    if d.is_delta:
        return 0.0
    return abs(d.grid.integrate(d.weights) - 1.0)


def write_density_csv(d: PhaseDistribution, stream: TextIO) -> None:
    """Write the density as CSV rows ``lambda,density`` at full precision.

    Point masses have no grid density and are rejected.
    """
    if d.is_delta:
        raise ConfigurationError(
            "point-mass distribution has no grid density to export"
        )
    stream.write("lambda,density\n")
    for node, weight in zip(d.grid.nodes, d.weights):
        stream.write(f"{node:.17g},{weight:.17g}\n")

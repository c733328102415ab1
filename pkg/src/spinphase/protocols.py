"""Measurement strategies and phase estimators.

The counting estimator converts the +1 fraction of a fixed-axis series
into an unsigned angle; a second series along the perpendicular axis
resolves the sign.  A running trajectory's posterior also provides a
direct circular-mean estimate, and a perpendicular-axis refinement loop
sharpens an existing estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import ALICE, BOB, Trajectory
from .errors import ConfigurationError, DirectionUndefinedError, EmptySeriesError
from .phase_dist import (
    PhaseDistribution,
    circular_distance,
    circular_midpoint,
    circular_stats,
    wrap_signed,
)

__all__ = [
    "SeriesResult",
    "SignedEstimate",
    "magnitude_estimate",
    "combine_series",
    "two_stage_estimate",
    "confirmation_run",
    "posterior_estimate",
    "adaptive_refinement",
]

# Concentration below which the posterior mean is considered undefined.
POSTERIOR_CONCENTRATION_MIN = 1e-6


@dataclass(frozen=True)
class SeriesResult:
    """Counts from one fixed-axis measurement series."""

    phi: float
    n_plus: int
    n_total: int

    def __post_init__(self):
        if not 0 <= self.n_plus <= self.n_total:
            raise ConfigurationError(
                f"need 0 <= n_plus <= n_total, got {self.n_plus}/{self.n_total}"
            )

    @property
    def fraction(self) -> float:
        if self.n_total == 0:
            raise EmptySeriesError("series holds no measurements")
        return self.n_plus / self.n_total

    def to_dict(self) -> dict:
        return {"phi": self.phi, "n_plus": self.n_plus, "n_total": self.n_total}


@dataclass(frozen=True)
class SignedEstimate:
    """Sign-resolved phase estimate with the evidence that produced it."""

    lambda_hat: float  # radians in (-pi, pi]
    magnitude: float  # unsigned angle from the primary series, in [0, pi]
    sign_series: SeriesResult
    candidates: tuple[float, ...]
    first_series: SeriesResult | None = None

    def to_dict(self) -> dict:
        return {
            "lambda_hat": self.lambda_hat,
            "magnitude": self.magnitude,
            "candidates": list(self.candidates),
            "sign_series": self.sign_series.to_dict(),
            "first_series": None
            if self.first_series is None
            else self.first_series.to_dict(),
        }


def magnitude_estimate(series: SeriesResult) -> float:
    """Unsigned angle between the polarization and the series axis.

    ``2 * arccos(sqrt(n_plus / n_total))``, in [0, pi].  A series with no
    measurements raises :class:`EmptySeriesError`.
    """
    fraction = series.fraction
    return 2.0 * math.acos(math.sqrt(fraction))


def combine_series(series1: SeriesResult, series2: SeriesResult) -> SignedEstimate:
    """Sign-resolved estimate from two fixed-axis series.

    Each series constrains the polarization to its axis plus or minus the
    unsigned magnitude, giving two candidate angles per series.  The
    estimate is the circular midpoint of the closest pair across the two
    candidate sets.  Exactly equidistant pairings (exactly ambiguous data)
    prefer the pair whose midpoint falls in (-pi, 0], then the smaller
    midpoint.
    """
    m1 = magnitude_estimate(series1)
    m2 = magnitude_estimate(series2)
    candidates_1 = (wrap_signed(series1.phi + m1), wrap_signed(series1.phi - m1))
    candidates_2 = (wrap_signed(series2.phi + m2), wrap_signed(series2.phi - m2))
    best_key = None
    best_mid = 0.0
    considered = []
    for c1 in candidates_1:
        for c2 in candidates_2:
            mid = circular_midpoint(c1, c2)
            key = (circular_distance(c1, c2), 0 if mid <= 0.0 else 1, mid)
            considered.append(mid)
            if best_key is None or key < best_key:
                best_key = key
                best_mid = mid
    return SignedEstimate(
        lambda_hat=best_mid,
        magnitude=m1,
        sign_series=series2,
        candidates=tuple(considered),
        first_series=series1,
    )


def two_stage_estimate(
    traj: Trajectory,
    p1: int,
    p2: int,
    base_angle: float = 0.0,
    party: str = ALICE,
) -> SignedEstimate:
    """Estimate the phase with two perpendicular measurement series.

    Measures ``p1`` spins along ``base_angle`` and ``p2`` along
    ``base_angle + pi/2`` on the running trajectory, then resolves the
    sign with :func:`combine_series`.
    """
    if p1 < 1 or p2 < 1:
        raise ConfigurationError(
            f"both series need at least one measurement, got {p1} and {p2}"
        )
    phi1 = base_angle
    phi2 = base_angle + math.pi / 2.0
    series1 = SeriesResult(
        phi=phi1, n_plus=traj.measure_series(phi1, p1, party), n_total=p1
    )
    series2 = SeriesResult(
        phi=phi2, n_plus=traj.measure_series(phi2, p2, party), n_total=p2
    )
    return combine_series(series1, series2)


def confirmation_run(
    traj: Trajectory, lambda_hat: float, p: int, party: str = BOB
) -> SeriesResult:
    """Measure ``p`` spins along an established estimate.

    On a sharp posterior nearly every outcome comes out +1, confirming the
    estimate while transferring almost no angular momentum.
    """
    if p < 1:
        raise ConfigurationError(f"confirmation needs at least 1 measurement, got {p}")
    n_plus = traj.measure_series(lambda_hat, p, party)
    return SeriesResult(phi=wrap_signed(lambda_hat), n_plus=n_plus, n_total=p)


def posterior_estimate(d: PhaseDistribution) -> float:
    """Circular mean of the phase distribution, in (-pi, pi].

    Raises :class:`DirectionUndefinedError` when the concentration is
    below 1e-6 (nearly flat distribution).
    """
    stats = circular_stats(d)
    if not stats.concentration >= POSTERIOR_CONCENTRATION_MIN:
        raise DirectionUndefinedError(
            f"mean direction undefined: concentration {stats.concentration:.3e} "
            f"< {POSTERIOR_CONCENTRATION_MIN}"
        )
    return stats.mean_direction


def adaptive_refinement(
    traj: Trajectory,
    lambda_hat: float,
    rounds: int,
    batch: int,
    party: str = ALICE,
) -> SignedEstimate:
    """Sharpen an estimate by measuring perpendicular to it.

    Each round measures ``batch`` spins along ``lambda_hat + pi/2`` and
    applies the signed correction ``arcsin(2*n_plus/batch - 1)``, which
    vanishes in expectation once the estimate is exact.
    """
    if rounds < 1:
        raise ConfigurationError(f"rounds must be >= 1, got {rounds}")
    if batch < 1:
        raise ConfigurationError(f"batch must be >= 1, got {batch}")
    estimate = wrap_signed(lambda_hat)
    history = []
    correction = 0.0
    series = None
    for _ in range(rounds):
        axis = estimate + math.pi / 2.0
        n_plus = traj.measure_series(axis, batch, party)
        series = SeriesResult(phi=axis, n_plus=n_plus, n_total=batch)
        balance = min(max(2.0 * n_plus / batch - 1.0, -1.0), 1.0)
        correction = math.asin(balance)
        estimate = wrap_signed(estimate + correction)
        history.append(estimate)
    return SignedEstimate(
        lambda_hat=estimate,
        magnitude=abs(correction),
        sign_series=series,
        candidates=tuple(history),
    )

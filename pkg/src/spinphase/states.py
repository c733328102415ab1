"""Initial many-body spin states and their phase-distribution priors.

Three state families are supported: a two-mode number state (definite
particle counts in the + and - spin modes, hidden phase uniformly
distributed), a fully polarized phase state (point-mass phase), and an
all-or-nothing superposition whose z-axis outcomes are perfectly
correlated.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    BudgetError,
    ConfigurationError,
    UnbalancedPopulationsWarning,
    UnsupportedStateError,
)
from .phase_dist import (
    DEFAULT_GRID_SIZE,
    PhaseDistribution,
    delta,
    uniform,
    wrap_angle,
)

__all__ = [
    "DoubleFock",
    "PhaseState",
    "Ghz",
    "InitialState",
    "BudgetGuard",
    "DEFAULT_BUDGET_RATIO",
    "prior_distribution",
    "ghz_trajectory",
]

# Keeps the measurement count small against the particle number so the
# classical-phase description of outcome statistics stays at percent-level
# accuracy (validated against the exact few-body oracle).
DEFAULT_BUDGET_RATIO = 0.1


def _check_count(value: int, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < 1:
        raise ConfigurationError(f"{name} must be >= 1, got {value}")
    return value


@dataclass(frozen=True)
class DoubleFock:
    """Two-mode number state with ``n_alpha`` + spins and ``n_beta`` - spins.

    Unequal populations are allowed (the flat phase prior is unchanged) but
    flagged with :class:`UnbalancedPopulationsWarning` because the recoil
    bookkeeping assumes balance.
    """

    n_alpha: int
    n_beta: int

    def __post_init__(self):
        object.__setattr__(self, "n_alpha", _check_count(self.n_alpha, "n_alpha"))
        object.__setattr__(self, "n_beta", _check_count(self.n_beta, "n_beta"))
        if self.n_alpha != self.n_beta:
            warnings.warn(
                f"unequal mode populations ({self.n_alpha} vs {self.n_beta}): "
                "recoil accounting assumes balance; flat phase prior retained",
                UnbalancedPopulationsWarning,
                stacklevel=2,
            )

    @property
    def n_total(self) -> int:
        return self.n_alpha + self.n_beta

    @property
    def balanced(self) -> bool:
        return self.n_alpha == self.n_beta


@dataclass(frozen=True)
class PhaseState:
    """All particles share one transverse polarization at angle ``lambda0``."""

    lambda0: float
    n_total: int

    def __post_init__(self):
        object.__setattr__(self, "lambda0", wrap_angle(self.lambda0))
        object.__setattr__(self, "n_total", _check_count(self.n_total, "n_total"))


@dataclass(frozen=True)
class Ghz:
    """All-or-nothing superposition: one z measurement pins all the rest."""

    n_total: int

    def __post_init__(self):
        object.__setattr__(self, "n_total", _check_count(self.n_total, "n_total"))


InitialState = Union[DoubleFock, PhaseState, Ghz]


@dataclass
class BudgetGuard:
    """Counts measurements against a hard cap.

    For two-mode number states the cap itself is limited to
    ``ratio * n_total`` so the total measurement number stays far below the
    particle number.
    """

    p_max: int
    consumed: int = 0

    def __post_init__(self):
        if self.p_max < 0:
            raise ConfigurationError(f"p_max must be >= 0, got {self.p_max}")
        if not 0 <= self.consumed <= self.p_max:
            raise ConfigurationError("consumed must lie in [0, p_max]")

    @classmethod
    def for_state(
        cls,
        state: InitialState,
        ratio: float = DEFAULT_BUDGET_RATIO,
        p_max: int | None = None,
    ) -> "BudgetGuard":
        """Budget for ``state``: ``ratio * n_total`` for number states
        (default ratio 0.1), the particle number otherwise."""
        if isinstance(state, DoubleFock):
            if not 0.0 < ratio <= 1.0:
                raise ConfigurationError(f"budget ratio must be in (0, 1], got {ratio}")
            cap = math.floor(state.n_total * ratio)
            if p_max is None:
                p_max = cap
            elif p_max > cap:
                raise ConfigurationError(
                    f"requested budget {p_max} exceeds {ratio} * n_total = {cap}"
                )
        elif p_max is None:
            p_max = state.n_total
        elif p_max > state.n_total:
            raise ConfigurationError(
                f"requested budget {p_max} exceeds the particle number "
                f"{state.n_total}"
            )
        return cls(p_max=p_max)

    @property
    def remaining(self) -> int:
        return self.p_max - self.consumed

    def charge(self, count: int = 1) -> None:
        """Consume ``count`` measurements; raises once the cap is hit."""
        if count < 0:
            raise ConfigurationError(f"charge count must be >= 0, got {count}")
        if self.consumed + count > self.p_max:
            raise BudgetError(
                f"measurement budget exhausted: {self.consumed} consumed + "
                f"{count} requested > cap {self.p_max}"
            )
        self.consumed += count


def prior_distribution(
    state: InitialState, grid_size: int = DEFAULT_GRID_SIZE
) -> PhaseDistribution:
    """Phase distribution before any measurement.

    Number states start flat; phase states start as an exact point mass.
    The all-or-nothing state has no phase-density representation and must
    be sampled with :func:`ghz_trajectory` instead.
    """
    if isinstance(state, DoubleFock):
        return uniform(grid_size)
    if isinstance(state, PhaseState):
        return delta(state.lambda0, grid_size)
    if isinstance(state, Ghz):
        raise UnsupportedStateError(
            "the all-or-nothing state has no phase-density prior; "
            "sample its z-axis outcomes with ghz_trajectory()"
        )
    raise ConfigurationError(f"unknown initial state {state!r}")


def ghz_trajectory(state: Ghz, p: int, rng: np.random.Generator) -> list[int]:
    """Outcomes of ``p`` sequential z-axis single-spin measurements.

    The first outcome is +1 or -1 with probability 1/2 each (one uniform
    variate is consumed); every subsequent outcome repeats the first.
    """
    if not isinstance(state, Ghz):
        raise UnsupportedStateError(
            f"ghz_trajectory requires a Ghz state, got {type(state).__name__}"
        )
    if p < 0:
        raise ConfigurationError(f"measurement count must be >= 0, got {p}")
    if p > state.n_total:
        raise BudgetError(
            f"cannot measure {p} spins: state holds {state.n_total} particles"
        )
    if p == 0:
        return []
    first = 1 if rng.random() < 0.5 else -1
    return [first] * p

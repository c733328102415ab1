"""Sequential measurement simulation and exact outcome-probability oracles.

A :class:`Trajectory` drives one realization: each transverse single-spin
measurement samples an outcome from the current phase distribution,
updates the distribution, and books the apparatus recoil.  Independent of
that sampling path, :func:`joint_probability` evaluates the probability of
a complete outcome sequence in closed form (phase average for number
states, plain likelihood product for phase states),
:func:`enumerate_outcomes` tabulates all sequences, and
:func:`fewbody_joint_probability` gives the exact finite-particle-number
answer via sequential destructive mode detection.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import (
    BudgetError,
    ConfigurationError,
    ResourceLimitError,
    UnsupportedStateError,
)
from .ledger import ApparatusLedger
from .phase_dist import (
    DEFAULT_GRID_SIZE,
    PhaseDistribution,
    PhaseGrid,
    prob_minus,
    prob_plus,
    sample_outcome,
    update,
    wrap_angle,
)
from .states import (
    DEFAULT_BUDGET_RATIO,
    BudgetGuard,
    DoubleFock,
    Ghz,
    InitialState,
    PhaseState,
    prior_distribution,
)

__all__ = [
    "ALICE",
    "BOB",
    "PARTIES",
    "MeasurementSpec",
    "MeasurementRecord",
    "TrajectoryResult",
    "Trajectory",
    "run_trajectory",
    "joint_probability",
    "chain_probability",
    "enumerate_outcomes",
    "ghz_sequence_probability",
    "fewbody_joint_probability",
    "as_generator",
    "write_records_csv",
    "write_enumeration_csv",
]

ALICE = "alice"
BOB = "bob"
PARTIES = (ALICE, BOB)

# 2**20 outcome sequences is the hard cap for exhaustive enumeration.
ENUMERATION_MAX_MEASUREMENTS = 20

# Dense amplitude vectors of length n+1 stay cheap up to this size.
FEWBODY_MAX_PARTICLES = 100_000


def as_generator(rng) -> np.random.Generator:
    """Coerce seeds, seed sequences, or generators to a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _check_party(party: str) -> str:
    if party not in PARTIES:
        raise ConfigurationError(f"party must be one of {PARTIES}, got {party!r}")
    return party


@dataclass(frozen=True)
class MeasurementSpec:
    """One planned measurement: which party measures along which axis."""

    party: str
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "party", _check_party(self.party))
        object.__setattr__(self, "phi", wrap_angle(self.phi))


@dataclass(frozen=True)
class MeasurementRecord:
    """One performed measurement with its outcome and global order index."""

    index: int
    spec: MeasurementSpec
    eta: int

    def __post_init__(self):
        if self.eta not in (1, -1):
            raise ConfigurationError(f"outcome must be +1 or -1, got {self.eta!r}")

    @property
    def party(self) -> str:
        return self.spec.party

    @property
    def phi(self) -> float:
        return self.spec.phi


@dataclass
class TrajectoryResult:
    """Records, final phase distribution, and bookkeeping of one run."""

    records: list[MeasurementRecord]
    final_distribution: PhaseDistribution
    snapshots: list[tuple[int, PhaseDistribution]] | None
    ledgers: dict[str, ApparatusLedger]


def _coerce_plan(plan: Iterable) -> list[MeasurementSpec]:
    specs = []
    for item in plan:
        if isinstance(item, MeasurementSpec):
            specs.append(item)
        elif isinstance(item, (tuple, list)) and len(item) == 2:
            specs.append(MeasurementSpec(party=item[0], phi=float(item[1])))
        elif isinstance(item, (int, float, np.floating)):
            specs.append(MeasurementSpec(party=ALICE, phi=float(item)))
        else:
            raise ConfigurationError(
                f"plan items must be MeasurementSpec, (party, phi) or angles; "
                f"got {item!r}"
            )
    return specs


def _coerce_measurements(measurements: Iterable) -> list[tuple[float, int]]:
    pairs = []
    for item in measurements:
        if isinstance(item, MeasurementRecord):
            pairs.append((item.phi, item.eta))
        elif isinstance(item, (tuple, list)) and len(item) == 2:
            phi, eta = item
            eta = int(eta)
            if eta not in (1, -1):
                raise ConfigurationError(f"outcome must be +1 or -1, got {item!r}")
            pairs.append((wrap_angle(float(phi)), eta))
        else:
            raise ConfigurationError(
                f"measurements must be MeasurementRecord or (phi, eta); got {item!r}"
            )
    return pairs


class Trajectory:
    """One sequential-measurement realization on a shared phase variable.

    Owns the evolving phase distribution, a single random stream, the
    global measurement budget, and one recoil ledger per party.  Several
    parties may measure on the same trajectory; they then share the
    distribution and budget, which is what makes late measurements by a
    second party agree with the first party's findings.
    """

    def __init__(
        self,
        state: InitialState,
        rng=None,
        grid_size: int = DEFAULT_GRID_SIZE,
        budget: int | None = None,
        budget_ratio: float = DEFAULT_BUDGET_RATIO,
    ):
        if isinstance(state, Ghz):
            raise UnsupportedStateError(
                "the all-or-nothing state is sampled with ghz_trajectory(), "
                "not with a phase-distribution trajectory"
            )
        self.state = state
        self.rng = as_generator(rng)
        self.distribution = prior_distribution(state, grid_size)
        self.budget = BudgetGuard.for_state(state, ratio=budget_ratio, p_max=budget)
        self.records: list[MeasurementRecord] = []
        self.ledgers: dict[str, ApparatusLedger] = {}

    def ledger(self, party: str) -> ApparatusLedger:
        party = _check_party(party)
        if party not in self.ledgers:
            self.ledgers[party] = ApparatusLedger(party=party)
        return self.ledgers[party]

    def measure(self, phi: float, party: str = ALICE) -> int:
        """Perform one measurement along ``phi``; returns the outcome."""
        spec = MeasurementSpec(party=party, phi=phi)
        self.budget.charge()
        before = self.distribution
        eta = sample_outcome(before, spec.phi, self.rng)
        self.ledger(spec.party).record(before, spec.phi, eta)
        self.distribution = update(before, spec.phi, eta)
        self.records.append(
            MeasurementRecord(index=len(self.records), spec=spec, eta=eta)
        )
        return eta

    def measure_series(self, phi: float, count: int, party: str = ALICE) -> int:
        """Measure ``count`` times along one axis; returns the +1 count."""
        if count < 0:
            raise ConfigurationError(f"series count must be >= 0, got {count}")
        n_plus = 0
        for _ in range(count):
            if self.measure(phi, party) == 1:
                n_plus += 1
        return n_plus


def run_trajectory(
    state: InitialState,
    plan: Iterable,
    rng=None,
    snapshot_every: int | None = None,
    grid_size: int = DEFAULT_GRID_SIZE,
    budget: int | None = None,
    budget_ratio: float = DEFAULT_BUDGET_RATIO,
) -> TrajectoryResult:
    """Run one trajectory through an ordered measurement plan.

    ``plan`` items are :class:`MeasurementSpec`, ``(party, phi)`` pairs, or
    bare angles (assigned to alice).  With ``snapshot_every = s`` the phase
    distribution is stored after every s-th measurement.
    """
    specs = _coerce_plan(plan)
    if snapshot_every is not None and snapshot_every < 1:
        raise ConfigurationError(
            f"snapshot_every must be >= 1, got {snapshot_every}"
        )
    traj = Trajectory(
        state, rng=rng, grid_size=grid_size, budget=budget, budget_ratio=budget_ratio
    )
    if len(specs) > traj.budget.remaining:
        raise BudgetError(
            f"plan length {len(specs)} exceeds measurement budget "
            f"{traj.budget.remaining}"
        )
    snapshots: list[tuple[int, PhaseDistribution]] | None = None
    if snapshot_every is not None:
        snapshots = []
    for step, spec in enumerate(specs, start=1):
        traj.measure(spec.phi, spec.party)
        if snapshots is not None and step % snapshot_every == 0:
            snapshots.append((step - 1, traj.distribution))
    return TrajectoryResult(
        records=traj.records,
        final_distribution=traj.distribution,
        snapshots=snapshots,
        ledgers=traj.ledgers,
    )


def _auto_grid_size(n_measurements: int) -> int:
    # Exactness needs grid size > trig-polynomial degree (= measurement
    # count + 1 for the running posterior); double it for headroom.
    return max(64, 2 * (n_measurements + 2))


def joint_probability(
    state: InitialState, measurements: Iterable, grid_size: int | None = None
) -> float:
    """Probability of a complete outcome sequence.

    For number states: the uniform phase average of the product of
    per-measurement likelihood factors ``(1 + eta*cos(lambda - phi))/2``,
    by exact periodic quadrature.  For phase states the factors multiply
    directly at the polarization angle.  The result does not depend on the
    order of the measurements or on which party performed them.
    """
    pairs = _coerce_measurements(measurements)
    if isinstance(state, Ghz):
        raise UnsupportedStateError(
            "transverse-sequence probabilities are undefined for the "
            "all-or-nothing state; use ghz_sequence_probability for z-axis "
            "sequences"
        )
    if isinstance(state, PhaseState):
        product = 1.0
        for phi, eta in pairs:
            product *= 0.5 * (1.0 + eta * math.cos(state.lambda0 - phi))
        return min(max(product, 0.0), 1.0)
    if not isinstance(state, DoubleFock):
        raise ConfigurationError(f"unknown initial state {state!r}")
    if not pairs:
        return 1.0
    grid = PhaseGrid(grid_size if grid_size is not None else _auto_grid_size(len(pairs)))
    integrand = np.ones(grid.size)
    for phi, eta in pairs:
        factor = 0.5 * (1.0 + eta * (math.cos(phi) * grid.cos + math.sin(phi) * grid.sin))
        np.maximum(factor, 0.0, out=factor)
        integrand *= factor
    return min(max(float(np.mean(integrand)), 0.0), 1.0)


def chain_probability(
    state: InitialState, measurements: Iterable, grid_size: int | None = None
) -> float:
    """Same probability as :func:`joint_probability`, built step by step.

    Multiplies the conditional outcome probabilities evaluated on the
    running posterior.  Agrees with the phase-average form to rounding
    error; the two are independent code paths, which makes the agreement a
    useful cross-check.
    """
    pairs = _coerce_measurements(measurements)
    if isinstance(state, Ghz):
        raise UnsupportedStateError(
            "transverse-sequence probabilities are undefined for the "
            "all-or-nothing state; use ghz_sequence_probability for z-axis "
            "sequences"
        )
    if grid_size is None:
        grid_size = _auto_grid_size(len(pairs))
    d = prior_distribution(state, grid_size)
    product = 1.0
    for phi, eta in pairs:
        step = prob_plus(d, phi) if eta == 1 else prob_minus(d, phi)
        product *= step
        if product == 0.0:
            return 0.0
        d = update(d, phi, eta)
    return min(max(product, 0.0), 1.0)


def _sequence_key(etas: Sequence[int]) -> str:
    return "".join("+" if eta == 1 else "-" for eta in etas)


def enumerate_outcomes(
    state: InitialState, angles: Iterable, grid_size: int | None = None
) -> list[tuple[str, float]]:
    """Exhaustive outcome table for a measurement plan.

    Returns ``(sequence, probability)`` for all ``2**P`` outcome sequences
    of the ``P`` planned angles, with sequences written as ``+``/``-``
    strings in the plan's order.  The probabilities sum to 1.
    """
    specs = _coerce_plan(angles)
    p = len(specs)
    if p > ENUMERATION_MAX_MEASUREMENTS:
        raise ResourceLimitError(
            f"enumeration capped at {ENUMERATION_MAX_MEASUREMENTS} "
            f"measurements ({2 ** ENUMERATION_MAX_MEASUREMENTS} sequences); "
            f"got {p}"
        )
    if isinstance(state, Ghz):
        raise UnsupportedStateError(
            "transverse-sequence probabilities are undefined for the "
            "all-or-nothing state; use ghz_sequence_probability for z-axis "
            "sequences"
        )
    if isinstance(state, PhaseState):
        point = [
            (
                0.5 * (1.0 + math.cos(state.lambda0 - s.phi)),
                0.5 * (1.0 - math.cos(state.lambda0 - s.phi)),
            )
            for s in specs
        ]
        table = []
        for etas in itertools.product((1, -1), repeat=p):
            product = 1.0
            for (f_plus, f_minus), eta in zip(point, etas):
                product *= f_plus if eta == 1 else f_minus
            table.append((_sequence_key(etas), min(max(product, 0.0), 1.0)))
        return table
    if not isinstance(state, DoubleFock):
        raise ConfigurationError(f"unknown initial state {state!r}")
    grid = PhaseGrid(grid_size if grid_size is not None else _auto_grid_size(p))
    factors_plus = np.empty((p, grid.size))
    for i, spec in enumerate(specs):
        c = math.cos(spec.phi) * grid.cos + math.sin(spec.phi) * grid.sin
        factors_plus[i] = np.maximum(0.5 * (1.0 + c), 0.0)
    factors_minus = 1.0 - factors_plus
    table = []
    for etas in itertools.product((1, -1), repeat=p):
        integrand = np.ones(grid.size)
        for i, eta in enumerate(etas):
            integrand *= factors_plus[i] if eta == 1 else factors_minus[i]
        prob = min(max(float(np.mean(integrand)), 0.0), 1.0)
        table.append((_sequence_key(etas), prob))
    return table


def ghz_sequence_probability(etas: Sequence[int]) -> float:
    """Probability of a z-axis outcome sequence on the all-or-nothing state.

    Any non-empty constant sequence has probability 1/2; mixed sequences
    are impossible.  The empty sequence has probability 1.
    """
    etas = list(etas)
    for eta in etas:
        if eta not in (1, -1):
            raise ConfigurationError(f"outcome must be +1 or -1, got {eta!r}")
    if not etas:
        return 1.0
    return 0.5 if all(eta == etas[0] for eta in etas) else 0.0


def fewbody_joint_probability(
    n_alpha: int, n_beta: int, measurements: Iterable
) -> float:
    """Exact outcome-sequence probability at finite particle number.

    Starts from the two-mode number state with ``n_alpha`` and ``n_beta``
    particles and applies, for each measurement, the destructive detection
    combination ``(exp(-i*phi/2) a1 + eta*exp(+i*phi/2) a2) / sqrt(2)`` to
    the amplitude vector over mode occupations.  The amplitudes are scaled
    by ``1/sqrt(m)`` at each step (``m`` = remaining particles) so the
    running squared norm is the probability of the outcome prefix; this
    keeps the computation overflow-free for any sequence length.

    The probabilities over all ``2**P`` sequences sum to 1 exactly; for
    particle numbers far above the sequence length they converge to the
    phase-average probabilities of :func:`joint_probability`.
    """
    for name, value in (("n_alpha", n_alpha), ("n_beta", n_beta)):
        if not isinstance(value, (int, np.integer)) or int(value) < 0:
            raise ConfigurationError(f"{name} must be a non-negative integer")
    n_alpha = int(n_alpha)
    n_beta = int(n_beta)
    n_total = n_alpha + n_beta
    if n_total < 1:
        raise ConfigurationError("the state must contain at least one particle")
    if n_total > FEWBODY_MAX_PARTICLES:
        raise ResourceLimitError(
            f"few-body oracle capped at {FEWBODY_MAX_PARTICLES} particles, "
            f"got {n_total}"
        )
    pairs = _coerce_measurements(measurements)
    if len(pairs) > n_total:
        raise BudgetError(
            f"cannot measure {len(pairs)} spins: state holds {n_total} particles"
        )
    amps = np.zeros(n_total + 1, dtype=np.complex128)
    amps[n_alpha] = 1.0
    remaining = n_total
    for phi, eta in pairs:
        coeff1 = cmath.exp(-0.5j * phi)
        coeff2 = eta * cmath.exp(0.5j * phi)
        occupations = np.arange(remaining)
        amps = (
            coeff1 * np.sqrt(occupations + 1.0) * amps[1 : remaining + 1]
            + coeff2 * np.sqrt(float(remaining) - occupations) * amps[:remaining]
        ) / math.sqrt(2.0 * remaining)
        remaining -= 1
    norm_sq = float(np.sum(np.abs(amps) ** 2))
    return min(max(norm_sq, 0.0), 1.0)


def write_records_csv(records: Iterable[MeasurementRecord], stream: TextIO) -> None:
    """Write measurement records as CSV rows ``index,party,phi,eta``."""
    stream.write("index,party,phi,eta\n")
    for r in records:
        stream.write(f"{r.index},{r.party},{r.phi:.17g},{r.eta}\n")


def write_enumeration_csv(
    table: Iterable[tuple[str, float]], stream: TextIO
) -> None:
    """Write an outcome table as CSV rows ``sequence,probability``."""
    stream.write("sequence,probability\n")
    for sequence, probability in table:
        stream.write(f"{sequence},{probability:.17g}\n")

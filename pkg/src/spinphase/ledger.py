"""Angular-momentum bookkeeping for the measurement apparatuses.

All angular momenta are in units of hbar; a single measured spin carries
+1/2 or -1/2 along the measured transverse axis.  Each measurement assigns
the apparatus a recoil equal to minus the jump of the spin expectation:
``recoil = -(eta/2 - pre_expectation)`` where ``pre_expectation`` is the
mean spin along the measured axis under the phase distribution just before
the measurement.  Only the transverse (x, y) components are tracked; all
measured axes lie in the transverse plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .errors import ConfigurationError
from .phase_dist import PhaseDistribution, first_moment, wrap_angle

__all__ = [
    "LedgerEntry",
    "ApparatusLedger",
    "RegionPolarization",
    "pre_measurement_expectation",
    "expected_recoil_stats",
    "region_polarization",
    "write_ledger_csv",
    "ledger_summary",
]


@dataclass(frozen=True)
class LedgerEntry:
    """One measurement's recoil assignment."""

    index: int
    phi: float
    eta: int
    pre_expectation: float
    recoil: float


def pre_measurement_expectation(d: PhaseDistribution, phi: float) -> float:
    """Mean spin along axis angle ``phi`` (hbar units) before measuring.

    Equals ``(1/2) * integral of g(lambda) cos(lambda - phi)``, evaluated
    from the first trigonometric moment of the distribution.
    """
    moment = first_moment(d)
    return 0.5 * (moment.real * math.cos(phi) + moment.imag * math.sin(phi))


@dataclass
class ApparatusLedger:
    """Cumulative apparatus recoil for one party, entry by entry.

    The cumulative transverse vector is the running sum of
    ``recoil * (cos phi, sin phi)`` over the entries and can be recomputed
    exactly from them.
    """

    party: str
    entries: list[LedgerEntry] = field(default_factory=list)
    cumulative_x: float = 0.0
    cumulative_y: float = 0.0

    def record(self, d_before: PhaseDistribution, phi: float, eta: int) -> LedgerEntry:
        """Append the recoil entry for one measurement.

        ``d_before`` must be the phase distribution immediately before the
        measurement whose outcome is ``eta``.
        """
        if eta not in (1, -1):
            raise ConfigurationError(f"outcome must be +1 or -1, got {eta!r}")
        phi = wrap_angle(phi)
        pre = pre_measurement_expectation(d_before, phi)
        recoil = -(eta / 2.0 - pre)
        entry = LedgerEntry(
            index=len(self.entries),
            phi=phi,
            eta=int(eta),
            pre_expectation=pre,
            recoil=recoil,
        )
        self.entries.append(entry)
        self.cumulative_x += recoil * math.cos(phi)
        self.cumulative_y += recoil * math.sin(phi)
        return entry

    @property
    def cumulative_vector(self) -> tuple[float, float]:
        return (self.cumulative_x, self.cumulative_y)

    @property
    def cumulative_magnitude(self) -> float:
        return math.hypot(self.cumulative_x, self.cumulative_y)

    def recompute_cumulative(self) -> tuple[float, float]:
        """Exact re-summation of the cumulative vector from the entries."""
        x = math.fsum(e.recoil * math.cos(e.phi) for e in self.entries)
        y = math.fsum(e.recoil * math.sin(e.phi) for e in self.entries)
        return (x, y)


@dataclass(frozen=True)
class RegionPolarization:
    """Vector sum of measured spin outcomes in one laboratory (hbar units)."""

    party: str
    x: float
    y: float
    n_records: int

    @property
    def magnitude(self) -> float:
        return math.hypot(self.x, self.y)

    @property
    def mean_alignment(self) -> float:
        """Magnitude per measurement in units of the maximal value 1/2."""
        if self.n_records == 0:
            return 0.0
        return self.magnitude / (0.5 * self.n_records)


def expected_recoil_stats(lambda0: float, phi: float, p: int) -> tuple[float, float]:
    """Mean and RMS spread of the total apparatus recoil for a phase state.

    ``p`` identical measurements along ``phi`` on a phase state polarized
    at ``lambda0`` transfer zero angular momentum on average with spread
    ``(1/2) * sqrt(p) * |sin(lambda0 - phi)|``.
    """
    if p < 1:
        raise ConfigurationError(f"measurement count must be >= 1, got {p}")
    return (0.0, 0.5 * math.sqrt(p) * abs(math.sin(lambda0 - phi)))


def region_polarization(records: Iterable, party: str | None = None) -> RegionPolarization:
    """Transverse spin vector accumulated by one party's outcomes.

    ``records`` is an iterable of measurement records carrying ``party``,
    ``phi`` and ``eta``; when ``party`` is given only that party's records
    contribute.
    """
    selected = [r for r in records if party is None or r.party == party]
    x = math.fsum(0.5 * r.eta * math.cos(r.phi) for r in selected)
    y = math.fsum(0.5 * r.eta * math.sin(r.phi) for r in selected)
    return RegionPolarization(
        party=party if party is not None else "all",
        x=x,
        y=y,
        n_records=len(selected),
    )


def write_ledger_csv(ledger: ApparatusLedger, stream: TextIO) -> None:
    """Write the per-entry recoil table as CSV at full precision."""
    stream.write("index,phi,eta,pre_expectation,recoil\n")
    for e in ledger.entries:
        stream.write(
            f"{e.index},{e.phi:.17g},{e.eta},{e.pre_expectation:.17g},{e.recoil:.17g}\n"
        )


def ledger_summary(ledgers: dict[str, ApparatusLedger], records: Iterable) -> dict:
    """Cumulative recoil vectors and region polarizations per party."""
    records = list(records)
    summary: dict[str, dict] = {}
    for party, ledger in sorted(ledgers.items()):
        region = region_polarization(records, party)
        summary[party] = {
            "entries": len(ledger.entries),
            "cumulative": [ledger.cumulative_x, ledger.cumulative_y],
            "cumulative_magnitude": ledger.cumulative_magnitude,
            "region_polarization": [region.x, region.y],
            "region_magnitude": region.magnitude,
        }
    return summary

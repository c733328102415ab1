"""Seeded Monte Carlo simulation of sequential transverse spin measurements
on two-mode condensates, with exact probability oracles, phase estimators,
and apparatus angular-momentum accounting."""

from ._version import __version__
from .errors import (
    BudgetError,
    ConfigurationError,
    DegenerateUpdateError,
    DirectionUndefinedError,
    EmptySeriesError,
    ImpossibleOutcomeError,
    ResourceLimitError,
    SpinPhaseError,
    UnbalancedPopulationsWarning,
    UnsupportedStateError,
)
from .phase_dist import (
    DEFAULT_GRID_SIZE,
    TWO_PI,
    CircularStats,
    PhaseDistribution,
    PhaseGrid,
    circular_distance,
    circular_midpoint,
    circular_stats,
    delta,
    first_moment,
    from_weights,
    prob_minus,
    prob_plus,
    sample_outcome,
    uniform,
    update,
    wrap_angle,
    wrap_signed,
    write_density_csv,
)
from .states import (
    BudgetGuard,
    DoubleFock,
    Ghz,
    InitialState,
    PhaseState,
    ghz_trajectory,
    prior_distribution,
)
from .engine import (
    ALICE,
    BOB,
    MeasurementRecord,
    MeasurementSpec,
    Trajectory,
    TrajectoryResult,
    as_generator,
    chain_probability,
    enumerate_outcomes,
    fewbody_joint_probability,
    ghz_sequence_probability,
    joint_probability,
    run_trajectory,
    write_enumeration_csv,
    write_records_csv,
)
from .ledger import (
    ApparatusLedger,
    LedgerEntry,
    RegionPolarization,
    expected_recoil_stats,
    ledger_summary,
    pre_measurement_expectation,
    region_polarization,
    write_ledger_csv,
)
from .protocols import (
    SeriesResult,
    SignedEstimate,
    adaptive_refinement,
    combine_series,
    confirmation_run,
    magnitude_estimate,
    posterior_estimate,
    two_stage_estimate,
)
from .harness import (
    AnglesPlan,
    ExperimentConfig,
    GhzPlan,
    PlanStep,
    RunSummary,
    StateSpec,
    TwoStagePlan,
    aggregate_rows,
    execute_plan,
    load_config,
    run_ensemble,
    trajectory_rng,
)

__all__ = [name for name in dir() if not name.startswith("_")]

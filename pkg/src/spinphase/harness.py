"""Declarative experiment configuration and seeded ensemble execution.

An :class:`ExperimentConfig` names an initial state, a measurement plan,
an ensemble size, and a master seed; :func:`run_ensemble` executes the
trajectories with per-trajectory random streams derived deterministically
from ``(master_seed, index)`` and folds the per-trajectory rows into
ensemble aggregates.  Everything round-trips through JSON so a run is
fully described by its config file plus the seed.
"""

from __future__ import annotations

import json
import math
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, TextIO, Union

import numpy as np

from ._version import __version__
from .engine import PARTIES, Trajectory
from .errors import ConfigurationError
from .ledger import region_polarization
from .phase_dist import DEFAULT_GRID_SIZE, PhaseGrid, circular_distance, circular_stats
from .protocols import confirmation_run, two_stage_estimate
from .states import DEFAULT_BUDGET_RATIO, DoubleFock, Ghz, InitialState, PhaseState, ghz_trajectory

__all__ = [
    "SCHEMA_VERSION",
    "OUTPUT_DIR_ENV",
    "StateSpec",
    "PlanStep",
    "AnglesPlan",
    "TwoStagePlan",
    "GhzPlan",
    "ExperimentConfig",
    "RunSummary",
    "trajectory_rng",
    "execute_plan",
    "run_ensemble",
    "aggregate_rows",
    "load_config",
    "resolve_output_path",
    "write_rows_csv",
]

SCHEMA_VERSION = 1

# Only the output directory may be overridden from the environment.
OUTPUT_DIR_ENV = "SPINPHASE_OUT_DIR"

STATE_KINDS = ("double_fock", "phase_state", "ghz")

# Row fields aggregated with circular statistics instead of linear ones.
_ANGULAR_FIELDS = {"lambda_hat", "mean_direction"}


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigurationError(message)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class StateSpec:
    """Serializable description of an initial state."""

    kind: str
    n_alpha: int | None = None
    n_beta: int | None = None
    lambda0: float | None = None
    n_total: int | None = None

    def __post_init__(self):
        _require(
            self.kind in STATE_KINDS,
            f"state.kind must be one of {STATE_KINDS}, got {self.kind!r}",
        )
        if self.kind == "double_fock":
            _require(
                _is_int(self.n_alpha) and self.n_alpha >= 1,
                "state.n_alpha must be an integer >= 1 for double_fock",
            )
            _require(
                _is_int(self.n_beta) and self.n_beta >= 1,
                "state.n_beta must be an integer >= 1 for double_fock",
            )
        elif self.kind == "phase_state":
            _require(
                isinstance(self.lambda0, (int, float)) and not isinstance(self.lambda0, bool),
                "state.lambda0 must be a number for phase_state",
            )
            _require(
                _is_int(self.n_total) and self.n_total >= 1,
                "state.n_total must be an integer >= 1 for phase_state",
            )
        else:  # ghz
            _require(
                _is_int(self.n_total) and self.n_total >= 1,
                "state.n_total must be an integer >= 1 for ghz",
            )

    def to_state(self) -> InitialState:
        if self.kind == "double_fock":
            return DoubleFock(n_alpha=self.n_alpha, n_beta=self.n_beta)
        if self.kind == "phase_state":
            return PhaseState(lambda0=float(self.lambda0), n_total=self.n_total)
        return Ghz(n_total=self.n_total)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for key in ("n_alpha", "n_beta", "lambda0", "n_total"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "StateSpec":
        _require(isinstance(data, dict), "state must be an object")
        allowed = {"kind", "n_alpha", "n_beta", "lambda0", "n_total"}
        unknown = set(data) - allowed
        _require(not unknown, f"unknown state keys: {sorted(unknown)}")
        _require("kind" in data, "state.kind is required")
        return cls(**data)


@dataclass(frozen=True)
class PlanStep:
    """A repeated fixed-axis measurement by one party."""

    party: str
    phi: float
    count: int = 1

    def __post_init__(self):
        _require(
            self.party in PARTIES,
            f"plan step party must be one of {PARTIES}, got {self.party!r}",
        )
        _require(
            isinstance(self.phi, (int, float)) and not isinstance(self.phi, bool),
            "plan step phi must be a number",
        )
        _require(
            _is_int(self.count) and self.count >= 1,
            "plan step count must be an integer >= 1",
        )


@dataclass(frozen=True)
class AnglesPlan:
    """Explicit ordered list of fixed-axis series."""

    steps: tuple[PlanStep, ...]

    kind = "angles"

    def __post_init__(self):
        _require(len(self.steps) >= 1, "plan.steps must not be empty")

    @property
    def total_measurements(self) -> int:
        return sum(s.count for s in self.steps)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "steps": [
                {"party": s.party, "phi": s.phi, "count": s.count} for s in self.steps
            ],
        }


@dataclass(frozen=True)
class TwoStagePlan:
    """Each listed party runs the two-series sign-resolved estimator.

    Parties run in order on the same trajectory; with ``confirm > 0`` the
    last party finishes with a confirmation series along its own estimate.
    """

    p1: int
    p2: int
    base_angle: float = 0.0
    parties: tuple[str, ...] = ("alice",)
    confirm: int = 0

    kind = "two_stage"

    def __post_init__(self):
        _require(_is_int(self.p1) and self.p1 >= 1, "plan.p1 must be an integer >= 1")
        _require(_is_int(self.p2) and self.p2 >= 1, "plan.p2 must be an integer >= 1")
        _require(
            isinstance(self.base_angle, (int, float)) and not isinstance(self.base_angle, bool),
            "plan.base_angle must be a number",
        )
        _require(len(self.parties) >= 1, "plan.parties must not be empty")
        for party in self.parties:
            _require(
                party in PARTIES,
                f"plan.parties entries must be one of {PARTIES}, got {party!r}",
            )
        _require(
            len(set(self.parties)) == len(self.parties),
            "plan.parties must not repeat",
        )
        _require(
            _is_int(self.confirm) and self.confirm >= 0,
            "plan.confirm must be an integer >= 0",
        )

    @property
    def total_measurements(self) -> int:
        return (self.p1 + self.p2) * len(self.parties) + self.confirm

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "p1": self.p1,
            "p2": self.p2,
            "base_angle": self.base_angle,
            "parties": list(self.parties),
            "confirm": self.confirm,
        }


@dataclass(frozen=True)
class GhzPlan:
    """A run of z-axis measurements on the all-or-nothing state."""

    p: int

    kind = "ghz"

    def __post_init__(self):
        _require(_is_int(self.p) and self.p >= 1, "plan.p must be an integer >= 1")

    @property
    def total_measurements(self) -> int:
        return self.p

    def to_dict(self) -> dict:
        return {"kind": self.kind, "p": self.p}


Plan = Union[AnglesPlan, TwoStagePlan, GhzPlan]


def _plan_from_dict(data: dict) -> Plan:
    _require(isinstance(data, dict), "plan must be an object")
    kind = data.get("kind")
    if kind == "angles":
        unknown = set(data) - {"kind", "steps"}
        _require(not unknown, f"unknown plan keys: {sorted(unknown)}")
        steps = data.get("steps")
        _require(isinstance(steps, list) and steps, "plan.steps must be a non-empty list")
        parsed = []
        for i, step in enumerate(steps):
            _require(isinstance(step, dict), f"plan.steps[{i}] must be an object")
            unknown = set(step) - {"party", "phi", "count"}
            _require(not unknown, f"unknown keys in plan.steps[{i}]: {sorted(unknown)}")
            parsed.append(PlanStep(**step))
        return AnglesPlan(steps=tuple(parsed))
    if kind == "two_stage":
        unknown = set(data) - {"kind", "p1", "p2", "base_angle", "parties", "confirm"}
        _require(not unknown, f"unknown plan keys: {sorted(unknown)}")
        kwargs = {k: v for k, v in data.items() if k != "kind"}
        if "parties" in kwargs:
            _require(isinstance(kwargs["parties"], list), "plan.parties must be a list")
            kwargs["parties"] = tuple(kwargs["parties"])
        return TwoStagePlan(**kwargs)
    if kind == "ghz":
        unknown = set(data) - {"kind", "p"}
        _require(not unknown, f"unknown plan keys: {sorted(unknown)}")
        return GhzPlan(p=data.get("p"))
    raise ConfigurationError(
        f"plan.kind must be one of ('angles', 'two_stage', 'ghz'), got {kind!r}"
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete declarative description of a seeded run."""

    state: StateSpec
    plan: Plan
    ensemble_size: int = 1
    master_seed: int = 0
    grid_size: int = DEFAULT_GRID_SIZE
    snapshot_stride: int | None = None
    budget_ratio: float = DEFAULT_BUDGET_RATIO
    output_path: str | None = None
    output_format: str = "json"

    def __post_init__(self):
        _require(
            _is_int(self.ensemble_size) and self.ensemble_size >= 1,
            "ensemble_size must be an integer >= 1",
        )
        _require(_is_int(self.master_seed), "master_seed must be an integer")
        PhaseGrid(self.grid_size)  # validates size
        if self.snapshot_stride is not None:
            _require(
                _is_int(self.snapshot_stride) and self.snapshot_stride >= 1,
                "snapshot_stride must be an integer >= 1",
            )
        _require(
            isinstance(self.budget_ratio, float) and 0.0 < self.budget_ratio <= 1.0,
            "budget_ratio must be a float in (0, 1]",
        )
        _require(
            self.output_format in ("csv", "json"),
            f"output_format must be 'csv' or 'json', got {self.output_format!r}",
        )
        if self.state.kind == "ghz":
            _require(
                isinstance(self.plan, GhzPlan),
                "a ghz state requires a plan of kind 'ghz'",
            )
        else:
            _require(
                not isinstance(self.plan, GhzPlan),
                "a plan of kind 'ghz' requires a ghz state",
            )

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "state": self.state.to_dict(),
            "plan": self.plan.to_dict(),
            "ensemble_size": self.ensemble_size,
            "master_seed": self.master_seed,
            "grid_size": self.grid_size,
            "snapshot_stride": self.snapshot_stride,
            "budget_ratio": self.budget_ratio,
            "output_path": self.output_path,
            "output_format": self.output_format,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        _require(isinstance(data, dict), "config must be an object")
        allowed = {
            "schema_version",
            "state",
            "plan",
            "ensemble_size",
            "master_seed",
            "grid_size",
            "snapshot_stride",
            "budget_ratio",
            "output_path",
            "output_format",
        }
        unknown = set(data) - allowed
        _require(not unknown, f"unknown config keys: {sorted(unknown)}")
        version = data.get("schema_version", SCHEMA_VERSION)
        _require(
            version == SCHEMA_VERSION,
            f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})",
        )
        _require("state" in data, "config.state is required")
        _require("plan" in data, "config.plan is required")
        kwargs = {
            k: v
            for k, v in data.items()
            if k not in ("schema_version", "state", "plan")
        }
        return cls(
            state=StateSpec.from_dict(data["state"]),
            plan=_plan_from_dict(data["plan"]),
            **kwargs,
        )


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}")
    return ExperimentConfig.from_dict(data)


def resolve_output_path(path: str | Path) -> Path:
    """Resolve an output path, honoring the output-directory override.

    Relative paths are placed under ``$SPINPHASE_OUT_DIR`` when that
    variable is set; absolute paths are used as given.
    """
    path = Path(path)
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override and not path.is_absolute():
        return Path(override) / path
    return path


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    """Random stream for one trajectory.

    Seeded with the entropy pair ``(master_seed, index)`` so any single
    trajectory can be reproduced without running the rest of the ensemble.
    """
    return np.random.default_rng([master_seed, index])


@dataclass
class RunSummary:
    """Per-trajectory rows plus ensemble aggregates for one config."""

    schema_version: int
    config: dict
    trajectories: list[dict]
    aggregates: dict
    metadata: dict = field(default_factory=dict)

    def content_dict(self) -> dict:
        """Everything except metadata; identical for identical (config, seed)."""
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "trajectories": self.trajectories,
            "aggregates": self.aggregates,
        }

    def to_dict(self) -> dict:
        out = self.content_dict()
        out["metadata"] = self.metadata
        return out

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _posterior_row(traj: Trajectory) -> dict:
    stats = circular_stats(traj.distribution)
    mean = None if math.isnan(stats.mean_direction) else stats.mean_direction
    return {"mean_direction": mean, "concentration": stats.concentration}


def _party_rows(traj: Trajectory) -> dict:
    rows = {}
    for party in sorted(traj.ledgers):
        ledger = traj.ledgers[party]
        region = region_polarization(traj.records, party)
        rows[party] = {
            "n_measurements": len(ledger.entries),
            "n_plus": sum(1 for r in traj.records if r.party == party and r.eta == 1),
            "ledger_x": ledger.cumulative_x,
            "ledger_y": ledger.cumulative_y,
            "ledger_magnitude": ledger.cumulative_magnitude,
            "region_x": region.x,
            "region_y": region.y,
            "region_magnitude": region.magnitude,
        }
    return rows


def execute_plan(cfg: ExperimentConfig, index: int) -> tuple[Trajectory, dict]:
    """Run trajectory ``index`` of a non-ghz config.

    Returns the finished :class:`Trajectory` plus the protocol-level row
    fields (estimates, agreement, confirmation) produced along the way.
    """
    if isinstance(cfg.plan, GhzPlan):
        raise ConfigurationError(
            "ghz plans have no phase-distribution trajectory; "
            "use ghz_trajectory or the ghz row runner"
        )
    rng = trajectory_rng(cfg.master_seed, index)
    traj = Trajectory(
        cfg.state.to_state(),
        rng=rng,
        grid_size=cfg.grid_size,
        budget_ratio=cfg.budget_ratio,
    )
    extras: dict = {}
    plan = cfg.plan
    if isinstance(plan, AnglesPlan):
        for step in plan.steps:
            traj.measure_series(step.phi, step.count, step.party)
        extras["n_plus"] = sum(1 for r in traj.records if r.eta == 1)
        extras["n_measurements"] = len(traj.records)
    else:
        estimates = {}
        for party in plan.parties:
            estimates[party] = two_stage_estimate(
                traj, plan.p1, plan.p2, plan.base_angle, party
            )
        extras["estimates"] = {p: est.to_dict() for p, est in estimates.items()}
        if len(plan.parties) >= 2:
            first, second = plan.parties[0], plan.parties[1]
            extras["agreement_distance"] = circular_distance(
                estimates[first].lambda_hat, estimates[second].lambda_hat
            )
        if plan.confirm > 0:
            last = plan.parties[-1]
            series = confirmation_run(
                traj, estimates[last].lambda_hat, plan.confirm, last
            )
            extras["confirm"] = dict(
                series.to_dict(), party=last, fraction=series.fraction
            )
    return traj, extras


def _run_single(cfg: ExperimentConfig, index: int) -> dict:
    plan = cfg.plan
    if isinstance(plan, GhzPlan):
        rng = trajectory_rng(cfg.master_seed, index)
        etas = ghz_trajectory(cfg.state.to_state(), plan.p, rng)
        return {
            "index": index,
            "n_measurements": plan.p,
            "first_outcome": etas[0],
            "all_equal": int(all(eta == etas[0] for eta in etas)),
            "n_plus": sum(1 for eta in etas if eta == 1),
        }
    traj, extras = execute_plan(cfg, index)
    row: dict = {"index": index}
    row.update(extras)
    row["posterior"] = _posterior_row(traj)
    row["parties"] = _party_rows(traj)
    return row


def _flatten(prefix: str, value, out: dict) -> None:
    if isinstance(value, dict):
        for key in value:
            _flatten(f"{prefix}.{key}" if prefix else str(key), value[key], out)
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        out[prefix] = float(value)


def aggregate_rows(rows: Iterable[dict]) -> dict:
    """Fold per-trajectory rows into ensemble statistics.

    Every numeric leaf (dotted key path) gets mean, RMS, median, min and
    max; leaves holding angles get a circular mean and concentration
    instead.  Pure function of the rows, independent of execution order.
    """
    columns: dict[str, list[float]] = {}
    for row in rows:
        flat: dict[str, float] = {}
        _flatten("", row, flat)
        for key, value in flat.items():
            columns.setdefault(key, []).append(value)
    aggregates: dict[str, dict] = {}
    for key in sorted(columns):
        values = columns[key]
        leaf = key.rsplit(".", 1)[-1]
        if leaf in _ANGULAR_FIELDS:
            c = math.fsum(math.cos(v) for v in values) / len(values)
            s = math.fsum(math.sin(v) for v in values) / len(values)
            aggregates[key] = {
                "count": len(values),
                "circular_mean": math.atan2(s, c),
                "concentration": math.hypot(c, s),
            }
        else:
            mean = math.fsum(values) / len(values)
            aggregates[key] = {
                "count": len(values),
                "mean": mean,
                "rms": math.sqrt(math.fsum(v * v for v in values) / len(values)),
                "median": statistics.median(values),
                "min": min(values),
                "max": max(values),
            }
    return aggregates


def run_ensemble(cfg: ExperimentConfig, workers: int = 1) -> RunSummary:
    """Run the configured ensemble and aggregate it.

    Per-trajectory streams come from :func:`trajectory_rng`, so the result
    content is a pure function of (config, master seed): worker count and
    execution order do not change it.
    """
    if workers < 1:
        raise ConfigurationError(f"workers must be >= 1, got {workers}")
    indices = range(cfg.ensemble_size)
    if workers == 1:
        rows = [_run_single(cfg, i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda i: _run_single(cfg, i), indices))
    return RunSummary(
        schema_version=SCHEMA_VERSION,
        config=cfg.to_dict(),
        trajectories=rows,
        aggregates=aggregate_rows(rows),
        metadata={
            "created_utc": datetime.now(timezone.utc).isoformat(),
            "package": "spinphase",
            "version": __version__,
        },
    )


def write_rows_csv(rows: list[dict], stream: TextIO) -> None:
    """Write per-trajectory rows as CSV over the union of flattened keys."""
    flats = []
    for row in rows:
        flat: dict[str, float] = {}
        _flatten("", row, flat)
        flats.append(flat)
    columns = sorted({key for flat in flats for key in flat})
    stream.write(",".join(columns) + "\n")
    for flat in flats:
        cells = []
        for column in columns:
            value = flat.get(column)
            cells.append("" if value is None else f"{value:.17g}")
        stream.write(",".join(cells) + "\n")

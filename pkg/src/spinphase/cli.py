"""Command-line interface.

Subcommands: ``run`` (one trajectory, record export), ``ensemble``
(seeded ensemble summary), ``oracle enumerate`` / ``oracle fewbody``
(exact outcome tables), ``ghz`` (correlated z-axis outcomes), and
``export-dist`` (final phase-density CSV).  Exit codes: 0 success,
1 validation or usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import itertools
import json
import sys

from .engine import (
    as_generator,
    enumerate_outcomes,
    fewbody_joint_probability,
    write_enumeration_csv,
    write_records_csv,
)
from .errors import (
    BudgetError,
    ConfigurationError,
    EmptySeriesError,
    ResourceLimitError,
    SpinPhaseError,
    UnsupportedStateError,
)
from .harness import (
    ExperimentConfig,
    StateSpec,
    execute_plan,
    load_config,
    resolve_output_path,
    run_ensemble,
    write_rows_csv,
)
from .phase_dist import write_density_csv
from .states import Ghz, ghz_trajectory

__all__ = ["main", "entry"]

_VALIDATION_ERRORS = (
    ConfigurationError,
    UnsupportedStateError,
    ResourceLimitError,
    BudgetError,
    EmptySeriesError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; the contract here is 1.
    def error(self, message):
        raise _UsageError(message)


def _parse_angles(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigurationError(f"--angles must be comma-separated numbers, got {text!r}")


def _parse_sequence(text: str) -> list[int]:
    etas = []
    for ch in text:
        if ch == "+":
            etas.append(1)
        elif ch == "-":
            etas.append(-1)
        else:
            raise ConfigurationError(f"--sequence must contain only + and -, got {text!r}")
    return etas


@contextlib.contextmanager
def _output_stream(out: str | None):
    if out is None:
        yield sys.stdout
        return
    path = resolve_output_path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        yield handle


def _load_adjusted_config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "grid", None) is not None:
        overrides["grid_size"] = args.grid
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _build_parser() -> _Parser:
    parser = _Parser(prog="spinphase", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add_common(p, config=False):
        if config:
            p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--grid", type=int, default=None, help="grid size override")
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p_run = sub.add_parser("run", help="run one trajectory and export its records")
    add_common(p_run, config=True)
    p_run.add_argument("--index", type=int, default=0, help="trajectory index")
    p_run.add_argument("--snapshot-every", type=int, default=None)

    p_ens = sub.add_parser("ensemble", help="run the configured ensemble")
    add_common(p_ens, config=True)
    p_ens.add_argument("--workers", type=int, default=1)

    p_oracle = sub.add_parser("oracle", help="exact outcome-probability oracles")
    oracle_sub = p_oracle.add_subparsers(dest="oracle_command", metavar="oracle")

    p_enum = oracle_sub.add_parser("enumerate", help="all outcome sequences")
    p_enum.add_argument("--state", choices=("double_fock", "phase_state"), default="double_fock")
    p_enum.add_argument("--n-alpha", type=int, default=None)
    p_enum.add_argument("--n-beta", type=int, default=None)
    p_enum.add_argument("--lambda0", type=float, default=None)
    p_enum.add_argument("--n-total", type=int, default=None)
    p_enum.add_argument("--angles", required=True, help="comma-separated axis angles")
    add_common(p_enum)

    p_few = oracle_sub.add_parser("fewbody", help="exact finite-N probabilities")
    p_few.add_argument("--n-alpha", type=int, required=True)
    p_few.add_argument("--n-beta", type=int, required=True)
    p_few.add_argument("--angles", required=True, help="comma-separated axis angles")
    p_few.add_argument("--sequence", default=None, help="single +/- outcome string")
    add_common(p_few)

    p_ghz = sub.add_parser("ghz", help="correlated z-axis outcomes")
    p_ghz.add_argument("--n", type=int, required=True, help="particle number")
    p_ghz.add_argument("--p", type=int, required=True, help="number of measurements")
    add_common(p_ghz)

    p_dist = sub.add_parser("export-dist", help="final phase density of one trajectory")
    add_common(p_dist, config=True)
    p_dist.add_argument("--index", type=int, default=0, help="trajectory index")

    return parser


def _cmd_run(args) -> int:
    cfg = _load_adjusted_config(args)
    traj, _ = execute_plan(cfg, args.index)
    with _output_stream(args.out) as stream:
        if args.format == "csv":
            write_records_csv(traj.records, stream)
        else:
            rows = [
                {"index": r.index, "party": r.party, "phi": r.phi, "eta": r.eta}
                for r in traj.records
            ]
            json.dump(rows, stream, indent=2)
            stream.write("\n")
    return 0


def _cmd_ensemble(args) -> int:
    cfg = _load_adjusted_config(args)
    summary = run_ensemble(cfg, workers=args.workers)
    with _output_stream(args.out) as stream:
        if args.format == "csv":
            write_rows_csv(summary.trajectories, stream)
        else:
            stream.write(summary.to_json())
            stream.write("\n")
    return 0


def _cmd_oracle_enumerate(args) -> int:
    if args.state == "double_fock":
        spec = StateSpec(
            kind="double_fock",
            n_alpha=args.n_alpha if args.n_alpha is not None else 1000,
            n_beta=args.n_beta if args.n_beta is not None else 1000,
        )
    else:
        if args.lambda0 is None:
            raise ConfigurationError("--lambda0 is required for phase_state")
        spec = StateSpec(
            kind="phase_state",
            lambda0=args.lambda0,
            n_total=args.n_total if args.n_total is not None else 1000,
        )
    angles = _parse_angles(args.angles)
    table = enumerate_outcomes(spec.to_state(), angles, grid_size=args.grid)
    with _output_stream(args.out) as stream:
        if args.format == "csv":
            write_enumeration_csv(table, stream)
        else:
            rows = [{"sequence": s, "probability": p} for s, p in table]
            json.dump(rows, stream, indent=2)
            stream.write("\n")
    return 0


def _cmd_oracle_fewbody(args) -> int:
    angles = _parse_angles(args.angles)
    if args.sequence is not None:
        etas = _parse_sequence(args.sequence)
        if len(etas) != len(angles):
            raise ConfigurationError(
                f"--sequence length {len(etas)} does not match "
                f"{len(angles)} angles"
            )
        table = [
            (
                args.sequence,
                fewbody_joint_probability(
                    args.n_alpha, args.n_beta, list(zip(angles, etas))
                ),
            )
        ]
    else:
        table = []
        for etas in itertools.product((1, -1), repeat=len(angles)):
            key = "".join("+" if e == 1 else "-" for e in etas)
            prob = fewbody_joint_probability(
                args.n_alpha, args.n_beta, list(zip(angles, etas))
            )
            table.append((key, prob))
    with _output_stream(args.out) as stream:
        if args.format == "csv":
            write_enumeration_csv(table, stream)
        else:
            rows = [{"sequence": s, "probability": p} for s, p in table]
            json.dump(rows, stream, indent=2)
            stream.write("\n")
    return 0


def _cmd_ghz(args) -> int:
    rng = as_generator(args.seed)
    etas = ghz_trajectory(Ghz(n_total=args.n), args.p, rng)
    with _output_stream(args.out) as stream:
        if args.format == "csv":
            stream.write("index,eta\n")
            for i, eta in enumerate(etas):
                stream.write(f"{i},{eta}\n")
        else:
            json.dump({"outcomes": etas}, stream, indent=2)
            stream.write("\n")
    return 0


def _cmd_export_dist(args) -> int:
    cfg = _load_adjusted_config(args)
    traj, _ = execute_plan(cfg, args.index)
    with _output_stream(args.out) as stream:
        if args.format == "csv":
            write_density_csv(traj.distribution, stream)
        else:
            d = traj.distribution
            if d.is_delta:
                raise ConfigurationError(
                    "point-mass distribution has no grid density to export"
                )
            payload = {
                "lambda": [float(x) for x in d.grid.nodes],
                "density": [float(w) for w in d.weights],
            }
            json.dump(payload, stream)
            stream.write("\n")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "ensemble": _cmd_ensemble,
    "ghz": _cmd_ghz,
    "export-dist": _cmd_export_dist,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        if args.command == "oracle":
            if args.oracle_command == "enumerate":
                return _cmd_oracle_enumerate(args)
            if args.oracle_command == "fewbody":
                return _cmd_oracle_fewbody(args)
            parser.print_usage(sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"spinphase: error: {exc}", file=sys.stderr)
        return 1
    except _VALIDATION_ERRORS as exc:
        print(f"spinphase: error: {exc}", file=sys.stderr)
        return 1
    except (SpinPhaseError, OSError) as exc:
        print(f"spinphase: runtime error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

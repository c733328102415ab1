"""Trajectory engine and sequence-probability evaluators.

The closed-form oracle for same-angle sequences on a flat phase prior is
the Beta-function identity

    integral over [0, 2*pi) of dx/(2*pi) cos(x/2)^(2a) sin(x/2)^(2b)
        = B(a + 1/2, b + 1/2) / pi,

evaluated with log-gamma, independent of the grid quadrature under test.
"""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinphase import (
    BudgetError,
    ConfigurationError,
    DoubleFock,
    Ghz,
    MeasurementRecord,
    MeasurementSpec,
    PhaseState,
    Trajectory,
    UnsupportedStateError,
    chain_probability,
    circular_stats,
    ghz_sequence_probability,
    joint_probability,
    prior_distribution,
    run_trajectory,
    update,
    write_records_csv,
)


def same_angle_probability(n_plus: int, n_minus: int) -> float:
    """Flat-prior probability of a same-angle sequence with given counts."""
    log_beta = (
        math.lgamma(n_plus + 0.5)
        + math.lgamma(n_minus + 0.5)
        - math.lgamma(n_plus + n_minus + 1.0)
    )
    return math.exp(log_beta) / math.pi


DF = DoubleFock(1000, 1000)


# ---------------------------------------------------------------------------
# joint probability
# ---------------------------------------------------------------------------

def test_joint_same_angle_closed_forms():
    assert same_angle_probability(2, 0) == pytest.approx(3.0 / 8.0, rel=1e-13)
    assert same_angle_probability(1, 1) == pytest.approx(1.0 / 8.0, rel=1e-13)
    assert joint_probability(DF, [(0.0, 1), (0.0, 1)]) == pytest.approx(
        3.0 / 8.0, abs=1e-12
    )
    assert joint_probability(DF, [(0.0, 1), (0.0, -1)]) == pytest.approx(
        1.0 / 8.0, abs=1e-12
    )


@pytest.mark.parametrize("n_plus,n_minus", [(3, 0), (2, 2), (5, 1), (4, 3)])
def test_joint_same_angle_matches_beta_oracle(n_plus, n_minus):
    records = [(1.234, 1)] * n_plus + [(1.234, -1)] * n_minus
    assert joint_probability(DF, records) == pytest.approx(
        same_angle_probability(n_plus, n_minus), rel=1e-12
    )


def test_joint_single_measurement_is_half():
    for phi in (0.0, 0.7, 3.9):
        assert joint_probability(DF, [(phi, 1)]) == pytest.approx(0.5, abs=1e-13)
        assert joint_probability(DF, [(phi, -1)]) == pytest.approx(0.5, abs=1e-13)


def test_joint_empty_sequence_is_one():
    assert joint_probability(DF, []) == 1.0


def test_joint_order_and_party_invariant():
    rng = np.random.default_rng(11)
    pairs = [(rng.uniform(0, 2 * math.pi), rng.choice([1, -1])) for _ in range(7)]
    reference = joint_probability(DF, pairs)
    for _ in range(5):
        perm = list(rng.permutation(len(pairs)))
        assert joint_probability(DF, [pairs[i] for i in perm]) == pytest.approx(
            reference, rel=1e-12
        )
    # party labels are bookkeeping only
    records = [
        MeasurementRecord(
            index=i,
            spec=MeasurementSpec(party="bob" if i % 2 else "alice", phi=phi),
            eta=int(eta),
        )
        for i, (phi, eta) in enumerate(pairs)
    ]
    assert joint_probability(DF, records) == pytest.approx(reference, rel=1e-14)


def test_joint_phase_state_is_plain_product():
    state = PhaseState(0.9, 1000)
    pairs = [(0.1, 1), (2.0, -1), (0.9, 1), (4.4, -1)]
    expected = 1.0
    for phi, eta in pairs:
        expected *= 0.5 * (1.0 + eta * math.cos(state.lambda0 - phi))
    assert joint_probability(state, pairs) == pytest.approx(expected, rel=1e-14)
    # aligned outcomes are certain
    assert joint_probability(state, [(0.9, 1)] * 10) == pytest.approx(1.0, abs=1e-12)


def test_joint_ghz_unsupported():
    with pytest.raises(UnsupportedStateError):
        joint_probability(Ghz(10), [(0.0, 1)])


# ---------------------------------------------------------------------------
# chain rule
# ---------------------------------------------------------------------------

def test_chain_single_record_is_half():
    assert chain_probability(DF, [(2.2, 1)]) == pytest.approx(0.5, abs=1e-13)


def test_chain_two_plus_factorizes():
    # 1/2 from the flat prior, then 3/4 on the once-updated posterior
    assert chain_probability(DF, [(0.0, 1), (0.0, 1)]) == pytest.approx(
        3.0 / 8.0, rel=1e-12
    )


def test_chain_phase_state_equals_product():
    state = PhaseState(2.5, 1000)
    pairs = [(2.5, 1), (1.0, -1), (0.3, 1)]
    assert chain_probability(state, pairs) == pytest.approx(
        joint_probability(state, pairs), rel=1e-14
    )


@settings(max_examples=80, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(0.0, 6.28), st.sampled_from([1, -1])),
        min_size=1,
        max_size=8,
    )
)
def test_chain_equals_joint(pairs):
    joint = joint_probability(DF, pairs)
    chain = chain_probability(DF, pairs)
    assert chain == pytest.approx(joint, rel=1e-10)


# ---------------------------------------------------------------------------
# ghz sequences
# ---------------------------------------------------------------------------

def test_ghz_sequence_probability_values():
    assert ghz_sequence_probability([]) == 1.0
    assert ghz_sequence_probability([1]) == 0.5
    assert ghz_sequence_probability([-1, -1, -1]) == 0.5
    assert ghz_sequence_probability([1, -1]) == 0.0
    with pytest.raises(ConfigurationError):
        ghz_sequence_probability([1, 0])


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

def test_run_trajectory_phase_state_certain_outcomes():
    result = run_trajectory(PhaseState(0.0, 1000), [("alice", 0.0)] * 10, rng=5)
    assert [r.eta for r in result.records] == [1] * 10


def test_run_trajectory_empty_plan():
    result = run_trajectory(DoubleFock(100, 100), [], rng=0, grid_size=64)
    assert result.records == []
    assert result.final_distribution == prior_distribution(DoubleFock(100, 100), 64)


def test_run_trajectory_reproducible():
    plan = [("alice", 0.0)] * 8 + [("bob", 1.0)] * 8
    a = run_trajectory(DoubleFock(500, 500), plan, rng=99, grid_size=128)
    b = run_trajectory(DoubleFock(500, 500), plan, rng=99, grid_size=128)
    assert [(r.party, r.phi, r.eta) for r in a.records] == [
        (r.party, r.phi, r.eta) for r in b.records
    ]
    assert a.final_distribution == b.final_distribution


def test_run_trajectory_final_distribution_recomputable():
    plan = [("alice", 0.3)] * 10 + [("bob", 1.9)] * 10
    result = run_trajectory(DoubleFock(500, 500), plan, rng=4, grid_size=128)
    d = prior_distribution(DoubleFock(500, 500), 128)
    for r in result.records:
        d = update(d, r.phi, r.eta)
    scale = np.maximum(np.abs(result.final_distribution.weights), 1e-300)
    assert np.all(
        np.abs(result.final_distribution.weights - d.weights) / scale <= 1e-9
    )


def test_run_trajectory_record_indices_consecutive():
    result = run_trajectory(DoubleFock(500, 500), [0.0, 1.0, 2.0], rng=1, grid_size=64)
    assert [r.index for r in result.records] == [0, 1, 2]


def test_run_trajectory_snapshots():
    result = run_trajectory(
        DoubleFock(500, 500), [0.0] * 10, rng=1, grid_size=64, snapshot_every=3
    )
    assert [i for i, _ in result.snapshots] == [2, 5, 8]
    # snapshot holds the distribution right after that measurement
    d = prior_distribution(DoubleFock(500, 500), 64)
    for r in result.records[:3]:
        d = update(d, r.phi, r.eta)
    assert result.snapshots[0][1] == d


def test_run_trajectory_budget_checked_upfront():
    with pytest.raises(BudgetError):
        run_trajectory(DoubleFock(30, 30), [0.0] * 7, rng=0, grid_size=64)


def test_run_trajectory_rejects_ghz():
    with pytest.raises(UnsupportedStateError):
        run_trajectory(Ghz(100), [0.0], rng=0)


def test_trajectory_ledgers_per_party():
    traj = Trajectory(DoubleFock(500, 500), rng=8, grid_size=64)
    traj.measure(0.0, "alice")
    traj.measure(0.0, "alice")
    traj.measure(1.0, "bob")
    assert set(traj.ledgers) == {"alice", "bob"}
    assert len(traj.ledgers["alice"].entries) == 2
    assert len(traj.ledgers["bob"].entries) == 1


def test_trajectory_rejects_unknown_party():
    traj = Trajectory(DoubleFock(500, 500), rng=8, grid_size=64)
    with pytest.raises(ConfigurationError):
        traj.measure(0.0, "carol")


def test_flat_prior_series_counts():
    # mixture oracle: n+ over P flat-prior same-angle measurements has
    # mean P/2 and variance P*E[f(1-f)] + P^2*Var(f) with f = (1+cos)/2,
    # i.e. P/8 + P^2/8
    n_traj, p = 400, 300
    mean_oracle = p / 2.0
    sigma_oracle = math.sqrt(p / 8.0 + p * p / 8.0)
    counts = []
    for seed in range(n_traj):
        result = run_trajectory(
            DoubleFock(10_000, 10_000), [0.0] * p, rng=seed, grid_size=256
        )
        counts.append(sum(1 for r in result.records if r.eta == 1))
    counts = np.asarray(counts, dtype=float)
    assert abs(counts.mean() - mean_oracle) <= 3.0 * sigma_oracle / math.sqrt(n_traj)
    assert abs(counts.std() - sigma_oracle) <= 0.15 * sigma_oracle


def test_posterior_sharpens_but_same_angle_leaves_sign_ambiguous():
    # A same-angle series cannot tell the polarization sign: the posterior
    # becomes a sharp symmetric double peak, so the sign-blind second
    # trigonometric moment grows large while the first moment may stay
    # small.  A perpendicular series then collapses it to a single peak.
    traj = Trajectory(DoubleFock(10_000, 10_000), rng=12, grid_size=512)
    for _ in range(300):
        traj.measure(0.0, "alice")

    def trig_moment(dist, order):
        values = dist.weights * np.exp(1j * order * dist.grid.nodes)
        return abs(2 * math.pi * np.mean(values))

    assert trig_moment(traj.distribution, 2) > 0.8
    assert circular_stats(traj.distribution).concentration < 0.9
    for _ in range(300):
        traj.measure(math.pi / 2.0, "alice")
    assert circular_stats(traj.distribution).concentration > 0.9


def test_write_records_csv():
    result = run_trajectory(DoubleFock(500, 500), [0.0, 1.5], rng=3, grid_size=64)
    buffer = io.StringIO()
    write_records_csv(result.records, buffer)
    lines = buffer.getvalue().strip().split("\n")
    assert lines[0] == "index,party,phi,eta"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "0" and first[1] == "alice"
    assert first[3] in ("1", "-1")

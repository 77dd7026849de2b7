from __future__ import annotations

from escooter_balance.dynamics import CouplingSign
from escooter_balance.verify import (
    CHECKS,
    LYAPUNOV_LAMBDA_FRACTIONS,
    ORACLE_RTOL,
    VerifyContext,
    oracle_errors,
    run_checks,
)


def test_check_names_are_unique():
    names = [name for name, _ in CHECKS]
    assert len(names) == len(set(names)) == 10


def test_bound_arithmetic_passes():
    (result,) = run_checks("bound_arithmetic")
    assert result.passed, result.detail
    assert "M=2.1584" in result.detail


def test_oracle_singles_out_one_coupling_sign():
    worst = oracle_errors(VerifyContext().scenario("paper_scenario_pd"), samples=200)
    assert worst[CouplingSign.ORACLE] <= ORACLE_RTOL
    assert worst[CouplingSign.PAPER] > 1e-3

    (result,) = run_checks("euler_lagrange_oracle")
    assert result.passed
    assert result.detail.startswith("matched sign: oracle")


def test_error_system_equivalence_passes():
    (result,) = run_checks("error_system_equivalence")
    assert result.passed, result.detail


def test_energy_is_conserved_without_control():
    (result,) = run_checks("pendulum_energy")
    assert result.passed, result.detail


def test_invalid_override_turns_into_failures():
    results = run_checks("bound_arithmetic", ["gains.kd=0"])
    assert [r.passed for r in results] == [False]
    assert results[0].detail.startswith("error:")


def test_filter_without_match_runs_nothing():
    assert run_checks("no-such-check") == []


def test_context_caches_trajectories():
    ctx = VerifyContext(overrides=("horizon=0.2",))
    assert ctx.trajectory("paper_scenario_pd") is ctx.trajectory("paper_scenario_pd")


def test_lyapunov_check_evaluates_samples_outside_the_bands():
    (result,) = run_checks("lyapunov_sign")
    assert result.passed, result.detail
    tilted = result.detail.split("tilted: ")[1]
    assert not tilted.startswith("V1 0/0")
    assert ", V2 0/0 " not in tilted
    assert tilted.split("lambda=")[1].count(",") == len(LYAPUNOV_LAMBDA_FRACTIONS) - 1

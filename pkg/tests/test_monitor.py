from __future__ import annotations

import math

import pytest

from escooter_balance.control import lambda_admissible_range, theta_bound, theta_dot_bound
from escooter_balance.data_loader import load_scenario
from escooter_balance.entities import Gains, RollState
from escooter_balance.sim.engine import ControllerKind, Trajectory, TrajectorySample, run
from escooter_balance.sim.monitor import (
    BoundKind,
    check_bounds,
    check_lyapunov_decrease,
    pendulum_energy,
    summarize,
)

GAINS = Gains(kp=300.0, kd=80.0)
M = 2.1584
G = 46.6956


def synthetic(thetas, *, u_val: float = G) -> Trajectory:
    samples = tuple(
        TrajectorySample(
            t=0.1 * k,
            theta=theta,
            theta_dot=0.0,
            tau=0.0,
            v=0.0,
            delta=0.0,
            psi_dot=0.0,
            psi_ddot=0.0,
            C=0.0,
            G=u_val,
            U=u_val,
            theta_bound=theta_bound(u_val, GAINS, M),
            theta_dot_bound=theta_dot_bound(u_val, GAINS),
            V1=0.0,
            V2=0.0,
        )
        for k, theta in enumerate(thetas)
    )
    return Trajectory(
        scenario_name="synthetic",
        controller=ControllerKind.PD,
        gains=GAINS,
        M=M,
        lambda_v2=3.7,
        K_v2=k_from(3.7),
        samples=samples,
    )


def k_from(lam: float) -> float:
    return -M * lam**2 + GAINS.kd * lam + GAINS.kp


def test_synthetic_violation_is_reported():
    band = theta_bound(G, GAINS, M)
    verdict = check_bounds(synthetic([0.5, 0.1, 0.05, band + 0.01, 0.02]), BoundKind.THETA)
    assert verdict.entered
    assert verdict.t_entry == pytest.approx(0.1)
    assert not verdict.contained
    assert verdict.max_violation == pytest.approx(0.01)


def test_never_entering_is_a_verdict():
    verdict = check_bounds(synthetic([1.0, 0.9, 0.8]), "theta")
    assert not verdict.entered
    assert verdict.t_entry is None
    assert not verdict.contained


def test_containment_tolerates_round_off_on_the_band():
    band = theta_bound(G, GAINS, M)
    verdict = check_bounds(synthetic([0.0, band * (1 + 1e-10), -band]), BoundKind.THETA)
    assert verdict.contained
    assert verdict.max_violation < 1e-9 * band


def test_zero_band_is_reachable():
    verdict = check_bounds(synthetic([0.1, 1e-3, 1e-13, 0.0], u_val=0.0), BoundKind.THETA)
    assert verdict.entered and verdict.contained
    assert verdict.t_entry == pytest.approx(0.2)


def test_pendulum_energy_formula():
    assert pendulum_energy(M, G, RollState(0.0, 0.0)) == G
    assert pendulum_energy(M, G, RollState(math.pi / 2, 2.0)) == pytest.approx(0.5 * M * 4.0, abs=1e-12)


def test_pd_run_stays_inside_both_bands(pd_run):
    assert not pd_run.capsized
    angle = check_bounds(pd_run, BoundKind.THETA)
    rate = check_bounds(pd_run, BoundKind.THETA_DOT)
    assert angle.entered and angle.contained
    assert rate.entered and rate.contained
    assert angle.band == pytest.approx(theta_bound(pd_run.u_max, GAINS, pd_run.M))
    assert pd_run.u_max > G


def test_pd_run_has_no_lyapunov_violations(pd_run):
    report = check_lyapunov_decrease(pd_run)
    assert report.clean
    assert report.lambdas == (pd_run.lambda_v2,)


def test_tilted_start_exercises_both_decrease_conditions():
    traj = run(load_scenario("paper_scenario_pd", ["initial.theta=30deg", "horizon=5"]))
    _, upper = lambda_admissible_range(traj.gains, traj.M)
    lambdas = [0.1 * upper, 0.25 * upper, 0.5 * upper, 0.75 * upper]
    report = check_lyapunov_decrease(traj, lambdas=lambdas)
    outside = sum(abs(s.theta) > traj.theta_band for s in traj.samples)
    assert not traj.capsized
    assert report.v1_checked > 0
    assert outside > 0 and report.v2_checked == outside * len(lambdas)
    assert report.clean, report


def test_lyapunov_check_rejects_inadmissible_lambda(pd_run):
    with pytest.raises(ValueError):
        check_lyapunov_decrease(pd_run, lambdas=[100.0])


def test_uncertain_flpd_band_is_narrower_than_pd(pd_run, pdflu_run):
    flpd = summarize(pdflu_run)
    pd = summarize(pd_run)
    assert flpd.theta.entered and flpd.theta.contained
    assert flpd.theta_band < pd.theta_band
    assert flpd.sup_theta_after_entry < pd.sup_theta_after_entry


def test_summary_matches_trajectory(pd_run):
    summary = summarize(pd_run)
    assert summary.samples == len(pd_run) == 20001
    assert summary.u_max == pd_run.u_max
    assert summary.sup_theta == pytest.approx(math.radians(10.0))
    assert summary.max_abs_v_dot == pytest.approx(1.25, rel=1e-4)
    assert summary.coupling_sign == "paper"
    payload = summary.to_dict()
    assert payload["theta"]["contained"] is True
    assert payload["lyapunov"]["lambdas"] == [pd_run.lambda_v2]

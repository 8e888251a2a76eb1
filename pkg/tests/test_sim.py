"""Closed-loop runner: integrator, metrics, comparisons, artifacts."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from offsetsteer import (OffsetSteerError, PathSpec, PathState, ScenarioConfig,
                         compare_controllers, desired_yaw_error, linearize,
                         run_scenario, step_rk4, write_metrics,
                         write_trajectory_csv)
from offsetsteer.sim import TRAJECTORY_COLUMNS

from conftest import (CIRCLE_RADIUS, COSINE_KAPPA_MAX, COSINE_PERIOD,
                      COSINE_PERIODS, K2, benchmark_control, benchmark_params,
                      cosine_spec, make_scenario)


# -- integrator ----------------------------------------------------------------

def test_step_rk4_zero_field():
    state = (1.0, -2.0, 0.5)
    assert step_rk4(lambda s, g: (0.0, 0.0, 0.0), state, 0.0, 0.1) == state


def test_step_rk4_constant_velocity_exact():
    state = (0.0,)
    for _ in range(1000):
        state = step_rk4(lambda s, g: (20.0,), state, 0.0, 1e-3)
    assert state[0] == pytest.approx(20.0, rel=1e-12)


def test_step_rk4_quartic_polynomial_exact():
    # RK4 integrates polynomials of degree <= 3 in time exactly (so the
    # quartic state is recovered to rounding).
    state = (0.0, 0.0)

    def field(st, _):
        t = st[1]
        return (4.0 * t ** 3, 1.0)

    for _ in range(100):
        state = step_rk4(field, state, 0.0, 0.01)
    assert state[0] == pytest.approx(1.0, rel=1e-12)


def test_step_rk4_aborts_on_divergence():
    with pytest.raises(OffsetSteerError):
        step_rk4(lambda s, g: (math.inf,), (0.0,), 0.0, 1e-3)


def test_integration_refinement_converges(runs):
    # Identical 1 ms steering updates, finer integration grid: fourth-order
    # refinement leaves the final state essentially unchanged.
    coarse = runs("cosine_full")[0]
    fine = runs("cosine_full_dt_half")[0]
    assert abs(coarse.s_d[-1] - fine.s_d[-1]) < 1e-8
    assert abs(coarse.e_d[-1] - fine.e_d[-1]) < 1e-8
    assert abs(coarse.theta_d[-1] - fine.theta_d[-1]) < 1e-8


# -- runner behavior --------------------------------------------------------------

def test_run_scenario_deterministic():
    cfg = make_scenario(PathSpec.straight(), t_end=2.0)
    first, _ = run_scenario(cfg)
    second, _ = run_scenario(cfg)
    for name, signal in first.signals().items():
        np.testing.assert_array_equal(signal, second.signals()[name], err_msg=name)


def test_run_scenario_row_layout(runs):
    traj, _ = runs("straight_full")
    assert traj.t[0] == 0.0
    assert traj.t[-1] == pytest.approx(30.0, abs=1e-12)
    steps = np.diff(traj.t)
    np.testing.assert_allclose(steps, 1e-3, rtol=1e-9)
    assert np.all(traj.theta_d >= -math.pi) and np.all(traj.theta_d < math.pi)


def test_equilibrium_preserved_on_circle(params):
    kappa = 1.0 / CIRCLE_RADIUS
    theta_0 = desired_yaw_error(kappa, params.sensor_offset)
    cfg = make_scenario(PathSpec.circular(CIRCLE_RADIUS),
                        initial=PathState(0.0, 0.0, theta_0), t_end=50.0)
    traj, metrics = run_scenario(cfg)
    assert np.abs(traj.e_d).max() < 1e-9
    assert np.abs(traj.theta_hat).max() < 1e-9
    assert np.abs(traj.gamma_fb).max() < 1e-9
    assert metrics.overshoot == 0.0


def test_frame_consistency_for_standard_runs(runs):
    for name in ("straight_full", "circular_naive", "cosine_full", "cosine_positive"):
        traj, _ = runs(name)
        pos_err, psi_err = traj.frame_mismatch()
        assert pos_err < 1e-6, name
        assert psi_err < 1e-7, name


def test_small_perturbations_follow_linear_model(params):
    # Matrix-exponential oracle for the reduced linear model on a constant
    # curvature; the nonlinear run must track it to 1% of the perturbation.
    kappa0 = 1.0 / CIRCLE_RADIUS
    theta_0 = desired_yaw_error(kappa0, params.sensor_offset)
    eps = 1e-3
    cfg = make_scenario(PathSpec.circular(CIRCLE_RADIUS),
                        initial=PathState(0.0, eps, theta_0), t_end=2.5)
    traj, _ = run_scenario(cfg)
    model = linearize(kappa0, -0.8, K2, params)
    x0 = np.array([eps, 0.0])
    worst = 0.0
    for t in np.arange(0.0, 2.5001, 0.1):
        i = int(round(t / cfg.dt))
        predicted = expm(model.a * t) @ x0
        actual = np.array([traj.e_d[i], traj.theta_hat[i]])
        worst = max(worst, float(np.linalg.norm(actual - predicted)))
    assert worst <= 0.01 * float(np.linalg.norm(x0))


def test_naive_circular_steady_state_matches_fixed_point(runs):
    # Steady state of the rear-axle law on the ring road, solved to 40
    # digits from the stationarity conditions of the path dynamics plus the
    # control law: e = 0.4992263266, theta = -0.0100251917,
    # gamma_fb = 3.2797510754e-5.
    traj, metrics = runs("circular_naive")
    tail = slice(int(0.8 * traj.t.size), None)
    assert metrics.steady_e == pytest.approx(0.499226326635807, abs=1e-3)
    assert float(traj.theta_d[tail].mean()) == pytest.approx(-0.010025191707562, abs=1e-5)
    assert float(traj.gamma_fb[tail].mean()) == pytest.approx(3.27975107541637e-5, abs=1e-6)
    # Nonzero standing feedback and deviation are the point; the offset-aware
    # law removes both (checked in the acceptance suite).


def test_singularity_abort():
    # Start just inside the curvature-center guard band of a tight circle.
    cfg = ScenarioConfig(path_spec=PathSpec.circular(20.0),
                         vehicle=benchmark_params(),
                         control=benchmark_control("full"),
                         initial=PathState(0.0, 20.0 * (1.0 - 5e-7), 1.3),
                         dt=1e-3, t_end=10.0, frame="path")
    with pytest.raises(OffsetSteerError, match="singularity"):
        run_scenario(cfg)


# -- metrics -----------------------------------------------------------------------

def test_settling_time_definition(runs):
    traj, metrics = runs("straight_full")
    above = np.flatnonzero(np.abs(traj.e_d) >= 0.01)
    assert metrics.settling_time == pytest.approx(traj.t[above[-1] + 1], abs=1e-12)
    assert 15.0 < metrics.settling_time < 20.0


def test_straight_run_has_no_overshoot(runs):
    _, metrics = runs("straight_full")
    assert metrics.overshoot == 0.0


def test_saturation_fraction_counts_bound_hits(runs):
    traj, metrics = runs("straight_full")
    assert metrics.saturation_fraction == pytest.approx(float(traj.fb_saturated.mean()))
    assert 0.0 < metrics.saturation_fraction < 0.2


def test_sway_window_uses_last_curvature_period(runs):
    traj, metrics = runs("cosine_full")
    lo = (COSINE_PERIODS - 1) * COSINE_PERIOD
    hi = COSINE_PERIODS * COSINE_PERIOD
    window = traj.e_d[(traj.s_d >= lo) & (traj.s_d <= hi)]
    assert metrics.sway_amplitude == pytest.approx(
        0.5 * (window.max() - window.min()), rel=1e-12)


# -- controller comparisons -----------------------------------------------------------

def test_compare_straight_variants_identical():
    cfg = make_scenario(PathSpec.straight(), t_end=10.0)
    report = compare_controllers(cfg, ("naive", "full"))
    assert not report.failures
    for signal, delta in report.deltas["full"].items():
        assert delta < 1e-12, signal


def test_compare_cosine_quantifies_sway_gap(runs):
    _, full = runs("cosine_full")
    _, naive = runs("cosine_naive")
    assert full.sway_amplitude < 0.05
    assert naive.sway_amplitude > 5.0 * full.sway_amplitude


def test_compare_records_failures_per_variant():
    # The linear law turns a quarter-kilometer error into a command beyond
    # pi/2, which the plant rejects; the full law survives the same start.
    cfg = make_scenario(PathSpec.straight(), t_end=5.0,
                        initial=PathState(0.0, -math.pi / K2, 0.0))
    report = compare_controllers(cfg, ("full", "linear"))
    assert "full" in report.results
    assert "linear" in report.failures
    assert "DomainError" in report.failures["linear"]


def test_sampled_profile_reproduces_analytic_run():
    # A 0.5 m tabulation of the cosine profile drives the loop through the
    # sampled-path machinery; the trajectory must match the analytic kind.
    s_tab = np.arange(0.0, 1201.0, 0.5)
    omega = 2.0 * math.pi / COSINE_PERIOD
    k_tab = np.where(s_tab <= COSINE_PERIODS * COSINE_PERIOD,
                     0.5 * COSINE_KAPPA_MAX * (1.0 - np.cos(omega * s_tab)), 0.0)
    sampled = make_scenario(PathSpec.sampled(s_tab, k_tab), t_end=20.0)
    analytic = make_scenario(cosine_spec(), t_end=20.0)
    traj_s, _ = run_scenario(sampled)
    traj_a, _ = run_scenario(analytic)
    assert np.abs(traj_s.e_d - traj_a.e_d).max() < 1e-5
    assert np.abs(traj_s.s_d - traj_a.s_d).max() < 1e-4


# -- artifacts ------------------------------------------------------------------------

def test_trajectory_csv_layout(tmp_path):
    cfg = make_scenario(PathSpec.straight(), t_end=0.1)
    traj, metrics = run_scenario(cfg)
    out = tmp_path / "trajectory.csv"
    write_trajectory_csv(traj, out)
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
    assert len(lines) == 1 + traj.t.size
    row = [float(v) for v in lines[1].split(",")]
    assert row[:3] == [0.0, 0.0, -10.0]
    write_trajectory_csv(traj, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_bytes() == out.read_bytes()


def test_metrics_files(tmp_path):
    cfg = make_scenario(PathSpec.straight(), t_end=0.5)
    _, metrics = run_scenario(cfg)
    write_metrics(metrics, tmp_path / "m.txt", tmp_path / "m.json")
    text = (tmp_path / "m.txt").read_text()
    assert "steady_e_m=" in text and "saturation_fraction=" in text
    import json
    data = json.loads((tmp_path / "m.json").read_text())
    assert set(data) == set(metrics.as_dict())


def test_config_validation_errors():
    with pytest.raises(OffsetSteerError):
        ScenarioConfig(path_spec=PathSpec.straight(), vehicle=benchmark_params(),
                       control=benchmark_control(), initial=PathState(0, 0, 0),
                       dt=-1.0)
    with pytest.raises(OffsetSteerError):
        ScenarioConfig(path_spec=PathSpec.straight(), vehicle=benchmark_params(),
                       control=benchmark_control(), initial=PathState(0, 0, 0),
                       dt=1e-3, control_dt=2.5e-3)
    with pytest.raises(OffsetSteerError):
        ScenarioConfig(path_spec=PathSpec.straight(), vehicle=benchmark_params(),
                       control=benchmark_control(), initial=PathState(0, 0, 0),
                       dt=1e-3, frame="sideways")


def test_untrackable_path_aborts():
    cfg = ScenarioConfig(path_spec=PathSpec.circular(1.5),
                         vehicle=benchmark_params(),
                         control=benchmark_control("naive"),
                         initial=PathState(0.0, 0.0, 0.0),
                         dt=1e-3, t_end=1.0, frame="path")
    with pytest.raises(OffsetSteerError):
        run_scenario(cfg)

"""Shared fixtures: benchmark vehicle and cached closed-loop runs."""

from __future__ import annotations

import math

import pytest

from offsetsteer import (ControlConfig, PathSpec, PathState, ScenarioConfig,
                         VehicleParams, run_scenario)

# Benchmark vehicle (compact hatchback) and gains used across the suite.
WHEELBASE = 2.57          # [m]
SENSOR_OFFSET = 2.0       # [m]
MAX_STEER_DEG = 30.0
SPEED = 20.0              # [m/s]
K1 = -0.8
K2 = 0.02                 # [1/m]
MAX_LAT_ACCEL = 4.0       # [m/s^2]

COSINE_KAPPA_MAX = 0.004 * math.pi  # [1/m]
COSINE_PERIOD = 250.0               # [m]
COSINE_PERIODS = 4
CIRCLE_RADIUS = 200.0               # [m]


def benchmark_params(**overrides) -> VehicleParams:
    values = dict(wheelbase=WHEELBASE, sensor_offset=SENSOR_OFFSET,
                  max_steer=math.radians(MAX_STEER_DEG), speed=SPEED)
    values.update(overrides)
    return VehicleParams(**values)


def benchmark_control(variant="full", k1=K1, k2=K2) -> ControlConfig:
    return ControlConfig(k1=k1, k2=k2, max_lat_accel=MAX_LAT_ACCEL, variant=variant)


def cosine_spec() -> PathSpec:
    return PathSpec.cosine(COSINE_KAPPA_MAX, COSINE_PERIOD, COSINE_PERIODS)


def make_scenario(path_spec: PathSpec, variant="full", k1=K1, k2=K2,
                  dt=1e-3, control_dt=None, t_end=None,
                  initial=PathState(0.0, -10.0, 0.0)) -> ScenarioConfig:
    return ScenarioConfig(path_spec=path_spec, vehicle=benchmark_params(),
                          control=benchmark_control(variant, k1, k2),
                          initial=initial, dt=dt, control_dt=control_dt,
                          t_end=t_end, frame="both")


# Every standard study scenario, built lazily and cached for the session.
_SCENARIOS = {
    "straight_full": lambda: make_scenario(PathSpec.straight(), "full"),
    "straight_naive": lambda: make_scenario(PathSpec.straight(), "naive"),
    "circular_full": lambda: make_scenario(PathSpec.circular(CIRCLE_RADIUS), "full"),
    "circular_naive": lambda: make_scenario(PathSpec.circular(CIRCLE_RADIUS), "naive"),
    "cosine_full": lambda: make_scenario(cosine_spec(), "full"),
    "cosine_naive": lambda: make_scenario(cosine_spec(), "naive"),
    "cosine_optimal": lambda: make_scenario(
        cosine_spec(), "full", k1=-WHEELBASE / SENSOR_OFFSET),
    "cosine_positive": lambda: make_scenario(cosine_spec(), "full", k1=0.8, k2=-2.0),
    # Same sampled-data system as cosine_full (1 ms steering updates) but
    # integrated at half the step, for convergence checks.
    "cosine_full_dt_half": lambda: make_scenario(
        cosine_spec(), "full", dt=5e-4, control_dt=1e-3),
}


@pytest.fixture(scope="session")
def runs():
    """Session-cached scenario runner: runs('name') -> (Trajectory, metrics)."""
    cache = {}

    def get(name: str):
        if name not in cache:
            cache[name] = run_scenario(_SCENARIOS[name]())
        return cache[name]

    return get


@pytest.fixture(scope="session")
def params() -> VehicleParams:
    return benchmark_params()

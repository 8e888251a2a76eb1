"""Kinematic bicycle model with the guidance point mounted at an offset.

The wheels roll without side slip, the longitudinal speed is constant and
the steering angle is assigned directly. The guidance point A sits on the
symmetry axis at distance ``sensor_offset`` ahead of the rear axle center;
its motion is evaluated in the earth frame, in the path frame, and in the
path frame with the heading error measured from its curvature-dependent
desired value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConfigError, DomainError, SingularityError
from .paths import EarthState, PathState

_HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float       # l: front-to-rear axle distance [m]
    sensor_offset: float   # d: guidance point ahead of rear axle [m]
    max_steer: float       # physical steering limit [rad]
    speed: float           # constant longitudinal speed, forward [m/s]

    def __post_init__(self):
        if self.wheelbase <= 0.0:
            raise ConfigError(f"wheelbase must be positive, got {self.wheelbase}")
        if self.speed <= 0.0:
            raise ConfigError(f"speed must be positive (forward motion), got {self.speed}")
        if not 0.0 < self.max_steer < _HALF_PI:
            raise ConfigError(f"max_steer must lie in (0, pi/2), got {self.max_steer}")


class HatPathState(NamedTuple):
    """Path-frame state with heading error measured from its desired value."""

    s: float          # [m]
    e: float          # [m]
    theta_hat: float  # theta - theta_0 [rad]


def _check_steer(steer: float) -> None:
    if abs(steer) >= _HALF_PI:
        raise DomainError(f"steering angle {steer:.6g} rad outside (-pi/2, pi/2)")


def earth_derivatives(state: EarthState, steer: float,
                      params: VehicleParams) -> tuple[float, float, float]:
    """Time derivatives (x_dot, y_dot, psi_dot) of the guidance point."""
    _check_steer(steer)
    _, _, psi = state
    v = params.speed
    ratio = params.sensor_offset / params.wheelbase
    tan_g = math.tan(steer)
    cos_psi = math.cos(psi)
    sin_psi = math.sin(psi)
    return (v * (cos_psi - ratio * sin_psi * tan_g),
            v * (sin_psi + ratio * cos_psi * tan_g),
            v / params.wheelbase * tan_g)


def path_derivatives(state: PathState, steer: float, params: VehicleParams,
                     kappa: float) -> tuple[float, float, float]:
    """Time derivatives (s_dot, e_dot, theta_dot) in the path frame.

    ``kappa`` is the path curvature at the current arc length.

    Raises:
        SingularityError: the state reached the curvature-center circle
            (1 - e*kappa = 0), where the path frame degenerates.
    """
    _check_steer(steer)
    s, e, theta = state
    v = params.speed
    ratio = params.sensor_offset / params.wheelbase
    tan_g = math.tan(steer)
    denom = 1.0 - e * kappa
    if abs(denom) < 1e-12:
        raise SingularityError(
            f"curvature-center singularity: 1 - e*kappa = {denom:.3g} at s={s:.6g}")
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    along = cos_t - ratio * tan_g * sin_t
    s_dot = v * along / denom
    e_dot = v * (sin_t + ratio * tan_g * cos_t)
    theta_dot = v / params.wheelbase * tan_g - kappa * s_dot
    return s_dot, e_dot, theta_dot


def hat_path_derivatives(state: HatPathState, steer: float, params: VehicleParams,
                         kappa: float, kappa_rate: float) -> tuple[float, float, float]:
    """Path-frame derivatives with the heading error shifted by its desired value.

    ``kappa_rate`` is the time derivative of the curvature seen by the
    vehicle, i.e. (dkappa/ds) * s_dot from the same instant.

    Raises:
        DomainError: |sensor_offset * kappa| >= 1, the path cannot be
            tracked by a sensor this far from the rear axle.
    """
    d = params.sensor_offset
    dk = d * kappa
    if abs(dk) >= 1.0:
        raise DomainError(
            f"path untrackable for sensor offset: |d*kappa| = {abs(dk):.6g} >= 1")
    lam = math.sqrt(1.0 - dk * dk)
    theta_0 = -math.asin(dk)
    s_dot, e_dot, theta_dot = path_derivatives(
        PathState(state.s, state.e, state.theta_hat + theta_0), steer, params, kappa)
    return s_dot, e_dot, theta_dot + d * kappa_rate / lam


def rear_axle_lateral_accel(speed: float, steer: float, wheelbase: float) -> float:
    """Lateral acceleration of the rear axle center: V^2 * tan(steer) / l."""
    _check_steer(steer)
    return speed * speed * math.tan(steer) / wheelbase

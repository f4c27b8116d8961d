"""Constant-velocity Kalman filter over bounding-box state.

The state is the 8-vector (cx, cy, aspect, h, vcx, vcy, vaspect, vh):
box center, width/height ratio, height, and their per-frame velocities.
One frame is one time step. Process and measurement standard deviations
scale linearly with the box height so uncertainty tracks droplet size;
the proportionality factors live in :class:`NoiseConfig`.

Covariances are propagated in plain (non-square-root) form: at 8x8 the
conditioning headroom is enormous, and the symmetric-PSD property is
pinned by tests instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# chi-square 0.95 quantile, 4 degrees of freedom: default association gate
GATING_THRESHOLD_95 = 9.4877

_DIM = 8

_MOTION = np.eye(_DIM)
for _i in range(4):
    _MOTION[_i, 4 + _i] = 1.0
_PROJECT = np.eye(4, _DIM)

# the aspect channel is dimensionless, so its noise scales with the config
# factors through fixed unit constants instead of the box height; at the
# default factors these give stds of 1e-2 (state), 1e-5 (velocity), and
# 1e-1 (measurement)
_ASPECT_POS_UNIT = 0.2
_ASPECT_VEL_UNIT = 0.0016
_ASPECT_MEAS_UNIT = 2.0
_MIN_H = 1e-3


@dataclass(frozen=True)
class NoiseConfig:
    """Height-relative noise factors for the box filter."""

    pos_std_factor: float = 1.0 / 20.0
    vel_std_factor: float = 1.0 / 160.0
    meas_std_factor: float = 1.0 / 20.0

    def __post_init__(self):
        for name in ("pos_std_factor", "vel_std_factor", "meas_std_factor"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")


@dataclass(frozen=True)
class KalmanState:
    """Gaussian belief over the 8-dimensional box state."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float, copy=True).reshape(_DIM)
        cov = np.array(self.covariance, dtype=float, copy=True).reshape(_DIM, _DIM)
        if not np.isfinite(mean).all():
            raise ValueError("state mean contains non-finite entries")
        if not np.isfinite(cov).all():
            raise ValueError("state covariance contains non-finite entries")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


def _check_measurement(measurement) -> np.ndarray:
    m = np.asarray(measurement, dtype=float).reshape(4)
    if not np.isfinite(m).all():
        raise ValueError(f"non-finite measurement {m!r}")
    if m[2] <= 0 or m[3] <= 0:
        raise ValueError(f"measurement needs positive aspect and height, got {m!r}")
    return m


def initiate(measurement, cfg: NoiseConfig = NoiseConfig()) -> KalmanState:
    """Start a track belief at a measurement with zero velocity.

    The diagonal covariance is wide on position (2x the per-step noise)
    and very wide on the unobserved velocities (10x).
    """
    m = _check_measurement(measurement)
    mean = np.zeros(_DIM)
    mean[:4] = m
    h = m[3]
    std = np.array(
        [
            2 * cfg.pos_std_factor * h,
            2 * cfg.pos_std_factor * h,
            cfg.pos_std_factor * _ASPECT_POS_UNIT,
            2 * cfg.pos_std_factor * h,
            10 * cfg.vel_std_factor * h,
            10 * cfg.vel_std_factor * h,
            cfg.vel_std_factor * _ASPECT_VEL_UNIT,
            10 * cfg.vel_std_factor * h,
        ]
    )
    return KalmanState(mean, np.diag(std**2))


def _process_noise(h: float, cfg: NoiseConfig) -> np.ndarray:
    std = np.array(
        [
            cfg.pos_std_factor * h,
            cfg.pos_std_factor * h,
            cfg.pos_std_factor * _ASPECT_POS_UNIT,
            cfg.pos_std_factor * h,
            cfg.vel_std_factor * h,
            cfg.vel_std_factor * h,
            cfg.vel_std_factor * _ASPECT_VEL_UNIT,
            cfg.vel_std_factor * h,
        ]
    )
    return np.diag(std**2)


def _measurement_noise(h: float, cfg: NoiseConfig) -> np.ndarray:
    std = np.array(
        [
            cfg.meas_std_factor * h,
            cfg.meas_std_factor * h,
            cfg.meas_std_factor * _ASPECT_MEAS_UNIT,
            cfg.meas_std_factor * h,
        ]
    )
    return np.diag(std**2)


def predict(state: KalmanState, cfg: NoiseConfig = NoiseConfig()) -> KalmanState:
    """Advance one frame under constant velocity and inflate uncertainty."""
    mean = _MOTION @ state.mean
    # keep height/aspect physical on long coasts where velocity drift
    # would otherwise push them through zero
    mean[2] = max(mean[2], _MIN_H)
    mean[3] = max(mean[3], _MIN_H)
    cov = _MOTION @ state.covariance @ _MOTION.T + _process_noise(mean[3], cfg)
    return KalmanState(mean, cov)


def update(state: KalmanState, measurement, cfg: NoiseConfig = NoiseConfig()) -> KalmanState:
    """Fold one measurement into the belief (standard Kalman correction)."""
    m = _check_measurement(measurement)
    innovation_cov = _innovation_covariance(state, cfg)
    gain = np.linalg.solve(innovation_cov, _PROJECT @ state.covariance).T
    innovation = m - state.mean[:4]
    mean = state.mean + gain @ innovation
    cov = state.covariance - gain @ innovation_cov @ gain.T
    cov = (cov + cov.T) / 2.0
    return KalmanState(mean, cov)


def _innovation_covariance(state: KalmanState, cfg: NoiseConfig) -> np.ndarray:
    return (
        _PROJECT @ state.covariance @ _PROJECT.T
        + _measurement_noise(state.mean[3], cfg)
    )


def gating_distance(state: KalmanState, measurements, cfg: NoiseConfig = NoiseConfig()):
    """Squared Mahalanobis distance of measurements from the predicted
    measurement distribution.

    Accepts one (4,) measurement or a stack (N, 4); returns a scalar or an
    (N,) vector accordingly. Raises ValueError when the innovation
    covariance is numerically singular, which signals a degenerate noise
    configuration.
    """
    m = np.asarray(measurements, dtype=float)
    single = m.ndim == 1
    m = m.reshape(-1, 4)
    if not np.isfinite(m).all():
        raise ValueError("non-finite measurement in gating")
    innovation_cov = _innovation_covariance(state, cfg)
    try:
        chol = np.linalg.cholesky(innovation_cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "singular innovation covariance; check the noise configuration"
        ) from exc
    diff = m - state.mean[:4]
    z = np.linalg.solve(chol, diff.T)
    d2 = np.sum(z * z, axis=0)
    return float(d2[0]) if single else d2

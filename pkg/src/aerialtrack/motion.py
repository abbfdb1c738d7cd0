"""Constant-velocity Kalman filter over (x, y, vx, vy) and the one-step linear predictor.

The ``*_many`` functions operate on stacks of states (means ``(N, 4)``,
covariances ``(N, 4, 4)``) so a tracker can filter all of its tracks at
once; the single-state functions are thin wrappers around them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Point

# x += vx, y += vy; one frame per step
F = np.array([[1.0, 0.0, 1.0, 0.0],
              [0.0, 1.0, 0.0, 1.0],
              [0.0, 0.0, 1.0, 0.0],
              [0.0, 0.0, 0.0, 1.0]])
H = np.array([[1.0, 0.0, 0.0, 0.0],
              [0.0, 1.0, 0.0, 0.0]])

VELOCITY_PRIOR_SCALE = 1000.0


@dataclass(frozen=True)
class MotionNoiseConfig:
    process_pos_var: float = 1.0
    process_vel_var: float = 0.25
    measurement_var: float = 1.0

    def __post_init__(self):
        for name in ("process_pos_var", "process_vel_var", "measurement_var"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def Q(self) -> np.ndarray:
        p, v = self.process_pos_var, self.process_vel_var
        return np.diag([p, p, v, v])

    @property
    def R(self) -> np.ndarray:
        return np.eye(2) * self.measurement_var


@dataclass(frozen=True)
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray

    @property
    def position(self) -> Point:
        return (float(self.mean[0]), float(self.mean[1]))

    @property
    def velocity(self) -> Point:
        return (float(self.mean[2]), float(self.mean[3]))


def _symmetrize(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c + np.swapaxes(c, -1, -2))


def _inv2_many(S: np.ndarray) -> np.ndarray:
    a, b, c, d = S[:, 0, 0], S[:, 0, 1], S[:, 1, 0], S[:, 1, 1]
    det = a * d - b * c
    ok = np.abs(det) > 1e-12 * np.maximum(1.0, np.abs(a * d))
    out = np.empty_like(S)
    safe = np.where(ok, det, 1.0)
    out[:, 0, 0] = d / safe
    out[:, 0, 1] = -b / safe
    out[:, 1, 0] = -c / safe
    out[:, 1, 1] = a / safe
    if not ok.all():
        # singular once prior and measurement noise have both collapsed to zero
        out[~ok] = np.linalg.pinv(S[~ok])
    return out


def kalman_init(position: Point, cfg: MotionNoiseConfig = MotionNoiseConfig()) -> KalmanState:
    x, y = position
    mv = cfg.measurement_var
    # velocity is unobserved at birth; a zero measurement variance still needs a
    # non-degenerate velocity prior or the filter could never learn the motion
    vel_var = VELOCITY_PRIOR_SCALE * (mv if mv > 0 else 1.0)
    cov = np.diag([mv, mv, vel_var, vel_var])
    return KalmanState(np.array([x, y, 0.0, 0.0], dtype=float), cov)


def kalman_predict_many(means: np.ndarray, covs: np.ndarray,
                        cfg: MotionNoiseConfig = MotionNoiseConfig()):
    means = means @ F.T
    covs = _symmetrize(F @ covs @ F.T + cfg.Q)
    return means, covs


def kalman_update_many(means: np.ndarray, covs: np.ndarray, obs: np.ndarray,
                       cfg: MotionNoiseConfig = MotionNoiseConfig()):
    R = cfg.R
    S = covs[:, :2, :2] + R
    K = covs[:, :, :2] @ _inv2_many(S)                       # P H^T S^-1
    innovation = obs - means[:, :2]
    means = means + np.einsum("nij,nj->ni", K, innovation)
    I_KH = np.eye(4) - K @ H
    covs = I_KH @ covs @ np.swapaxes(I_KH, 1, 2) + K @ R @ np.swapaxes(K, 1, 2)  # Joseph form
    return means, _symmetrize(covs)


def kalman_predict(s: KalmanState, cfg: MotionNoiseConfig = MotionNoiseConfig()) -> KalmanState:
    m, c = kalman_predict_many(s.mean[None], s.covariance[None], cfg)
    return KalmanState(m[0], c[0])


def kalman_update(s: KalmanState, observation: Point,
                  cfg: MotionNoiseConfig = MotionNoiseConfig()) -> KalmanState:
    z = np.asarray(observation, dtype=float).reshape(1, 2)
    m, c = kalman_update_many(s.mean[None], s.covariance[None], z, cfg)
    return KalmanState(m[0], c[0])


def linear_predict(p: Point, v_last: Point, k: float = 1.0) -> Point:
    """Position estimate ``p + k * v_last`` from the most recent movement vector."""
    return (p[0] + k * v_last[0], p[1] + k * v_last[1])

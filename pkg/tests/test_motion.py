import numpy as np
import pytest
from hypothesis import given, strategies as st

from aerialtrack.motion import (KalmanState, MotionNoiseConfig, kalman_init, kalman_predict,
                                kalman_predict_many, kalman_update, kalman_update_many,
                                linear_predict)

NOISELESS = MotionNoiseConfig(0.0, 0.0, 0.0)


def assert_sym_psd(c):
    np.testing.assert_allclose(c, c.T, atol=1e-9)
    assert np.linalg.eigvalsh(c).min() >= -1e-9 * max(1.0, np.abs(c).max())


def test_init():
    cfg = MotionNoiseConfig(measurement_var=2.0)
    s = kalman_init((5, 5), cfg)
    assert s.mean.tolist() == [5, 5, 0, 0]
    assert s.covariance[2, 2] == s.covariance[3, 3] == 1000 * 2.0
    assert_sym_psd(s.covariance)
    # a zero measurement variance keeps a usable velocity prior
    assert kalman_init((0, 0), NOISELESS).covariance[2, 2] > 0


def test_predict_constant_velocity():
    s = KalmanState(np.array([0.0, 0, 1, 2]), np.eye(4))
    assert kalman_predict(s).mean.tolist() == [1, 2, 1, 2]
    s = KalmanState(np.array([0.0, 0, 3, 0]), np.eye(4))
    assert kalman_predict(kalman_predict(s)).mean[0] == 6


def test_predict_without_noise_only_propagates_covariance():
    cov = np.diag([1.0, 2.0, 0.0, 0.0])
    s = kalman_predict(KalmanState(np.array([4.0, 4, 0, 0]), cov), NOISELESS)
    assert s.position == (4, 4)
    np.testing.assert_array_equal(s.covariance, cov)


def test_update_limits():
    prior = kalman_predict(kalman_init((0, 0)))
    exact = kalman_update(prior, (2, 3), MotionNoiseConfig(measurement_var=0.0))
    assert exact.position == pytest.approx((2, 3), abs=1e-12)
    ignored = kalman_update(prior, (2, 3), MotionNoiseConfig(measurement_var=1e12))
    np.testing.assert_allclose(ignored.mean, prior.mean, atol=1e-6)


def test_scalar_gain_of_one_half():
    s = KalmanState(np.array([0.0, 0, 0, 0]), np.eye(4))
    post = kalman_update(s, (2, 0), MotionNoiseConfig(measurement_var=1.0))
    assert post.position == pytest.approx((1.0, 0.0))
    assert post.covariance[0, 0] == pytest.approx(0.5)


def test_noiseless_target_converges():
    v = (2.5, -1.25)
    s = kalman_init((3.0, 4.0), NOISELESS)
    for t in range(1, 11):
        s = kalman_predict(s, NOISELESS)
        truth = (3 + v[0] * t, 4 + v[1] * t)
        s = kalman_update(s, truth, NOISELESS)
    pred = kalman_predict(s, NOISELESS).position
    assert pred == pytest.approx((3 + 11 * v[0], 4 + 11 * v[1]), abs=1e-6)


def test_default_noise_converges_on_clean_track():
    cfg = MotionNoiseConfig()
    s = kalman_init((0.0, 0.0), cfg)
    for t in range(1, 30):
        s = kalman_update(kalman_predict(s, cfg), (6.0 * t, 0.0), cfg)
    assert s.velocity == pytest.approx((6.0, 0.0), abs=1e-3)


def test_batched_matches_single():
    rng = np.random.default_rng(0)
    cfg = MotionNoiseConfig(0.5, 0.1, 2.0)
    states = [kalman_init(tuple(p), cfg) for p in rng.uniform(0, 100, (5, 2))]
    obs = rng.uniform(0, 100, (5, 2))
    means = np.stack([s.mean for s in states])
    covs = np.stack([s.covariance for s in states])
    m, c = kalman_update_many(*kalman_predict_many(means, covs, cfg), obs, cfg)
    for i, s in enumerate(states):
        one = kalman_update(kalman_predict(s, cfg), tuple(obs[i]), cfg)
        np.testing.assert_allclose(m[i], one.mean, atol=1e-12)
        np.testing.assert_allclose(c[i], one.covariance, atol=1e-9)


def test_covariance_stays_symmetric_psd_over_random_steps():
    rng = np.random.default_rng(3)
    cfg = MotionNoiseConfig()
    s = kalman_init((0, 0), cfg)
    for _ in range(1000):
        s = kalman_predict(s, cfg)
        if rng.random() < 0.7:
            s = kalman_update(s, tuple(s.mean[:2] + rng.normal(0, 3, 2)), cfg)
        assert_sym_psd(s.covariance)


def test_noise_config_rejects_negative():
    with pytest.raises(ValueError):
        MotionNoiseConfig(measurement_var=-1)


def test_linear_predict_examples():
    assert linear_predict((5, 5), (1, -1)) == (6, 4)
    assert linear_predict((5, 5), (1, -1), k=0) == (5, 5)
    assert linear_predict((0, 0), (2, 3), k=0.5) == (1, 1.5)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-50, 50), st.floats(-50, 50),
       st.floats(0, 3))
def test_linear_predict_is_affine(px, py, vx, vy, k):
    x, y = linear_predict((px, py), (vx, vy), k)
    assert x == pytest.approx(px + k * vx) and y == pytest.approx(py + k * vy)

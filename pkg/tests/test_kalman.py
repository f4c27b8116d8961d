import numpy as np
import pytest

from dropkit.kalman import (
    GATING_THRESHOLD_95,
    KalmanState,
    NoiseConfig,
    gating_distance,
    initiate,
    predict,
    update,
)
from helpers import DenseKalmanOracle


def _psd_check(state, atol=1e-9):
    cov = state.covariance
    assert np.allclose(cov, cov.T, atol=atol)
    assert np.linalg.eigvalsh((cov + cov.T) / 2).min() > -atol


class TestNoiseConfig:
    def test_defaults(self):
        cfg = NoiseConfig()
        assert cfg.pos_std_factor == 1 / 20
        assert cfg.vel_std_factor == 1 / 160
        assert cfg.meas_std_factor == 1 / 20

    @pytest.mark.parametrize("field", ["pos_std_factor", "vel_std_factor", "meas_std_factor"])
    def test_rejects_nonpositive(self, field):
        with pytest.raises(ValueError):
            NoiseConfig(**{field: 0.0})


class TestInitiate:
    def test_mean_and_zero_velocity(self):
        s = initiate([5, 5, 1, 10])
        assert np.array_equal(s.mean, [5, 5, 1, 10, 0, 0, 0, 0])

    def test_covariance_diagonal_psd(self):
        s = initiate([5, 5, 1, 10])
        assert np.array_equal(s.covariance, np.diag(np.diag(s.covariance)))
        _psd_check(s)

    def test_predict_after_initiate_keeps_position(self):
        s = initiate([5, 5, 1, 10])
        # zero initial velocity: the mean position cannot move, only spread
        for _ in range(3):
            s = predict(s)
            assert np.allclose(s.mean[:4], [5, 5, 1, 10])

    @pytest.mark.parametrize("bad", [[1, 1, 0, 10], [1, 1, 1, -3], [1, 1, float("nan"), 5]])
    def test_rejects_bad_measurements(self, bad):
        with pytest.raises(ValueError):
            initiate(bad)


class TestPredict:
    def test_one_euler_step(self):
        s = KalmanState(np.array([0, 0, 1, 10, 2, 0, 0, 0], dtype=float), np.eye(8))
        assert predict(s).mean[0] == 2.0

    def test_trace_strictly_increases(self):
        s = initiate([0, 0, 1, 10])
        for _ in range(5):
            nxt = predict(s)
            assert np.trace(nxt.covariance) > np.trace(s.covariance)
            s = nxt

    def test_five_steps_match_dense_motion_oracle(self):
        mean = np.array([0, 0, 1, 10, 1, 1, 0, 0], dtype=float)
        s = KalmanState(mean, np.eye(8))
        for _ in range(5):
            s = predict(s)
        oracle = DenseKalmanOracle()
        expected = np.linalg.matrix_power(oracle.F, 5) @ mean
        assert s.mean[0] == pytest.approx(5.0, abs=1e-12)
        assert s.mean[1] == pytest.approx(5.0, abs=1e-12)
        assert np.allclose(s.mean, expected, atol=1e-12)


class TestUpdate:
    def test_zero_innovation_keeps_position(self):
        s = initiate([10, 20, 1.5, 30])
        s = predict(s)
        updated = update(s, s.mean[:4])
        assert np.allclose(updated.mean[:4], s.mean[:4], atol=1e-9)

    def test_repeated_identical_measurements_converge(self):
        target = np.array([50.0, 60.0, 1.2, 25.0])
        s = initiate([40, 55, 1.0, 22])
        oracle = DenseKalmanOracle()
        ox, op = oracle.initiate([40, 55, 1.0, 22])
        for _ in range(30):
            s = predict(s)
            s = update(s, target)
            ox, op = oracle.predict(ox, op)
            ox, op = oracle.update(ox, op, target)
            assert np.all(np.abs(s.mean - ox) < 1e-9)
        assert np.allclose(s.mean[:4], target, atol=1e-3)

    def test_huge_measurement_noise_is_noop(self):
        cfg = NoiseConfig(meas_std_factor=1e6)
        s = predict(initiate([10, 10, 1, 20]))
        updated = update(s, [99, 99, 2, 40], cfg)
        assert np.allclose(updated.mean, s.mean, atol=1e-3)

    def test_posterior_not_larger_on_measured_components(self):
        s = predict(initiate([0, 0, 1, 10]))
        posterior = update(s, [1, 1, 1.1, 11])
        prior_meas = s.covariance[:4, :4]
        post_meas = posterior.covariance[:4, :4]
        # PSD order on the measured block: prior - posterior has no
        # eigenvalue below numerical zero
        assert np.linalg.eigvalsh(prior_meas - post_meas).min() > -1e-9

    def test_rejects_non_finite(self):
        s = initiate([0, 0, 1, 10])
        with pytest.raises(ValueError):
            update(s, [1, float("inf"), 1, 10])


class TestGating:
    def test_zero_at_predicted_measurement(self):
        s = predict(initiate([5, 6, 1.1, 12]))
        assert gating_distance(s, s.mean[:4]) == pytest.approx(0.0, abs=1e-12)

    def test_matches_dense_solve_oracle(self):
        rng = np.random.default_rng(31)
        oracle = DenseKalmanOracle()
        s = initiate([10, 10, 1, 20])
        ox, op = oracle.initiate([10, 10, 1, 20])
        for _ in range(4):
            s = predict(s)
            m = [10 + rng.normal(), 10 + rng.normal(), 1, 20 + rng.normal()]
            s = update(s, m)
            ox, op = oracle.predict(ox, op)
            ox, op = oracle.update(ox, op, m)
        probe = np.array([12.0, 9.0, 1.05, 21.0])
        assert gating_distance(s, probe) == pytest.approx(
            oracle.gating(ox, op, probe), abs=1e-9
        )

    def test_monotone_in_position_offset(self):
        s = predict(initiate([0, 0, 1, 10]))
        base = s.mean[:4]
        prev = -1.0
        for offset in (0.5, 1.0, 2.0, 4.0):
            d = gating_distance(s, base + [offset, 0, 0, 0])
            assert d > prev
            prev = d

    def test_batch_matches_single(self):
        s = predict(initiate([3, 4, 1, 8]))
        ms = np.array([[3, 4, 1, 8], [5, 5, 1.1, 9], [0, 0, 0.9, 7]], dtype=float)
        batch = gating_distance(s, ms)
        for i, m in enumerate(ms):
            assert batch[i] == pytest.approx(gating_distance(s, m), abs=1e-12)

    def test_threshold_constant(self):
        assert GATING_THRESHOLD_95 == pytest.approx(9.4877, abs=1e-4)


class TestInvariants:
    def test_state_validation(self):
        with pytest.raises(ValueError):
            KalmanState(np.full(8, np.nan), np.eye(8))
        with pytest.raises(ValueError):
            KalmanState(np.zeros(8), np.full((8, 8), np.inf))

    def test_sequences_preserve_symmetric_psd(self):
        rng = np.random.default_rng(55)
        for _ in range(10):
            m0 = [rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0.5, 2), rng.uniform(5, 50)]
            s = initiate(m0)
            _psd_check(s)
            for _ in range(15):
                s = predict(s)
                _psd_check(s)
                if rng.random() < 0.7:
                    m = s.mean[:4] + rng.normal(0, 1, 4) * [1, 1, 0.02, 1]
                    m[2] = max(m[2], 0.1)
                    m[3] = max(m[3], 1.0)
                    s = update(s, m)
                    _psd_check(s)

    def test_noiseless_constant_velocity_converges(self):
        # target moves exactly at constant velocity; measurements are exact
        velocity = np.array([2.0, 1.0, 0.0, 0.0])
        pos = np.array([10.0, 10.0, 1.0, 20.0])
        s = initiate(pos)
        for _ in range(10):
            pos = pos + velocity
            s = predict(s)
            s = update(s, pos)
        predicted = predict(s)
        truth = pos + velocity
        assert np.all(np.abs(predicted.mean[:2] - truth[:2]) < 1e-6)

    def test_oracle_equivalence_random_sequences(self):
        rng = np.random.default_rng(404)
        oracle = DenseKalmanOracle()
        for _ in range(20):
            m0 = [rng.uniform(0, 200), rng.uniform(0, 200), rng.uniform(0.5, 2), rng.uniform(10, 40)]
            s = initiate(m0)
            ox, op = oracle.initiate(m0)
            assert np.array_equal(s.mean, ox) and np.array_equal(s.covariance, op)
            for _ in range(20):
                s = predict(s)
                ox, op = oracle.predict(ox, op)
                m = ox[:4] + rng.normal(0, 1.5, 4) * [1, 1, 0.05, 1]
                m[2] = max(m[2], 0.05)
                m[3] = max(m[3], 0.5)
                s = update(s, m)
                ox, op = oracle.update(ox, op, m)
                assert np.all(np.abs(s.mean - ox) < 1e-9)
                assert np.all(np.abs(s.covariance - op) < 1e-9)

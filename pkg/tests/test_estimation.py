import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from koopbots.config import RunConfig
from koopbots.estimation import (
    GradientEstimator,
    RLSEstimator,
    batch_ls,
    load_checkpoint,
    restore,
    save_checkpoint,
)
from koopbots.harness import run_identification


def test_scalar_hand_values():
    est = RLSEstimator(1, 1, rho=1e-4, P0=100.0)
    rec = est.update([1.0], [2.0])
    assert rec.eps[0] == -2.0
    m2 = 100.0001
    assert est.theta[0, 0] == pytest.approx(200 / m2, rel=1e-14)
    assert est.theta[0, 0] == pytest.approx(1.999998, abs=1e-6)
    assert est.P[0, 0] == pytest.approx(100 - 100 * 100 / m2, rel=1e-9)
    assert est.P[0, 0] == pytest.approx(9.9999e-5, rel=1e-5)


def test_zero_regressor_is_noop():
    est = RLSEstimator(3, 2, theta0=np.ones((3, 2)))
    P = est.P.copy()
    rec = est.update(np.zeros(3), [1.0, -1.0])
    np.testing.assert_array_equal(est.theta, 1.0)
    np.testing.assert_array_equal(est.P, P)
    np.testing.assert_array_equal(rec.eps, [-1.0, 1.0])


def test_rejects_bad_samples():
    est = RLSEstimator(2, 1)
    with pytest.raises(ValueError):
        est.update([np.nan, 0.0], [1.0])
    with pytest.raises(ValueError):
        est.update([1.0, 0.0, 0.0], [1.0])
    with pytest.raises(ValueError):
        RLSEstimator(2, 1, rho=0.0)


def random_data(rng, n, q, p):
    return rng.normal(size=(n, q)), rng.normal(size=(n, p))


def test_rls_equals_batch():
    rng = np.random.default_rng(7)
    Z, Y = random_data(rng, 200, 36, 18)
    est = RLSEstimator(36, 18)
    for z, y in zip(Z, Y):
        est.update(z, y)
    ref = batch_ls(Z, Y, np.zeros((36, 18)), 100.0, 1e-4)
    assert np.linalg.norm(est.theta - ref) / np.linalg.norm(ref) < 1e-6


def test_batch_no_data_returns_prior():
    th0 = np.arange(6.0).reshape(3, 2)
    np.testing.assert_allclose(batch_ls(np.zeros((0, 3)), np.zeros((0, 2)), th0, 1.0, 1e-4), th0)


def test_batch_single_exact_sample():
    z, y = np.array([1.0, 2.0, -1.0]), np.array([3.0])
    th = batch_ls(z[None], y[None], np.zeros((3, 1)), 1e12, 1e-4)
    assert th[:, 0] @ z == pytest.approx(3.0, rel=1e-9)


def test_batch_recovers_truth():
    rng = np.random.default_rng(8)
    truth = rng.normal(size=(36, 18))
    Z = rng.normal(size=(2000, 36))
    th = batch_ls(Z, Z @ truth, np.zeros((36, 18)), 100.0, 1e-4)
    assert np.linalg.norm(th - truth) < 1e-6


def test_reset_schedule():
    est = RLSEstimator(2, 1, reset_interval=3)
    rng = np.random.default_rng(0)
    for k in range(1, 7):
        est.update(rng.normal(size=2), [0.5])
        if k % 3 == 0:
            np.testing.assert_array_equal(est.P, est.P0)
        else:
            assert not np.array_equal(est.P, est.P0)
    assert est.step == 6


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_posteriori_never_worse(seed, n):
    rng = np.random.default_rng(seed)
    est = RLSEstimator(8, 3, reset_interval=7)
    for _ in range(n):
        z, y = rng.normal(size=8) * rng.uniform(0.01, 10), rng.normal(size=3)
        Pz_before = z @ est.P @ z
        rec = est.update(z, y)
        assert rec.eps_a_norm <= rec.eps_norm * (1 + 1e-12) + 1e-15
        if est.step % 7:
            assert z @ est.P @ z <= Pz_before * (1 + 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gain_stays_symmetric_pd_and_below_p0(seed):
    rng = np.random.default_rng(seed)
    est = RLSEstimator(10, 2, reset_interval=25)
    for _ in range(24):
        est.update(rng.normal(size=10), rng.normal(size=2))
        np.testing.assert_array_equal(est.P, est.P.T)
        assert np.linalg.eigvalsh(est.P).min() > -1e-10
        assert np.linalg.eigvalsh(est.P0 - est.P).min() > -1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_scale_contract(seed, s):
    rng = np.random.default_rng(seed)
    Z, Y = random_data(rng, 30, 6, 2)
    a, b = RLSEstimator(6, 2, rho=1e-2, P0=1.0), RLSEstimator(6, 2, rho=1e-2 * s, P0=s)
    for z, y in zip(Z, Y):
        a.update(z, y)
        b.update(z, y)
    np.testing.assert_allclose(a.theta, b.theta, rtol=1e-6, atol=1e-9)


def test_gradient_basic():
    est = GradientEstimator(1, 1, gamma=1.0, rho=1e-12)
    est.update([1.0], [1.0])
    assert est.theta[0, 0] == pytest.approx(1.0, abs=1e-10)
    est = GradientEstimator(3, 2, gamma=0.5)
    est.update(np.zeros(3), [1.0, 2.0])
    assert not est.theta.any()


def test_gradient_gain_bounds():
    for bad in (0.0, 2.0, -1.0, 2.5):
        with pytest.raises(ValueError):
            GradientEstimator(3, 1, gamma=bad)
    with pytest.raises(ValueError):
        GradientEstimator(2, 1, gamma=np.array([[1.0, 0.5], [0.0, 1.0]]))
    GradientEstimator(2, 1, gamma=np.array([[1.0, 0.2], [0.2, 1.5]]))


def test_gradient_posteriori_identity():
    # with Gamma = I the posteriori error is the priori error shrunk by rho / m^2
    rng = np.random.default_rng(11)
    est = GradientEstimator(5, 2, gamma=1.0, rho=0.3)
    for _ in range(10):
        z, y = rng.normal(size=5), rng.normal(size=2)
        rec = est.update(z, y)
        np.testing.assert_allclose(rec.eps_a, rec.eps * 0.3 / (0.3 + z @ z), rtol=1e-12, atol=1e-15)


@pytest.mark.xfail(
    strict=True,
    reason="with Gamma = I each step nearly interpolates the current sample, so its posteriori error is "
    "below the RLS one on the probing data (see test_gradient_posteriori_identity)",
)
def test_gradient_slower_than_rls_on_probing_data():
    rls = run_identification(RunConfig(variant="bilinear"))[1]
    grad = run_identification(RunConfig(variant="bilinear", estimator="gradient", gamma=1.0))[1]
    # probing inputs do not depend on the estimator
    np.testing.assert_array_equal(np.array(rls.X), np.array(grad.X))
    assert np.mean(grad.eps_a_norm) > np.mean(rls.eps_a_norm)


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    ests = [RLSEstimator(109, 6, reset_interval=75) for _ in range(3)]
    for e in ests:
        for _ in range(5):
            e.update(rng.normal(size=109), rng.normal(size=6))
    path = tmp_path / "ck.bin"
    save_checkpoint(path, ests)
    assert path.stat().st_size == 8 + 8 + 3 * (16 + 8 * (109 * 6 + 109 * 109) + 8)
    recs = load_checkpoint(path)
    for e, (th, P, step) in zip(ests, recs):
        np.testing.assert_array_equal(th, e.theta)
        np.testing.assert_array_equal(P, e.P)
        assert step == 5
    fresh = RLSEstimator(109, 6)
    restore(fresh, recs[1])
    np.testing.assert_array_equal(fresh.theta, ests[1].theta)


def test_checkpoint_layout_is_little_endian(tmp_path):
    est = RLSEstimator(1, 1)
    est.theta[0, 0] = 1.5
    save_checkpoint(tmp_path / "a.bin", [est])
    raw = (tmp_path / "a.bin").read_bytes()
    assert raw[:8] == b"KBCKPT01"
    assert int.from_bytes(raw[8:16], "little") == 1
    assert np.frombuffer(raw[32:40], "<f8")[0] == 1.5


def test_checkpoint_rejects_garbage(tmp_path):
    (tmp_path / "x.bin").write_bytes(b"nope")
    with pytest.raises(ValueError):
        load_checkpoint(tmp_path / "x.bin")

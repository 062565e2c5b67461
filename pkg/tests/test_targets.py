import json

import numpy as np
import pytest

from zoslice.targets import (
    GaussianTarget,
    LatencyTarget,
    LogisticRegressionTarget,
    StochasticVolatilityTarget,
    generate_logistic_data,
    generate_sv_data,
    load_logistic_dataset,
    load_sv_dataset,
    save_logistic_dataset,
    save_sv_dataset,
)


def central_difference(target, x, eps=1e-6):
    g = np.empty(target.dimension)
    for i in range(target.dimension):
        xp = x.copy()
        xm = x.copy()
        xp[i] += eps
        xm[i] -= eps
        g[i] = (target.evaluate(xp) - target.evaluate(xm)) / (2.0 * eps)
    return g


def test_gaussian_hand_values():
    t = GaussianTarget.standard(2)
    assert t.evaluate([0.0, 0.0]) == 0.0
    assert t.evaluate([3.0, 4.0]) == 12.5
    assert np.allclose(t.gradient_oracle(np.array([3.0, 4.0])), [3.0, 4.0])


def test_gaussian_quadratic_form_matches_definition():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 4))
    prec = A @ A.T + 4 * np.eye(4)
    mu = rng.standard_normal(4)
    t = GaussianTarget(mu, prec)
    for _ in range(20):
        x = rng.standard_normal(4)
        ref = 0.5 * (x - mu) @ prec @ (x - mu)
        assert abs(t.evaluate(x) - ref) <= 1e-12 * max(1.0, abs(ref))
    assert t.convexity == pytest.approx(np.linalg.eigvalsh(prec)[0])
    assert t.smoothness == pytest.approx(np.linalg.eigvalsh(prec)[-1])
    assert t.condition_number >= 1.0


def test_logistic_hand_value_single_point():
    t = LogisticRegressionTarget(np.array([[1.0]]), np.array([1.0]), prior_variance=25.0)
    assert t.evaluate(np.zeros(1)) == pytest.approx(np.log(2.0), abs=1e-12)
    assert t.gradient_oracle(np.zeros(1))[0] == pytest.approx(-0.5, abs=1e-12)


def test_evaluate_validation_errors():
    t = GaussianTarget.standard(3)
    with pytest.raises(ValueError):
        t.evaluate([1.0, 2.0])
    with pytest.raises(ValueError):
        t.evaluate([1.0, np.nan, 0.0])
    with pytest.raises(ValueError):
        t.evaluate_batch(np.ones((2, 4)))


def test_gradient_oracle_absent():
    class Bare(GaussianTarget):
        def gradient_oracle(self, x):
            return super(GaussianTarget, self).gradient_oracle(x)

    with pytest.raises(NotImplementedError):
        Bare.standard(2).gradient_oracle(np.zeros(2))


def test_forward_difference_converges_to_gradient(small_logistic):
    # 100 random points x 10 random unit directions per target; the error of
    # the forward difference is bounded by the local directional curvature
    rng = np.random.default_rng(0)
    sv = StochasticVolatilityTarget(generate_sv_data(3, 40))
    targets = [GaussianTarget.diagonal([1.0, 2.0, 0.5]), small_logistic, sv]
    eps = 1e-5
    for t in targets:
        for _ in range(100):
            x = rng.standard_normal(t.dimension) * 0.4
            g = t.gradient_oracle(x)
            ux = t.evaluate(x)
            for _ in range(10):
                v = rng.standard_normal(t.dimension)
                v /= np.linalg.norm(v)
                up = t.evaluate(x + eps * v)
                fd = (up - ux) / eps
                dd2 = abs(up - 2.0 * ux + t.evaluate(x - eps * v)) / eps**2
                assert abs(fd - g @ v) <= 10.0 * eps * max(dd2, 1.0)


def test_analytic_gradients_match_central_differences(small_logistic):
    rng = np.random.default_rng(3)
    sv = StochasticVolatilityTarget(generate_sv_data(3, 60))
    for t in [GaussianTarget.diagonal([2.0, 0.3]), small_logistic, sv]:
        x = rng.standard_normal(t.dimension) * 0.5
        assert np.abs(central_difference(t, x) - t.gradient_oracle(x)).max() < 1e-5


def test_logistic_data_term_hessian_psd(small_logistic):
    rng = np.random.default_rng(9)
    for _ in range(20):
        x = rng.standard_normal(small_logistic.dimension)
        H = small_logistic.hessian_oracle(x, data_term_only=True)
        assert np.linalg.eigvalsh(H)[0] >= -1e-10


def test_logistic_convexity_smoothness_bounds(small_logistic):
    t = small_logistic
    assert t.convexity == pytest.approx(1.0 / t.prior_variance)
    top = np.linalg.eigvalsh(t.design.T @ t.design)[-1]
    assert t.smoothness == pytest.approx(1.0 / t.prior_variance + 0.25 * top)


def test_generate_logistic_shapes_and_determinism():
    Z, y, b0 = generate_logistic_data(1, 25, 25)
    assert Z.shape == (25, 25) and y.shape == (25,) and b0.shape == (25,)
    Z2, y2, b02 = generate_logistic_data(1, 25, 25)
    assert np.array_equal(Z, Z2) and np.array_equal(y, y2) and np.array_equal(b0, b02)
    Z3, _, _ = generate_logistic_data(2, 25, 25)
    assert not np.array_equal(Z, Z3)
    Zb, yb, b0b = generate_logistic_data(1, 200, 200)
    assert Zb.shape == (200, 200) and yb.shape == (200,) and b0b.shape == (200,)
    assert set(np.unique(yb)) <= {0.0, 1.0}
    with pytest.raises(ValueError):
        generate_logistic_data(1, 0, 3)


def test_generate_sv_series():
    y = generate_sv_data(4, 200)
    assert y.shape == (200,)
    assert StochasticVolatilityTarget(y).dimension == 203
    assert np.array_equal(y, generate_sv_data(4, 200))
    y2 = generate_sv_data(4, 2)
    assert y2.shape == (2,) and np.all(np.isfinite(y2))
    with pytest.raises(ValueError):
        generate_sv_data(4, 1)


def test_sv_volatility_recursion_against_plain_loop():
    y = generate_sv_data(8, 30)
    t = StochasticVolatilityTarget(y)
    rng = np.random.default_rng(1)
    x = rng.standard_normal(t.dimension) * 0.3
    mu, phi, ls, eta = x[0], x[1], x[2], x[3:]
    rho, s = np.tanh(phi), np.exp(ls)
    h = np.empty(30)
    h[0] = mu + s / (1.0 - rho**2) * eta[0]
    for i in range(1, 30):
        h[i] = rho * (h[i - 1] - mu) + s * eta[i]
    u_loop = 0.5 * np.sum(h + y**2 * np.exp(-h)) + (
        mu**2 / 20.0 + phi**2 / 2.0 + ls**2 / 2.0 + eta @ eta / 2.0
    )
    assert t.evaluate(x) == pytest.approx(u_loop, rel=1e-12)


def test_batch_matches_single_evaluations(small_logistic):
    rng = np.random.default_rng(12)
    sv = StochasticVolatilityTarget(generate_sv_data(3, 25))
    for t in [GaussianTarget.diagonal([1.0, 4.0]), small_logistic, sv]:
        X = rng.standard_normal((7, t.dimension))
        single = np.array([t.evaluate(r) for r in X])
        assert np.abs(t.evaluate_batch(X) - single).max() < 1e-11


def test_latency_target_delegates():
    t = LatencyTarget(GaussianTarget.standard(2), delay=0.0)
    assert t.evaluate([3.0, 4.0]) == 12.5


def test_dataset_roundtrip(tmp_path):
    Z, y, b0 = generate_logistic_data(5, 6, 3)
    p = tmp_path / "logit.csv"
    save_logistic_dataset(p, Z, y, {"seed": 5, "beta0": b0})
    Z2, y2, side = load_logistic_dataset(p)
    assert np.array_equal(Z, Z2) and np.array_equal(y, y2)
    assert side["seed"] == 5 and np.allclose(side["beta0"], b0)
    header = p.read_text().splitlines()[0]
    assert header == "z_1,z_2,z_3,y"

    ys = generate_sv_data(6, 10)
    ps = tmp_path / "sv.csv"
    save_sv_dataset(ps, ys, {"seed": 6, "mu0": 1.0})
    ys2, side2 = load_sv_dataset(ps)
    assert np.array_equal(ys, ys2)
    assert ps.read_text().splitlines()[0] == "y"
    assert json.loads(ps.with_suffix(".json").read_text())["mu0"] == 1.0

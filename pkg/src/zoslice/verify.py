"""Fast property battery behind ``zoslice verify``.

Each check re-derives its expectation from an independent construction
(closed forms, Monte-Carlo bounds, brute-force complements) and is sized to
keep the whole battery within a couple of minutes on a small machine.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .diagnostics import esjd, relative_gain, w2_contraction_estimate
from .directions import DirectionLaw, sample_canonical_subset, sample_uniform_stiefel
from .engine import RoundExecutor, directional_derivatives, zo_gradient_estimate
from .samplers import SamplerConfig, leapfrog_involution_check, run_chain
from .targets import GaussianTarget, LogisticRegressionTarget, generate_logistic_data

LAWS = (DirectionLaw.UNIFORM_STIEFEL, DirectionLaw.CANONICAL_SUBSET)


def _logistic6():
    Z, y, _ = generate_logistic_data(11, 12, 6)
    return LogisticRegressionTarget(Z, y)


def check_orthonormality():
    rng = np.random.default_rng(0)
    worst = 0.0
    for law in LAWS:
        for _ in range(300):
            worst = max(worst, law.sample(rng, 7, 3).gram_residual())
    assert worst <= 1e-10, f"worst Gram residual {worst:.2e}"
    return f"worst residual {worst:.1e}"


def check_haar_first_moment():
    # raw (sign-uncorrected) QR gives E[V_11] strictly negative; Haar gives 0
    rng = np.random.default_rng(1)
    n, d, m = 4000, 6, 2
    acc = np.zeros((d, m))
    for _ in range(n):
        acc += sample_uniform_stiefel(rng, d, m).matrix
    worst = np.abs(acc / n).max()
    limit = 5.0 / math.sqrt(n * d)
    assert worst <= limit, f"first moment {worst:.3f} exceeds {limit:.3f}"
    return f"max |mean entry| {worst:.3f} <= {limit:.3f}"


def check_scaled_second_moment():
    rng = np.random.default_rng(2)
    d, m, n = 6, 2, 20_000
    for law in LAWS:
        acc = np.zeros((d, d))
        for _ in range(n):
            M = law.sample(rng, d, m).as_dense()
            acc += M @ M.T
        resid = np.abs((d / m) * acc / n - np.eye(d)).max()
        assert resid <= 0.08, f"{law.value}: residual {resid:.3f}"
    return "both laws within 0.08"


def check_projection_norm_identity():
    rng = np.random.default_rng(3)
    d, m, n = 6, 2, 20_000
    a = rng.standard_normal(d)
    b = rng.standard_normal(d)
    expected = ((d - m) / d) * a @ a + (m / d) * (a + b) @ (a + b)
    for law in LAWS:
        vals = np.empty(n)
        for i in range(n):
            V = law.sample(rng, d, m)
            vals[i] = np.sum((a + V.lift(V.project(b))) ** 2)
        se = vals.std(ddof=1) / math.sqrt(n)
        err = abs(vals.mean() - expected)
        assert err <= 3 * se, f"{law.value}: error {err:.4f} > 3 SE {3 * se:.4f}"
    return "identity within 3 SE for both laws"


def check_index_frequencies():
    rng = np.random.default_rng(4)
    d, m, n = 6, 2, 20_000
    counts = np.zeros(d)
    for _ in range(n):
        counts[sample_canonical_subset(rng, d, m).indices] += 1
    dev = np.abs(counts / n - m / d).max()
    assert dev <= 0.01, f"frequency deviation {dev:.4f}"
    return f"max frequency deviation {dev:.4f}"


def check_finite_difference_accuracy():
    rng = np.random.default_rng(5)
    for target in (GaussianTarget.diagonal([1.0, 2.0, 0.5]), _logistic6()):
        with RoundExecutor(target, chunk_size=None) as ex:
            for _ in range(20):
                x = rng.standard_normal(target.dimension) * 0.4
                V = sample_canonical_subset(rng, target.dimension, 2)
                g, _ = directional_derivatives(ex, x, V, 1e-5)
                exact = V.project(target.gradient_oracle(x))
                assert np.abs(g - exact).max() <= 1e-3
    return "forward differences track analytic slice gradients"


def check_estimator_unbiased():
    rng = np.random.default_rng(6)
    target = _logistic6()
    x = rng.standard_normal(6) * 0.2
    grad = target.gradient_oracle(x)
    n = 15_000
    samples = np.empty((n, 6))
    with RoundExecutor(target, chunk_size=None) as ex:
        base = target.evaluate(x)
        for i in range(n):
            est = zo_gradient_estimate(ex, x, "canonical", 2, 1e-5, rng, base_value=base)
            samples[i] = est.estimate
    se = samples.std(axis=0, ddof=1) / math.sqrt(n)
    dev = np.abs(samples.mean(axis=0) - grad)
    assert np.all(dev <= 4 * se + 1e-3), f"bias {dev} vs SE {se}"
    return "componentwise mean within 4 SE + eps bias"


def check_involution():
    rng = np.random.default_rng(7)
    target = GaussianTarget.diagonal([1.0, 2.0, 0.5, 1.5, 0.8])
    V = sample_uniform_stiefel(rng, 5, 2)
    rep = leapfrog_involution_check(
        target, rng.standard_normal(5), V,
        rng.standard_normal(2), rng.standard_normal(2), 0.3, 3,
    )
    assert rep.involution_deviation <= 1e-8, rep
    assert rep.log_abs_det_jacobian <= 1e-6, rep
    return (
        f"deviation {rep.involution_deviation:.1e}, "
        f"|log det| {rep.log_abs_det_jacobian:.1e}"
    )


def check_esjd_and_gain():
    assert esjd(np.array([[0.0], [1.0], [3.0]])) == 2.5
    assert esjd(np.array([[0.0, 0.0], [1.0, 1.0]])) == 1.0
    assert relative_gain(0.4, 0.4, 1, 8, 8) == 1.0
    assert relative_gain(1.0, 0.5, 2) == 1.0
    return "hand cases exact"


def check_ledger_accounting():
    target = GaussianTarget.standard(4)
    cfg = SamplerConfig(kernel="rs-hmc", m=2, n_leapfrog=3, scale=0.4, adapt=False, chunk_size=None)
    res = run_chain(target, cfg, 50, np.zeros(4), seed=0)
    expected_rounds = 1 + 50 * 4
    expected_evals = 1 + 50 * (2 + 3 * 3)
    assert res.ledger.rounds == expected_rounds, res.ledger
    assert res.ledger.evals == expected_evals, res.ledger
    assert res.ledger.evals <= res.ledger.rounds * 3
    return f"{res.ledger.rounds} rounds / {res.ledger.evals} evals as expected"


def check_worker_determinism():
    target = _logistic6()
    states = []
    for workers in (1, 4):
        cfg = SamplerConfig(kernel="rs-mala", m=3, workers=workers, chunk_size=1)
        res = run_chain(target, cfg, 150, np.zeros(6), seed=9)
        states.append(res.trajectory.states)
    assert np.array_equal(states[0], states[1]), "worker count changed the trajectory"
    return "trajectories bit-identical for 1 and 4 workers"


def check_contraction():
    rng = np.random.default_rng(8)
    iso = GaussianTarget.standard(20)
    rep = w2_contraction_estimate(iso, 0.25, 5, "canonical", 100, 10, rng)
    assert rep.factor <= rep.bound + 3 * rep.stderr, rep
    full = w2_contraction_estimate(iso, 0.25, 20, "canonical", 4, 3, rng, epsilon=0.05)
    assert abs(full.factor - 0.75) <= 1e-12, full
    return f"factor {rep.factor:.3f} <= bound {rep.bound:.3f}; m=d exact"


CHECKS = [
    ("direction orthonormality", check_orthonormality),
    ("haar first moment", check_haar_first_moment),
    ("scaled second moment", check_scaled_second_moment),
    ("projection norm identity", check_projection_norm_identity),
    ("canonical index frequencies", check_index_frequencies),
    ("finite-difference accuracy", check_finite_difference_accuracy),
    ("estimator unbiasedness", check_estimator_unbiased),
    ("leapfrog involution + volume", check_involution),
    ("esjd and gain hand cases", check_esjd_and_gain),
    ("round ledger accounting", check_ledger_accounting),
    ("worker-count determinism", check_worker_determinism),
    ("coupling contraction", check_contraction),
]


def run_battery(out=print):
    """Run every check; returns the number of failures."""
    failures = 0
    width = max(len(name) for name, _ in CHECKS)
    for name, fn in CHECKS:
        tic = time.perf_counter()
        try:
            detail = fn()
            status = "PASS"
        except AssertionError as exc:
            detail = str(exc)
            status = "FAIL"
            failures += 1
        out(f"{status}  {name:<{width}}  [{time.perf_counter() - tic:5.1f}s]  {detail}")
    out(f"{len(CHECKS) - failures}/{len(CHECKS)} properties passed")
    return failures

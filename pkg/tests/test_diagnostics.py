import math

import numpy as np
import pytest

from zoslice.diagnostics import (
    EfficiencyReport,
    Trajectory,
    eff_sweep,
    efficiency_report,
    esjd,
    moment_stationarity_check,
    parallel_cost_factor,
    relative_gain,
    w2_contraction_estimate,
)
from zoslice.samplers import SamplerConfig, run_chain
from zoslice.targets import GaussianTarget


# ---------------------------------------------------------------- esjd


def test_esjd_hand_cases():
    assert esjd(np.array([[0.0], [1.0], [3.0]])) == pytest.approx(2.5)
    assert esjd(np.array([[0.0, 0.0], [1.0, 1.0]])) == pytest.approx(1.0)
    assert esjd(np.zeros((10, 3))) == 0.0
    with pytest.raises(ValueError):
        esjd(np.zeros((1, 3)))


def test_esjd_invariances(rng):
    X = rng.standard_normal((50, 4))
    assert esjd(X[:, ::-1]) == pytest.approx(esjd(X))
    assert esjd(X + rng.standard_normal(4)) == pytest.approx(esjd(X))


def test_esjd_segment_additivity(rng):
    X = rng.standard_normal((41, 2))
    k = 17
    total = esjd(X)
    left, right = esjd(X[: k + 1]), esjd(X[k:])
    n_jumps = X.shape[0] - 1
    recombined = (k * left + (n_jumps - k) * right) / n_jumps
    assert recombined == pytest.approx(total, rel=1e-12)


# ---------------------------------------------------------------- gain


def test_relative_gain_identities():
    assert relative_gain(0.37, 0.37, 1, 10, 10) == 1.0
    assert relative_gain(1.0, 0.5, 1) == 2.0
    assert relative_gain(1.0, 0.5, 2) == 1.0  # doubling L halves the gain
    assert relative_gain(4.0, 1.0, 1, 50, 25) == 2.0
    with pytest.raises(ValueError):
        relative_gain(1.0, 0.0)
    with pytest.raises(ValueError):
        relative_gain(1.0, 1.0, 1, 5, None)


def test_parallel_cost_floor():
    # a gradient along fewer directions than processors still takes one round
    assert parallel_cost_factor(5, 10) == 1.0
    assert parallel_cost_factor(10, 10) == 1.0
    assert parallel_cost_factor(40, 10, 2) == 8.0
    assert parallel_cost_factor(30, 25) == 2.0


# ---------------------------------------------------------------- contraction


def test_contraction_bound_isotropic():
    target = GaussianTarget.standard(20)
    rng = np.random.default_rng(6)
    rep = w2_contraction_estimate(target, 0.25, 5, "canonical", 200, 12, rng)
    assert not rep.step_bound_violated
    assert rep.factor <= rep.bound + 3 * rep.stderr
    assert rep.factor >= 0.5  # sanity: not absurdly contractive


def test_contraction_full_basis_closed_form():
    target = GaussianTarget.standard(20)
    rng = np.random.default_rng(7)
    rep = w2_contraction_estimate(
        target, 0.25, 20, "canonical", 5, 3, rng, epsilon=0.05
    )
    assert abs(rep.factor - 0.75) <= 1e-12
    assert rep.stderr <= 1e-12  # coupling is deterministic at m = d


def test_contraction_vanishing_step():
    target = GaussianTarget.standard(8)
    rng = np.random.default_rng(8)
    rep = w2_contraction_estimate(target, 1e-9, 2, "canonical", 30, 4, rng)
    assert abs(rep.factor - 1.0) <= 1e-4


def test_contraction_flags_step_bound():
    target = GaussianTarget.standard(8)
    rng = np.random.default_rng(9)
    rep = w2_contraction_estimate(target, 0.9, 2, "canonical", 5, 2, rng)
    assert rep.step_bound_violated


# ---------------------------------------------------------------- moments


def test_moment_check_calibration_iid(rng, gauss2_aniso):
    draws = rng.multivariate_normal(np.zeros(2), gauss2_aniso.covariance, size=200_000)
    rep = moment_stationarity_check(draws, gauss2_aniso)
    assert rep.passed


def test_moment_check_flags_biased_kernel(gauss2_aniso):
    # unadjusted Langevin with a large step has an inflated stationary law
    cfg = SamplerConfig(
        kernel="zo-ula", m=2, scale=0.4, adapt=False, chunk_size=None
    )
    with pytest.warns(UserWarning):
        res = run_chain(gauss2_aniso, cfg, 40_000, np.zeros(2), seed=3)
    rep = moment_stationarity_check(res.trajectory.post_burnin(), gauss2_aniso)
    assert not rep.passed


# ---------------------------------------------------------------- reports and sweeps


def _report(m, value, kernel="rs-hmc", L=1, d=200):
    return EfficiencyReport(
        kernel=kernel,
        d=d,
        m=m,
        n_leapfrog=L,
        law="canonical",
        esjd=value,
        esjd_per_round=value / L,
        gain_vs_rwm=None,
        acceptance_rate=0.5,
        rounds=m,
        evals=m,
    )


def test_efficiency_report_roundtrip(gauss2_aniso):
    cfg = SamplerConfig(kernel="rwm", chunk_size=None)
    res = run_chain(gauss2_aniso, cfg, 2000, np.zeros(2), seed=1)
    rep = efficiency_report(res, esjd_rwm=0.1)
    again = EfficiencyReport.from_json(rep.to_json())
    assert again == rep
    assert rep.gain_vs_rwm == pytest.approx(rep.esjd / 0.1)


def test_eff_sweep_single_point_grid():
    rows, argmax = eff_sweep([_report(10, 1.0)], [10])
    assert len(rows) == 1 and rows[0]["eff_ratio"] == 1.0
    assert argmax == {10: 10}


def test_eff_sweep_argmax_at_reference_for_sublinear_esjd():
    # ESJD growing like m^(2/3): relative efficiency peaks at m = m0
    reports = [_report(m, m ** (2.0 / 3.0)) for m in (5, 10, 20, 40)]
    rows, argmax = eff_sweep(reports, [10])
    assert argmax[10] == 10
    ratios = {r["m"]: r["eff_ratio"] for r in rows}
    assert ratios[20] < 1.0 and ratios[40] < ratios[20]


def test_eff_sweep_rejects_mixed_reports():
    with pytest.raises(ValueError, match="mix"):
        eff_sweep([_report(5, 1.0), _report(10, 2.0, kernel="mtm")], [5])
    with pytest.raises(ValueError, match="m0"):
        eff_sweep([_report(5, 1.0)], [10])


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(states=np.array([np.nan, 1.0])[:, None], accepted=np.array([True]))
    tr = Trajectory(states=np.arange(10, dtype=float)[:, None], accepted=np.ones(9, bool))
    assert tr.post_burnin(0.5).shape == (6, 1)  # drops the first half of the jumps
    assert tr.n_kept == 10 and tr.dimension == 1

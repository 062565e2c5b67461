"""Efficiency metrics and correctness diagnostics for sampler runs.

Conventions fixed here and used throughout the benchmark harness:

* ESJD is the mean squared consecutive displacement per coordinate over kept
  states, rejections included (rejected steps contribute zero jumps).
* Gains are normalized per parallel round: an algorithm using m directions
  on m0 processors pays ceil(m/m0) rounds per gradient and L gradient rounds
  per iteration, so reported gains divide the raw ESJD ratio by
  ceil(m/m0) * L.  (For every integer multiple m >= m0 this equals the plain
  (m/m0) * L normalization; below m0 a gradient still costs one full round.)
* Monte-Carlo tolerances are three standard errors unless stated otherwise.
* Moment checks and ESJD are computed on the post-burn-in half of a run by
  the benchmark harness; the functions here take whatever slice they are
  given.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .directions import DirectionLaw
from .engine import RoundExecutor, directional_derivatives


@dataclass
class Trajectory:
    """Kept states of one chain plus per-step acceptance flags and metadata."""

    states: np.ndarray
    accepted: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2:
            raise ValueError("states must be (n_kept, d)")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("trajectory contains non-finite states")

    @property
    def n_kept(self):
        return self.states.shape[0]

    @property
    def dimension(self):
        return self.states.shape[1]

    def post_burnin(self, fraction=0.5):
        """Kept states from the given fraction of the run onward."""
        start = int(fraction * (self.n_kept - 1))
        return self.states[start:]


def esjd(states) -> float:
    """Expected squared jump distance per coordinate.

    For kept states X_1..X_n: sum of squared consecutive differences over
    all coordinates divided by d (n - 1).
    """
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    n, d = states.shape
    if n < 2:
        raise ValueError("need at least two states for ESJD")
    diffs = np.diff(states, axis=0)
    return float((diffs * diffs).sum() / (d * (n - 1)))


def parallel_cost_factor(m, m0, n_leapfrog=1) -> float:
    """Parallel rounds per iteration relative to an m0-processor baseline.

    A gradient along m directions costs ceil(m/m0) rounds on m0 processors
    (one round cannot shrink below one), and an iteration runs n_leapfrog
    gradient rounds.
    """
    if m0 < 1 or m < 1:
        raise ValueError("m and m0 must be >= 1")
    if n_leapfrog < 1:
        raise ValueError("n_leapfrog must be >= 1")
    return float(math.ceil(m / m0) * n_leapfrog)


def relative_gain(esjd_alg, esjd_rwm, n_leapfrog=1, m=None, m0=None) -> float:
    """ESJD ratio against the random-walk baseline, normalized per round.

    With m = m0 (one round per gradient) this is the per-round gain plotted
    by the benchmark figures: (esjd_alg / esjd_rwm) / n_leapfrog.
    """
    if esjd_rwm <= 0:
        raise ValueError("baseline ESJD must be positive")
    if (m is None) != (m0 is None):
        raise ValueError("m and m0 must be given together")
    cost = parallel_cost_factor(m, m0, n_leapfrog) if m is not None else float(n_leapfrog)
    return (esjd_alg / esjd_rwm) / cost


@dataclass
class ContractionReport:
    factor: float
    bound: float
    stderr: float
    n_pairs: int
    n_steps: int
    step_bound_violated: bool = False

    @property
    def within_bound(self):
        return self.factor <= self.bound + 3.0 * self.stderr


def w2_contraction_estimate(
    target,
    gamma,
    m,
    law,
    n_pairs,
    n_steps,
    rng,
    *,
    epsilon=1e-5,
    pair_scale=1.0,
) -> ContractionReport:
    """Synchronous-coupling estimate of the per-step contraction factor.

    Runs n_pairs coupled unadjusted chains from random pairs (x, y) sharing
    the (V, Z) draws, and averages (|X_t - Y_t| / |x - y|)^(1/t).  For a
    lambda-convex target with step gamma <= m/(L d) the factor should not
    exceed sqrt(1 - gamma lambda) (checked against three standard errors by
    callers).  The report notes when gamma violates the step bound.

    The forward-difference bias is deterministic given (V, position
    curvature) and cancels between the coupled chains on quadratic targets,
    so a large epsilon may be used to suppress cancellation noise when
    comparing against closed forms.
    """
    if target.convexity is None:
        raise ValueError("contraction estimate needs a target with known convexity")
    d = target.dimension
    law = DirectionLaw.parse(law)
    violated = False
    if target.smoothness is not None:
        violated = gamma > m / (target.smoothness * d) * (1 + 1e-12)
    factors = np.empty(n_pairs)
    with RoundExecutor(target, chunk_size=None) as executor:
        c = d / m
        for i in range(n_pairs):
            x = pair_scale * rng.standard_normal(d)
            y = pair_scale * rng.standard_normal(d)
            r0 = np.linalg.norm(x - y)
            for _ in range(n_steps):
                V = law.sample(rng, d, m)
                z = rng.standard_normal(d)
                gx, _ = directional_derivatives(executor, x, V, epsilon)
                gy, _ = directional_derivatives(executor, y, V, epsilon)
                noise = math.sqrt(2.0 * gamma) * z
                x = x - gamma * c * V.lift(gx) + noise
                y = y - gamma * c * V.lift(gy) + noise
            factors[i] = (np.linalg.norm(x - y) / r0) ** (1.0 / n_steps)
    bound = math.sqrt(max(0.0, 1.0 - gamma * target.convexity))
    stderr = float(factors.std(ddof=1) / math.sqrt(n_pairs)) if n_pairs > 1 else 0.0
    return ContractionReport(
        factor=float(factors.mean()),
        bound=bound,
        stderr=stderr,
        n_pairs=n_pairs,
        n_steps=n_steps,
        step_bound_violated=violated,
    )


@dataclass
class MomentReport:
    mean_error: float
    mean_tolerance: float
    cov_rel_error: float
    cov_tolerance: float
    n_states: int

    @property
    def passed(self):
        return (
            self.mean_error <= self.mean_tolerance
            and self.cov_rel_error <= self.cov_tolerance
        )


def moment_stationarity_check(
    states, gaussian_target, mean_tol=None, cov_rtol=0.03
) -> MomentReport:
    """Compare sample moments against a Gaussian target's closed forms.

    mean_error is the worst absolute componentwise deviation from the target
    mean; cov_rel_error the worst covariance-entry deviation relative to the
    per-entry scale sqrt(C_ii C_jj).  The default mean tolerance is
    0.02 sqrt(tr(C)/d).
    """
    states = np.asarray(states, dtype=float)
    C = gaussian_target.covariance
    if mean_tol is None:
        mean_tol = 0.02 * math.sqrt(np.trace(C) / gaussian_target.dimension)
    mean_err = float(np.abs(states.mean(axis=0) - gaussian_target.mean).max())
    sample_cov = np.cov(states.T) if states.shape[1] > 1 else np.array(
        [[states[:, 0].var(ddof=1)]]
    )
    scale = np.sqrt(np.outer(np.diag(C), np.diag(C)))
    cov_err = float((np.abs(sample_cov - C) / scale).max())
    return MomentReport(
        mean_error=mean_err,
        mean_tolerance=float(mean_tol),
        cov_rel_error=cov_err,
        cov_tolerance=float(cov_rtol),
        n_states=states.shape[0],
    )


@dataclass
class EfficiencyReport:
    """Per-cell benchmark summary, serializable to JSON."""

    kernel: str
    d: int
    m: int
    n_leapfrog: int
    law: str
    esjd: float
    esjd_per_round: float
    gain_vs_rwm: float | None
    acceptance_rate: float
    rounds: int
    evals: int
    seed: int | None = None
    scale_final: float | None = None

    def __post_init__(self):
        if self.esjd < 0 or self.acceptance_rate < 0:
            raise ValueError("efficiency metrics must be non-negative")

    def as_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def efficiency_report(result, esjd_rwm=None, burnin_fraction=0.5) -> EfficiencyReport:
    """Summarize a ChainResult; gain is filled when a baseline ESJD is given."""
    meta = result.trajectory.meta
    value = esjd(result.trajectory.post_burnin(burnin_fraction))
    L = meta.get("n_leapfrog", 1)
    gain = None
    if esjd_rwm is not None:
        gain = relative_gain(value, esjd_rwm, L, meta["m"], meta["m"])
    return EfficiencyReport(
        kernel=meta["kernel"],
        d=meta["d"],
        m=meta["m"],
        n_leapfrog=L,
        law=meta["law"],
        esjd=value,
        esjd_per_round=value / L if meta["kernel"] == "rs-hmc" else value,
        gain_vs_rwm=gain,
        acceptance_rate=result.info["acceptance_rate_post_burnin"],
        rounds=result.ledger.rounds,
        evals=result.ledger.evals,
        seed=result.info.get("seed"),
        scale_final=result.info.get("scale_final"),
    )


def eff_sweep(reports, m0_grid):
    """Relative efficiency Eff(m)/Eff(m0) over a grid of processor counts.

    ``reports`` must share kernel family and dimension and contain one entry
    per m (pre-averaged over seeds).  Eff(m) = ESJD / (ceil(m/m0) * L).
    Returns (rows, argmax) where rows carry one dict per (m0, m) pair and
    argmax maps each m0 to the m with maximal relative efficiency.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("no reports given")
    kernels = {(r.kernel, r.d) for r in reports}
    if len(kernels) != 1:
        raise ValueError(f"reports mix kernels/targets: {sorted(kernels)}")
    by_m = {r.m: r for r in reports}
    rows = []
    argmax = {}
    for m0 in m0_grid:
        if m0 not in by_m:
            raise ValueError(f"no report for reference m0={m0}")
        ref = by_m[m0]
        eff0 = ref.esjd / parallel_cost_factor(ref.m, m0, ref.n_leapfrog)
        best_m, best_val = None, -np.inf
        for r in reports:
            eff = r.esjd / parallel_cost_factor(r.m, m0, r.n_leapfrog)
            ratio = eff / eff0
            rows.append(
                {
                    "kernel": r.kernel,
                    "d": r.d,
                    "m": r.m,
                    "m0": m0,
                    "L": r.n_leapfrog,
                    "esjd": r.esjd,
                    "eff_ratio": ratio,
                    "acc_rate": r.acceptance_rate,
                    "rounds": r.rounds,
                }
            )
            if ratio > best_val:
                best_m, best_val = r.m, ratio
        argmax[m0] = best_m
    return rows, argmax

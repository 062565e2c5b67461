"""Markov kernels: random-walk baseline, naive zeroth-order Langevin schemes,
random-slice HMC, a locally balanced multiple-try baseline, Robbins-Monro
scale adaptation, and linear preconditioning.

All kernels consume randomness only on the coordinating thread, in a fixed
documented order per step (see each kernel's docstring), so trajectories are
reproducible for any worker count.  Potential evaluations all flow through a
RoundExecutor and are charged to its ledger.

Random-slice kernels update only the span(V) component of the state; the
naive Metropolis-adjusted scheme keeps the same V for the forward and
reverse proposal densities within a step (a fresh reverse V would break
invariance of the target).
"""

from __future__ import annotations

import copy
import math
import time
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
import scipy.linalg

from .directions import DirectionLaw
from .targets import TargetModel
from .engine import (
    DivergenceError,
    NonFinitePotentialError,
    RoundExecutor,
    default_workers,
    directional_derivatives,
)
from .diagnostics import Trajectory

KERNELS = ("rwm", "zo-ula", "naive-zo-mala", "rs-hmc", "rs-mala", "mtm")

# Classical optimal-scaling acceptance targets used by the adaptive scheme.
DEFAULT_TARGET_ACCEPTANCE = {
    "rwm": 0.234,
    "mtm": 0.234,
    "naive-zo-mala": 0.574,
    "rs-mala": 0.574,
    "rs-hmc": 0.651,
}


class ChainState:
    """Current position, cached potential (None when not yet evaluated), index."""

    __slots__ = ("x", "potential", "t")

    def __init__(self, x, potential, t):
        self.x = x
        self.potential = potential
        self.t = t


class KernelOutcome:
    """Result of one kernel step; rejected steps keep the prior state intact."""

    __slots__ = ("state", "accepted", "log_ratio", "rounds", "diverged")

    def __init__(self, state, accepted, log_ratio, rounds, diverged=False):
        self.state = state
        self.accepted = accepted
        self.log_ratio = log_ratio
        self.rounds = rounds
        self.diverged = diverged


@dataclass
class SamplerConfig:
    """Everything needed to build and run one kernel.

    ``rs-mala`` is an alias for ``rs-hmc`` with one leapfrog step.  ``scale``
    semantics per kernel: proposal standard deviation for rwm/naive-zo-mala/
    mtm, leapfrog step size for rs-hmc, unadjusted step gamma for zo-ula.
    """

    kernel: str = "rwm"
    m: int = 1
    law: str = "canonical"
    scale: float | None = None
    n_leapfrog: int = 1
    epsilon: float = 1e-5
    adapt: bool = True
    target_acceptance: float | None = None
    adapt_decay: float = 0.6
    burnin_fraction: float = 0.5
    preconditioner: np.ndarray | None = None
    workers: int | None = None
    chunk_size: int | None = 1
    thin: int = 1
    divergence_norm: float = 1e8

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}; choose from {KERNELS}")
        if self.kernel == "rs-mala":
            self.kernel = "rs-hmc"
            self.n_leapfrog = 1
        if self.scale is not None and self.scale < 0:
            raise ValueError("scale must be positive")
        if self.n_leapfrog < 1:
            raise ValueError("n_leapfrog must be >= 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 <= self.burnin_fraction < 1.0:
            raise ValueError("burnin_fraction must be in [0, 1)")
        DirectionLaw.parse(self.law)

    def resolved_target_acceptance(self):
        if self.target_acceptance is not None:
            return self.target_acceptance
        if self.kernel == "rs-hmc":
            key = "rs-mala" if self.n_leapfrog == 1 else "rs-hmc"
        else:
            key = self.kernel
        return DEFAULT_TARGET_ACCEPTANCE.get(key)

    def as_dict(self):
        out = asdict(self)
        if out["preconditioner"] is not None:
            out["preconditioner"] = np.asarray(out["preconditioner"]).tolist()
        return out


def default_scale(kernel, d, m, n_leapfrog=1):
    """Adaptation starting points; Robbins-Monro moves fast from these."""
    if kernel in ("rwm", "mtm", "naive-zo-mala"):
        return 2.38 / math.sqrt(d)
    if kernel == "rs-hmc":
        return 0.5 * m ** (-1.0 / 6.0)
    if kernel == "zo-ula":
        return 0.01
    raise ValueError(kernel)


def adapt_scale(scale, accepted, t, target_acceptance, decay=0.6):
    """Robbins-Monro update on the log of the scale.

    log s <- log s + t^-decay (accept_indicator - target).  Strictly
    increasing under acceptance, strictly decreasing under rejection.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    step = t ** (-decay) * ((1.0 if accepted else 0.0) - target_acceptance)
    return scale * math.exp(step)


class Kernel:
    """Base: one Metropolis (or unadjusted) transition per ``step`` call."""

    adaptable = True

    def __init__(self, executor, scale):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.executor = executor
        self.scale = scale

    @property
    def target(self):
        return self.executor.target

    def with_executor(self, executor):
        clone = copy.copy(self)
        clone.executor = executor
        return clone

    def init_state(self, x0) -> ChainState:
        """Evaluate the starting potential (one round of one evaluation)."""
        x0 = np.asarray(x0, dtype=float).copy()
        u0 = float(self.executor.evaluate_round(x0[None, :])[0])
        return ChainState(x0, u0, 0)

    def step(self, state, rng) -> KernelOutcome:
        raise NotImplementedError


def _mh_decision(u, log_ratio):
    # log u < log_ratio; u in (0,1) so rejection is certain for -inf ratios.
    return math.log(u) < log_ratio


class RandomWalkKernel(Kernel):
    """Gaussian random walk with accept probability min(1, exp(U(x)-U(y))).

    Draw order per step: proposal normal z, acceptance uniform u.
    One round of one evaluation per step (two when the cached base potential
    is missing, e.g. right after an unadjusted move).
    """

    def step(self, state, rng):
        z = rng.standard_normal(self.target.dimension)
        u = rng.random()
        y = state.x + self.scale * z
        if state.potential is None:
            vals = self.executor.evaluate_round(np.stack([state.x, y]))
            ux, uy = float(vals[0]), float(vals[1])
        else:
            ux = state.potential
            uy = float(self.executor.evaluate_round(y[None, :])[0])
        log_ratio = ux - uy
        if _mh_decision(u, log_ratio):
            return KernelOutcome(ChainState(y, uy, state.t + 1), True, log_ratio, 1)
        return KernelOutcome(
            ChainState(state.x, ux, state.t + 1), False, log_ratio, 1
        )


class ZoUlaKernel(Kernel):
    """Unadjusted Langevin move driven by the lifted zeroth-order estimate.

    x' = x - gamma * ghat + sqrt(2 gamma) Z.  Draw order: direction frame V,
    noise Z.  One finite-difference round per step; the potential cache is
    invalidated (no evaluation happens at the new point).
    """

    adaptable = False

    def __init__(self, executor, scale, m, law, epsilon, divergence_norm=1e8):
        super().__init__(executor, scale)
        self.m = m
        self.law = DirectionLaw.parse(law)
        self.epsilon = epsilon
        self.divergence_norm = divergence_norm
        L = self.target.smoothness
        if L is not None and scale > m / (L * self.target.dimension) * (1 + 1e-12):
            warnings.warn(
                f"gamma={scale:g} exceeds the contraction step bound "
                f"m/(L d)={m / (L * self.target.dimension):g}",
                stacklevel=2,
            )

    def step(self, state, rng):
        d = self.target.dimension
        V = self.law.sample(rng, d, self.m)
        z = rng.standard_normal(d)
        g_slice, _ = directional_derivatives(
            self.executor, state.x, V, self.epsilon, base_value=state.potential
        )
        ghat = (d / self.m) * V.lift(g_slice)
        y = state.x - self.scale * ghat + math.sqrt(2.0 * self.scale) * z
        if not np.all(np.isfinite(y)) or np.linalg.norm(y) > self.divergence_norm:
            raise DivergenceError(
                f"unadjusted chain diverged: |x| > {self.divergence_norm:g}"
            )
        return KernelOutcome(ChainState(y, None, state.t + 1), True, 0.0, 1)


class NaiveZoMalaKernel(Kernel):
    """Full-dimensional Langevin proposal around the zeroth-order drift.

    y ~ N(x - (scale^2/2) ghat_V(x), scale^2 I_d), with the Metropolis
    correction computed against the same V in both directions.  Two rounds
    per step: forward derivatives at x, reverse derivatives at y (the base
    evaluation U(y) rides in the second round).

    Draw order: V, proposal normal z, acceptance uniform u.
    """

    def __init__(self, executor, scale, m, law, epsilon):
        super().__init__(executor, scale)
        self.m = m
        self.law = DirectionLaw.parse(law)
        self.epsilon = epsilon

    def step(self, state, rng):
        d = self.target.dimension
        sigma = self.scale
        V = self.law.sample(rng, d, self.m)
        z = rng.standard_normal(d)
        u = rng.random()
        c = d / self.m
        g_x, ux = directional_derivatives(
            self.executor, state.x, V, self.epsilon, base_value=state.potential
        )
        ghat_x = c * V.lift(g_x)
        y = state.x - 0.5 * sigma * sigma * ghat_x + sigma * z
        g_y, uy = directional_derivatives(self.executor, y, V, self.epsilon)
        ghat_y = c * V.lift(g_y)
        back = state.x - (y - 0.5 * sigma * sigma * ghat_y)
        with np.errstate(over="ignore"):
            log_q_fwd = -0.5 * float(z @ z)
            log_q_rev = -0.5 * float(back @ back) / (sigma * sigma)
            log_ratio = (ux - uy) + (log_q_rev - log_q_fwd)
        if math.isnan(log_ratio):
            log_ratio = -np.inf
        if _mh_decision(u, log_ratio):
            return KernelOutcome(ChainState(y, uy, state.t + 1), True, log_ratio, 2)
        return KernelOutcome(
            ChainState(state.x, ux, state.t + 1), False, log_ratio, 2
        )


class RsHmcKernel(Kernel):
    """Random-slice zeroth-order HMC; one leapfrog step gives RS-MALA.

    Each step samples a frame V and slice momentum k ~ N(0, I_m), runs L
    leapfrog steps in slice coordinates with forward-difference slice
    gradients re-evaluated at every position, negates the final momentum,
    and accepts with min(1, exp(U(x) - U(x + V s_L) + (|k|^2 - |k_L|^2)/2)).
    Costs L+1 rounds of m+1 evaluations (the first round reuses the cached
    U(x); the final round's base value doubles as the acceptance potential).

    A non-finite potential along the trajectory rejects the step (divergent
    trajectory) rather than aborting the chain.

    Draw order: V, momentum k, acceptance uniform u.
    """

    def __init__(self, executor, scale, m, law, epsilon, n_leapfrog):
        super().__init__(executor, scale)
        self.m = m
        self.law = DirectionLaw.parse(law)
        self.epsilon = epsilon
        self.n_leapfrog = n_leapfrog

    def step(self, state, rng):
        d = self.target.dimension
        step = self.scale
        V = self.law.sample(rng, d, self.m)
        k = rng.standard_normal(self.m)
        u = rng.random()
        x = state.x
        rounds = 0
        try:
            g, ux = directional_derivatives(
                self.executor, x, V, self.epsilon, base_value=state.potential
            )
            rounds += 1
            kp = k - 0.5 * step * g
            s = step * kp
            for _ in range(self.n_leapfrog - 1):
                g, _ = directional_derivatives(
                    self.executor, V.shift(x, s), V, self.epsilon
                )
                rounds += 1
                kp = kp - step * g
                s = s + step * kp
            y = V.shift(x, s)
            g, uy = directional_derivatives(self.executor, y, V, self.epsilon)
            rounds += 1
            k_final = -(kp - 0.5 * step * g)
        except NonFinitePotentialError:
            return KernelOutcome(
                ChainState(x, state.potential, state.t + 1),
                False,
                -np.inf,
                rounds,
                diverged=True,
            )
        with np.errstate(over="ignore"):
            log_ratio = ux - uy + 0.5 * (float(k @ k) - float(k_final @ k_final))
        if math.isnan(log_ratio):
            log_ratio = -np.inf
        if _mh_decision(u, log_ratio):
            return KernelOutcome(
                ChainState(y, uy, state.t + 1), True, log_ratio, rounds
            )
        return KernelOutcome(
            ChainState(x, ux, state.t + 1), False, log_ratio, rounds
        )


class MtmKernel(Kernel):
    """Multiple-try Metropolis with locally balanced weights sqrt(pi(y)/pi(x)).

    m_try i.i.d. Gaussian candidates are evaluated in one round; a candidate
    is selected with probability proportional to its weight; the reverse set
    is m_try - 1 fresh candidates around the selection plus the current
    point; acceptance is the ratio of forward to reverse weight sums.

    Draw order: forward normals, selection uniform, reverse normals,
    acceptance uniform (all drawn up front, fixed consumption).
    """

    def __init__(self, executor, scale, m_try):
        super().__init__(executor, scale)
        if m_try < 1:
            raise ValueError("m_try must be >= 1")
        self.m_try = m_try

    def step(self, state, rng):
        d = self.target.dimension
        mt = self.m_try
        z_fwd = rng.standard_normal((mt, d))
        u_sel = rng.random()
        z_rev = rng.standard_normal((mt - 1, d)) if mt > 1 else None
        u_acc = rng.random()

        if state.potential is None:
            vals = self.executor.evaluate_round(
                np.concatenate([state.x[None, :], state.x + self.scale * z_fwd])
            )
            ux = float(vals[0])
            u_try = vals[1:]
        else:
            ux = state.potential
            u_try = self.executor.evaluate_round(state.x + self.scale * z_fwd)
        rounds = 1

        with np.errstate(invalid="ignore"):
            logw_fwd = 0.5 * (ux - u_try)
        logw_fwd = np.where(np.isfinite(logw_fwd), logw_fwd, -np.inf)
        top = logw_fwd.max()
        if not np.isfinite(top):
            # every candidate had a non-finite weight
            return KernelOutcome(
                ChainState(state.x, ux, state.t + 1),
                False,
                -np.inf,
                rounds,
                diverged=True,
            )
        w = np.exp(logw_fwd - top)
        cum = np.cumsum(w)
        j = int(np.searchsorted(cum, u_sel * cum[-1], side="right"))
        j = min(j, mt - 1)
        y = state.x + self.scale * z_fwd[j]
        uy = float(u_try[j])

        log_sum_fwd = top + math.log(float(cum[-1]))
        if mt > 1:
            u_rev = self.executor.evaluate_round(y + self.scale * z_rev)
            rounds += 1
            rev_pot = np.concatenate([u_rev, [ux]])
        else:
            rev_pot = np.array([ux])
        with np.errstate(invalid="ignore"):
            logw_rev = 0.5 * (uy - rev_pot)
        logw_rev = np.where(np.isfinite(logw_rev), logw_rev, -np.inf)
        rtop = logw_rev.max()
        log_sum_rev = rtop + math.log(float(np.exp(logw_rev - rtop).sum()))
        log_ratio = log_sum_fwd - log_sum_rev
        if _mh_decision(u_acc, log_ratio):
            return KernelOutcome(ChainState(y, uy, state.t + 1), True, log_ratio, rounds)
        return KernelOutcome(
            ChainState(state.x, ux, state.t + 1), False, log_ratio, rounds
        )


class PreconditionedTarget(TargetModel):
    """Pulled-back potential U(A^-1 y) of a base target under y = A x."""

    def __init__(self, base, lu_piv):
        self.base = base
        self._lu_piv = lu_piv
        self.dimension = base.dimension

    def _pull(self, Y):
        return scipy.linalg.lu_solve(self._lu_piv, Y.T, check_finite=False).T

    def _potential(self, y):
        return self.base._potential(self._pull(y[None, :])[0])

    def _potential_batch(self, Y):
        return self.base._potential_batch(self._pull(Y))


class PreconditionedKernel(Kernel):
    """Run any kernel in reparameterized coordinates y = A x.

    Each step maps the state to y-space, applies one inner step against the
    pulled-back potential U(A^-1 y) and maps the result back; potentials are
    unchanged in value, so the cached base potential transfers both ways, and
    the ledger sees exactly the evaluations the inner kernel makes.
    """

    def __init__(self, inner, matrix):
        A = np.asarray(matrix, dtype=float)
        d = inner.target.dimension
        if A.shape != (d, d):
            raise ValueError(f"preconditioner must be {d} x {d}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # singularity is re-checked below
            lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
        diag = np.abs(np.diag(lu))
        if not np.all(np.isfinite(lu)) or diag.min() <= 1e3 * np.finfo(float).eps * max(
            1.0, diag.max()
        ):
            raise ValueError("preconditioner is singular or near-singular")
        self.matrix = A
        self._lu_piv = (lu, piv)
        pulled = PreconditionedTarget(inner.target, self._lu_piv)
        self.inner = inner.with_executor(inner.executor.spawn(pulled))
        self.executor = inner.executor

    @property
    def adaptable(self):
        return self.inner.adaptable

    @property
    def scale(self):
        return self.inner.scale

    @scale.setter
    def scale(self, value):
        self.inner.scale = value

    def _to_y(self, x):
        return self.matrix @ x

    def _to_x(self, y):
        return scipy.linalg.lu_solve(self._lu_piv, y, check_finite=False)

    def init_state(self, x0):
        x0 = np.asarray(x0, dtype=float).copy()
        inner_state = self.inner.init_state(self._to_y(x0))
        return ChainState(x0, inner_state.potential, 0)

    def step(self, state, rng):
        y_state = ChainState(self._to_y(state.x), state.potential, state.t)
        out = self.inner.step(y_state, rng)
        if out.accepted:
            x_new = self._to_x(out.state.x)
        else:
            x_new = state.x
        return KernelOutcome(
            ChainState(x_new, out.state.potential, out.state.t),
            out.accepted,
            out.log_ratio,
            out.rounds,
            out.diverged,
        )


def build_kernel(target, config: SamplerConfig, executor=None):
    """Construct the configured kernel (wrapped if a preconditioner is set)."""
    if config.m > target.dimension and config.kernel in ("zo-ula", "naive-zo-mala", "rs-hmc"):
        raise ValueError(f"m={config.m} exceeds target dimension {target.dimension}")
    if executor is None:
        workers = config.workers if config.workers is not None else default_workers()
        executor = RoundExecutor(target, workers=workers, chunk_size=config.chunk_size)
    scale = config.scale
    if scale is None:
        scale = default_scale(config.kernel, target.dimension, config.m, config.n_leapfrog)
    if config.kernel == "rwm":
        kernel = RandomWalkKernel(executor, scale)
    elif config.kernel == "zo-ula":
        kernel = ZoUlaKernel(
            executor, scale, config.m, config.law, config.epsilon, config.divergence_norm
        )
    elif config.kernel == "naive-zo-mala":
        kernel = NaiveZoMalaKernel(executor, scale, config.m, config.law, config.epsilon)
    elif config.kernel == "rs-hmc":
        kernel = RsHmcKernel(
            executor, scale, config.m, config.law, config.epsilon, config.n_leapfrog
        )
    elif config.kernel == "mtm":
        kernel = MtmKernel(executor, scale, config.m)
    else:  # pragma: no cover - guarded by SamplerConfig
        raise ValueError(config.kernel)
    if config.preconditioner is not None:
        kernel = PreconditionedKernel(kernel, config.preconditioner)
    return kernel


@dataclass
class ChainResult:
    trajectory: Trajectory
    ledger: object
    info: dict = field(default_factory=dict)


def run_chain(target, config: SamplerConfig, n_steps, x0, seed) -> ChainResult:
    """Iterate the configured kernel n_steps times from x0.

    Fully deterministic given (seed, config); the worker count affects only
    wall-clock.  Scale adaptation runs during the burn-in fraction and is
    frozen afterwards.  Recorded positions include the initial state and
    every ``config.thin``-th state after it.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    rng = np.random.default_rng(seed)
    kernel = build_kernel(target, config)
    started = time.perf_counter()
    state = kernel.init_state(x0)

    burnin = int(config.burnin_fraction * n_steps)
    target_rate = config.resolved_target_acceptance()
    adapt = config.adapt and kernel.adaptable and target_rate is not None

    n_kept = n_steps // config.thin + 1
    states = np.empty((n_kept, target.dimension))
    states[0] = state.x
    accepted = np.zeros(n_steps, dtype=bool)
    kept = 1
    divergences = 0
    accepted_post = 0

    for t in range(1, n_steps + 1):
        try:
            out = kernel.step(state, rng)
        except Exception as exc:
            kernel.executor.close()
            raise RuntimeError(f"kernel failed at iteration {t}: {exc}") from exc
        state = out.state
        accepted[t - 1] = out.accepted
        divergences += out.diverged
        if t > burnin:
            accepted_post += out.accepted
        elif adapt:
            kernel.scale = adapt_scale(
                kernel.scale, out.accepted, t, target_rate, config.adapt_decay
            )
        if t % config.thin == 0:
            states[kept] = state.x
            kept += 1
    kernel.executor.close()

    meta = {
        "kernel": config.kernel,
        "m": config.m,
        "n_leapfrog": config.n_leapfrog if config.kernel == "rs-hmc" else 1,
        "law": DirectionLaw.parse(config.law).value,
        "d": target.dimension,
        "thin": config.thin,
        "burnin_steps": burnin,
        "seed": seed,
    }
    trajectory = Trajectory(states=states[:kept], accepted=accepted, meta=meta)
    info = {
        "acceptance_rate": float(accepted.mean()),
        "acceptance_rate_post_burnin": float(accepted_post / max(1, n_steps - burnin)),
        "scale_final": kernel.scale,
        "divergences": divergences,
        "n_steps": n_steps,
        "burnin_steps": burnin,
        "seed": seed,
        "wall_time": time.perf_counter() - started,
        "target_acceptance": target_rate,
    }
    return ChainResult(trajectory=trajectory, ledger=kernel.executor.ledger, info=info)


def leapfrog_slice_map(slice_grad, s0, k, step, n_leapfrog):
    """The deterministic slice-leapfrog map T with final momentum negation.

    T is an involution (T(T(s, k)) = (s, k)) and volume preserving; both
    properties are what the acceptance ratio of RsHmcKernel relies on.
    """
    kp = k - 0.5 * step * slice_grad(s0)
    s = s0 + step * kp
    for _ in range(n_leapfrog - 1):
        kp = kp - step * slice_grad(s)
        s = s + step * kp
    k_out = -(kp - 0.5 * step * slice_grad(s))
    return s, k_out


@dataclass
class InvolutionReport:
    involution_deviation: float
    log_abs_det_jacobian: float | None = None


def leapfrog_involution_check(
    target,
    x,
    V,
    s0,
    k,
    step,
    n_leapfrog,
    epsilon=None,
    jacobian_probe=1e-5,
    check_jacobian=True,
):
    """Apply the slice-leapfrog map twice and measure the return error.

    ``epsilon=None`` differentiates the slice potential with the analytic
    gradient oracle; a positive epsilon uses forward differences, matching
    what the sampler actually does.  When ``check_jacobian`` is set, the
    Jacobian of the map at (s0, k) is estimated by central differences and
    |log |det J|| is reported (feasible for small m only).
    """
    x = np.asarray(x, dtype=float)
    s0 = np.asarray(s0, dtype=float)
    k = np.asarray(k, dtype=float)
    m = V.m

    if epsilon is None:
        def slice_grad(s):
            return V.project(target.gradient_oracle(V.shift(x, s)))
    else:
        def slice_grad(s):
            pts = V.fd_round_points(V.shift(x, s), epsilon, include_base=True)
            vals = target.evaluate_batch(pts)
            return (vals[1:] - vals[0]) / epsilon

    def tmap(z):
        s_out, k_out = leapfrog_slice_map(
            slice_grad, z[:m], z[m:], step, n_leapfrog
        )
        return np.concatenate([s_out, k_out])

    z0 = np.concatenate([s0, k])
    z2 = tmap(tmap(z0))
    deviation = float(np.abs(z2 - z0).max())

    log_abs_det = None
    if check_jacobian:
        J = np.empty((2 * m, 2 * m))
        for j in range(2 * m):
            zp = z0.copy()
            zm = z0.copy()
            zp[j] += jacobian_probe
            zm[j] -= jacobian_probe
            J[:, j] = (tmap(zp) - tmap(zm)) / (2.0 * jacobian_probe)
        sign, logdet = np.linalg.slogdet(J)
        log_abs_det = float(abs(logdet)) if sign != 0 else np.inf
    return InvolutionReport(deviation, log_abs_det)

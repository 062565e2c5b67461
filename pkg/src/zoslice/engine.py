"""Parallel-round execution of finite-difference directional derivatives.

The unit of cost is the *parallel round*: one batch of potential evaluations
dispatched together.  A round's evaluations are independent, each result is
written to its own slot, and the coordinating thread is the only consumer of
randomness, so results are bit-identical for any worker count.

Rounds are dispatched in fixed-size chunks (``chunk_size``): 1 means one
evaluation per dispatched task (the pure oracle model, maximal overlap for
expensive targets), ``None`` means the whole round in a single vectorized
call (fastest for cheap numpy targets).  Chunk boundaries do not depend on
the worker count, but they do set the shapes of the underlying BLAS calls,
so ``chunk_size`` is part of a run's reproducibility contract.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .directions import DirectionLaw, DirectionMatrix


class NonFinitePotentialError(RuntimeError):
    """A potential evaluation returned a non-finite value.

    ``direction_index`` is the offending direction (0-based) or None when the
    base point itself was non-finite.
    """

    def __init__(self, message, direction_index=None):
        super().__init__(message)
        self.direction_index = direction_index


class DivergenceError(RuntimeError):
    """Iterate norm exceeded the divergence threshold."""


def default_workers() -> int:
    """Worker count from ZOSLICE_WORKERS, defaulting to 1."""
    return int(os.environ.get("ZOSLICE_WORKERS", "1"))


@dataclass
class FiniteDiffConfig:
    """Forward-difference settings: step size and round-execution knobs."""

    epsilon: float = 1e-5
    workers: int = 1
    chunk_size: int | None = 1

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class RoundLedger:
    """Cost counters: parallel rounds and total potential evaluations."""

    rounds: int = 0
    evals: int = 0
    max_round_size: int = 0

    def add_round(self, n_evals):
        self.rounds += 1
        self.evals += int(n_evals)
        if n_evals > self.max_round_size:
            self.max_round_size = int(n_evals)

    def as_dict(self):
        return {
            "rounds": self.rounds,
            "evals": self.evals,
            "max_round_size": self.max_round_size,
        }

    def copy(self):
        return RoundLedger(self.rounds, self.evals, self.max_round_size)


class RoundExecutor:
    """Dispatches parallel rounds against one target, charging a ledger.

    The thread pool is created once (round frequency is high; per-round pool
    spawning would contaminate wall-clock measurements) and shared by
    ``spawn``-ed executors so a preconditioning wrapper reuses both the pool
    and the ledger.
    """

    def __init__(self, target, workers=1, chunk_size=1, ledger=None):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        if chunk_size is not None and chunk_size < 1:
            raise ValueError("chunk_size must be >= 1 or None")
        self.target = target
        self.workers = workers
        self.chunk_size = chunk_size
        self.ledger = ledger if ledger is not None else RoundLedger()
        self._pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        self._owns_pool = self._pool is not None

    def spawn(self, target):
        """Executor over another target sharing this pool and ledger."""
        clone = RoundExecutor.__new__(RoundExecutor)
        clone.target = target
        clone.workers = self.workers
        clone.chunk_size = self.chunk_size
        clone.ledger = self.ledger
        clone._pool = self._pool
        clone._owns_pool = False
        return clone

    def _eval_chunk(self, chunk):
        if chunk.shape[0] == 1:
            return np.array([self.target.evaluate(chunk[0])])
        return self.target.evaluate_batch(chunk)

    def evaluate_round(self, points) -> np.ndarray:
        """Evaluate every row of ``points`` as one parallel round.

        Points are trusted to be finite (the kernels construct them from
        validated state); non-finite *values* are returned as-is for the
        caller to judge.  Whole-round dispatch skips the per-call input
        validation of the public target API.
        """
        k = points.shape[0]
        self.ledger.add_round(k)
        size = k if self.chunk_size is None else self.chunk_size
        if size >= k:
            if self._pool is None:
                return self.target._potential_batch(points)
            return self._eval_chunk(points)
        chunks = [points[i : i + size] for i in range(0, k, size)]
        if self._pool is None:
            parts = [self._eval_chunk(c) for c in chunks]
        else:
            parts = list(self._pool.map(self._eval_chunk, chunks))
        return np.concatenate(parts)

    def close(self):
        if self._pool is not None and self._owns_pool:
            self._pool.shutdown(wait=True)
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def directional_derivatives(executor, x, V, epsilon, base_value=None):
    """Forward differences (U(x + eps v_i) - U(x)) / eps in one round.

    When ``base_value`` is None the base evaluation joins the same round
    (one extra charged evaluation).  Returns (slice derivatives, U(x)).
    """
    include_base = base_value is None
    points = V.fd_round_points(x, epsilon, include_base)
    values = executor.evaluate_round(points)
    if include_base:
        base_value = float(values[0])
        perturbed = values[1:]
    else:
        perturbed = values
    with np.errstate(invalid="ignore", over="ignore"):
        slice_grad = (perturbed - base_value) / epsilon
    if not np.isfinite(slice_grad).all():
        if not math.isfinite(base_value):
            raise NonFinitePotentialError(
                "non-finite potential at the base point", direction_index=None
            )
        # covers non-finite potentials and overflowing differences alike
        bad = int(np.flatnonzero(~np.isfinite(slice_grad))[0])
        raise NonFinitePotentialError(
            f"non-finite directional derivative along direction {bad}",
            direction_index=bad,
        )
    return slice_grad, base_value


@dataclass
class ZoGradientEstimate:
    """Directional derivatives along V and the lifted full-space estimate."""

    direction: DirectionMatrix
    slice_grad: np.ndarray
    estimate: np.ndarray = field(repr=False)
    base_value: float = np.nan


def zo_gradient_estimate(executor, x, law, m, epsilon, rng, base_value=None):
    """Sample V from ``law`` and lift the slice derivatives: (d/m) V g_slice.

    Consumes exactly one parallel round.  The estimate lies in span(V) and is
    unbiased for the gradient under either direction law.
    """
    d = executor.target.dimension
    law = DirectionLaw.parse(law)
    V = law.sample(rng, d, m)
    g_slice, base = directional_derivatives(executor, x, V, epsilon, base_value)
    estimate = DirectionLaw.scaling(d, m) * V.lift(g_slice)
    return ZoGradientEstimate(V, g_slice, estimate, base)


@dataclass
class SgdResult:
    x: np.ndarray
    ledger: RoundLedger
    potentials: np.ndarray  # U at each visited iterate (pre-step base values)


def zo_sgd_minimize(
    target,
    x0,
    law,
    m,
    learning_rate,
    n_steps,
    *,
    epsilon=1e-5,
    rng=None,
    seed=None,
    workers=1,
    chunk_size=1,
    divergence_norm=1e8,
):
    """Two-line zeroth-order SGD: sample V, step against the lifted estimate.

    ``learning_rate`` is a constant or a callable t -> l_t (t starting at 1).
    Aborts with DivergenceError when the iterate norm exceeds
    ``divergence_norm``.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    lr = learning_rate if callable(learning_rate) else (lambda t: learning_rate)
    x = np.asarray(x0, dtype=float).copy()
    law = DirectionLaw.parse(law)
    potentials = np.empty(n_steps)
    with RoundExecutor(target, workers=workers, chunk_size=chunk_size) as executor:
        for t in range(1, n_steps + 1):
            est = zo_gradient_estimate(executor, x, law, m, epsilon, rng)
            potentials[t - 1] = est.base_value
            x = x - lr(t) * est.estimate
            if not np.all(np.isfinite(x)) or np.linalg.norm(x) > divergence_norm:
                raise DivergenceError(
                    f"iterate diverged at step {t}: |x| > {divergence_norm:g}"
                )
        return SgdResult(x=x, ledger=executor.ledger, potentials=potentials)

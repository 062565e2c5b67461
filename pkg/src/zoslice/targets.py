"""Potential functions (zeroth-order oracles) and synthetic data generators.

Every target exposes only potential evaluations to the samplers.  Analytic
gradients exist for testing (finite-difference validation, exact-sampler
oracles) and are deliberately kept behind the ``gradient_oracle`` name so a
sampler grepping for ``gradient`` in review stands out; nothing in the
sampling code path calls them.

Targets are immutable after construction and reentrant: ``evaluate`` /
``evaluate_batch`` touch no mutable state, so a worker pool may call them
concurrently.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import numpy as np
from scipy.signal import lfilter


class TargetModel:
    """Base class: a potential U on R^d with zeroth-order access.

    Attributes:
        dimension: d.
        convexity: strong-convexity constant of U when known, else None.
        smoothness: gradient Lipschitz constant of U when known, else None.
    """

    dimension: int
    convexity = None
    smoothness = None

    def _potential(self, x):
        raise NotImplementedError

    def _potential_batch(self, X):
        # Fallback: row loop.  Subclasses override with a vectorized version.
        return np.array([self._potential(x) for x in X], dtype=float)

    def _check(self, x, ndim):
        x = np.asarray(x, dtype=float)
        if x.ndim != ndim or x.shape[-1] != self.dimension:
            raise ValueError(
                f"expected {'point' if ndim == 1 else 'batch'} with dimension "
                f"{self.dimension}, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite entries in evaluation point")
        return x

    def evaluate(self, x) -> float:
        """Return U(x).  Deterministic: identical x gives bit-identical output."""
        return float(self._potential(self._check(x, 1)))

    def evaluate_batch(self, X) -> np.ndarray:
        """Return U(x) for every row of X (shape (k, d) -> (k,))."""
        return np.asarray(self._potential_batch(self._check(X, 2)), dtype=float)

    def gradient_oracle(self, x) -> np.ndarray:
        """Exact gradient of U.  Test oracle only; samplers must not call it."""
        raise NotImplementedError(f"{type(self).__name__} has no analytic gradient")

    @property
    def condition_number(self):
        if self.convexity is None or self.smoothness is None:
            return None
        return self.smoothness / self.convexity


class GaussianTarget(TargetModel):
    """U(x) = 0.5 (x-mu)' Lambda (x-mu) for a symmetric positive-definite Lambda."""

    def __init__(self, mean, precision):
        mean = np.asarray(mean, dtype=float)
        precision = np.asarray(precision, dtype=float)
        if precision.shape != (mean.size, mean.size):
            raise ValueError("precision must be d x d")
        if not np.allclose(precision, precision.T):
            raise ValueError("precision must be symmetric")
        eigs = np.linalg.eigvalsh(precision)
        if eigs[0] <= 0:
            raise ValueError("precision must be positive definite")
        self.dimension = mean.size
        self.mean = mean
        self.precision = precision
        self.convexity = float(eigs[0])
        self.smoothness = float(eigs[-1])
        offdiag = precision - np.diag(np.diag(precision))
        self._diag = np.diag(precision).copy() if not offdiag.any() else None
        self._centered = not mean.any()

    @classmethod
    def standard(cls, d):
        return cls(np.zeros(d), np.eye(d))

    @classmethod
    def diagonal(cls, variances):
        variances = np.asarray(variances, dtype=float)
        return cls(np.zeros(variances.size), np.diag(1.0 / variances))

    def _potential(self, x):
        dx = x if self._centered else x - self.mean
        if self._diag is not None:
            return 0.5 * float(np.dot(dx * self._diag, dx))
        return 0.5 * float(dx @ self.precision @ dx)

    def _potential_batch(self, X):
        dX = X if self._centered else X - self.mean
        if self._diag is not None:
            return 0.5 * ((dX * dX) @ self._diag)
        return 0.5 * np.einsum("ij,jk,ik->i", dX, self.precision, dX)

    def gradient_oracle(self, x):
        x = self._check(x, 1)
        return self.precision @ (x - self.mean)

    @property
    def covariance(self):
        return np.linalg.inv(self.precision)


class LogisticRegressionTarget(TargetModel):
    """Bayesian logistic-regression potential with a Gaussian N(0, s^2 I) prior.

    U(b) = sum_i [log(1 + exp(z_i'b)) - y_i z_i'b] + b'b / (2 s^2),
    with prior variance s^2 defaulting to 25/d.  The data term has positive
    semidefinite Hessian, so U is (1/s^2)-convex, and the logistic Hessian
    bound sigmoid' <= 1/4 gives smoothness 1/s^2 + lambda_max(Z'Z)/4.
    """

    def __init__(self, design, responses, prior_variance=None):
        design = np.asarray(design, dtype=float)
        responses = np.asarray(responses, dtype=float)
        if design.ndim != 2 or responses.shape != (design.shape[0],):
            raise ValueError("design must be (n, d) with matching responses")
        if not set(np.unique(responses)) <= {0.0, 1.0}:
            raise ValueError("responses must be 0/1")
        n, d = design.shape
        self.dimension = d
        self.design = design
        self.responses = responses
        self.prior_variance = float(prior_variance) if prior_variance else 25.0 / d
        self._zy = design.T @ responses
        gram_top = float(np.linalg.eigvalsh(design.T @ design)[-1])
        self.convexity = 1.0 / self.prior_variance
        self.smoothness = 1.0 / self.prior_variance + 0.25 * gram_top

    def _potential(self, x):
        t = self.design @ x
        return float(
            np.logaddexp(0.0, t).sum()
            - self._zy @ x
            + 0.5 * (x @ x) / self.prior_variance
        )

    def _potential_batch(self, X):
        T = X @ self.design.T
        return (
            np.logaddexp(0.0, T).sum(axis=1)
            - X @ self._zy
            + 0.5 * (X * X).sum(axis=1) / self.prior_variance
        )

    def gradient_oracle(self, x):
        x = self._check(x, 1)
        p = _sigmoid(self.design @ x)
        return self.design.T @ (p - self.responses) + x / self.prior_variance

    def hessian_oracle(self, x, data_term_only=False):
        """Exact Hessian; exists only for the convexity test of the data term."""
        x = self._check(x, 1)
        p = _sigmoid(self.design @ x)
        H = (self.design * (p * (1.0 - p))[:, None]).T @ self.design
        if not data_term_only:
            H = H + np.eye(self.dimension) / self.prior_variance
        return H


class StochasticVolatilityTarget(TargetModel):
    """Posterior potential of a stochastic-volatility state-space model.

    Parameter vector theta = (mu, phi, log_sigma, eta_1..eta_n), d = n + 3.
    Latent log-volatilities:

        h_1 = mu + exp(log_sigma) / (1 - tanh(phi)^2) * eta_1
        h_t = tanh(phi) (h_{t-1} - mu) + exp(log_sigma) eta_t,   t >= 2

    Observations y_i ~ N(0, exp(h_i)); priors mu ~ N(0, 10), phi ~ N(0, 1),
    log_sigma ~ N(0, 1), eta_i ~ N(0, 1).  U is the negative log posterior up
    to an additive constant.
    """

    MU_PRIOR_VARIANCE = 10.0

    def __init__(self, observations):
        y = np.asarray(observations, dtype=float)
        if y.ndim != 1 or y.size < 2:
            raise ValueError("observations must be a series of length >= 2")
        self.observations = y
        self.n = y.size
        self.dimension = self.n + 3
        self._ysq = y * y

    def _volatilities(self, mu, phi, log_sigma, eta):
        rho = np.tanh(phi)
        sv = np.exp(log_sigma)
        inp = np.empty(self.n)
        inp[0] = mu + sv / (1.0 - rho * rho) * eta[0]
        inp[1:] = sv * eta[1:] - rho * mu
        # h_t = inp_t + rho h_{t-1}: pure AR(1) recursion, run in C.
        return lfilter([1.0], [1.0, -rho], inp)

    def _potential(self, x):
        mu, phi, log_sigma = x[0], x[1], x[2]
        eta = x[3:]
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            h = self._volatilities(mu, phi, log_sigma, eta)
            loglik_neg = 0.5 * float(np.sum(h + self._ysq * np.exp(-h)))
            prior_neg = (
                0.5 * mu * mu / self.MU_PRIOR_VARIANCE
                + 0.5 * phi * phi
                + 0.5 * log_sigma * log_sigma
                + 0.5 * float(eta @ eta)
            )
            return loglik_neg + prior_neg

    def _potential_batch(self, X):
        mu, phi, log_sigma = X[:, 0], X[:, 1], X[:, 2]
        eta = X[:, 3:]
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            rho = np.tanh(phi)
            sv = np.exp(log_sigma)
            drift = sv[:, None] * eta[:, 1:] - (rho * mu)[:, None]
            h = np.empty((X.shape[0], self.n))
            h[:, 0] = mu + sv / (1.0 - rho * rho) * eta[:, 0]
            for t in range(1, self.n):
                h[:, t] = rho * h[:, t - 1] + drift[:, t - 1]
            loglik_neg = 0.5 * (h + self._ysq * np.exp(-h)).sum(axis=1)
            prior_neg = (
                0.5 * mu * mu / self.MU_PRIOR_VARIANCE
                + 0.5 * phi * phi
                + 0.5 * log_sigma * log_sigma
                + 0.5 * (eta * eta).sum(axis=1)
            )
            return loglik_neg + prior_neg

    def gradient_oracle(self, x):
        x = self._check(x, 1)
        mu, phi, log_sigma = x[0], x[1], x[2]
        eta = x[3:]
        rho = np.tanh(phi)
        drho = 1.0 - rho * rho
        sv = np.exp(log_sigma)
        h = self._volatilities(mu, phi, log_sigma, eta)
        # dU/dh_t, then the adjoint of the AR(1) recursion (reverse filter).
        u = 0.5 * (1.0 - self._ysq * np.exp(-h))
        gbar = lfilter([1.0], [1.0, -rho], u[::-1])[::-1]
        g = np.empty_like(x)
        g[0] = gbar[0] - rho * gbar[1:].sum() + mu / self.MU_PRIOR_VARIANCE
        scale1 = sv / drho
        g[1] = (
            gbar[0] * scale1 * eta[0] * 2.0 * rho
            + float(gbar[1:] @ (h[:-1] - mu)) * drho
            + phi
        )
        g[2] = gbar[0] * scale1 * eta[0] + sv * float(gbar[1:] @ eta[1:]) + log_sigma
        g[3] = gbar[0] * scale1 + eta[0]
        g[4:] = gbar[1:] * sv + eta[1:]
        return g


class LatencyTarget(TargetModel):
    """Wrap a target so each evaluation holds for a fixed wall-clock delay.

    Models an expensive black-box oracle whose cost is latency (external
    program, remote likelihood): the delay releases the GIL, so a worker pool
    overlaps the evaluations of one parallel round.
    """

    def __init__(self, base: TargetModel, delay: float):
        self.base = base
        self.delay = float(delay)
        self.dimension = base.dimension
        self.convexity = base.convexity
        self.smoothness = base.smoothness

    def _potential(self, x):
        time.sleep(self.delay)
        return self.base._potential(x)

    def _potential_batch(self, X):
        # One delay per evaluation: batching must not hide the oracle cost.
        return np.array([self._potential(x) for x in X], dtype=float)


def _sigmoid(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def generate_logistic_data(seed, n, d):
    """Synthetic logistic-regression data.

    beta0 ~ N_d(0, (1/8) I), rows z_i ~ N_d(0, I) i.i.d.,
    y_i ~ Bernoulli(sigmoid(z_i' beta0)).  Deterministic given the seed.

    Returns:
        (Z, y, beta0) with shapes (n, d), (n,), (d,).
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    beta0 = rng.standard_normal(d) / np.sqrt(8.0)
    Z = rng.standard_normal((n, d))
    y = (rng.random(n) < _sigmoid(Z @ beta0)).astype(float)
    return Z, y, beta0


def generate_sv_data(seed, n, mu0=1.0, phi0_raw=None, log_sigma0=0.0):
    """Simulate an observed series from the stochastic-volatility model.

    phi0_raw defaults to atanh(0.5), i.e. persistence tanh(phi0) = 0.5.
    Returns the length-n series y; the resulting posterior has n + 3
    parameters.  Deterministic given the seed.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if phi0_raw is None:
        phi0_raw = np.arctanh(0.5)
    rng = np.random.default_rng(seed)
    eta0 = rng.standard_normal(n)
    rho = np.tanh(phi0_raw)
    sv = np.exp(log_sigma0)
    h = np.empty(n)
    h[0] = mu0 + sv / (1.0 - rho * rho) * eta0[0]
    for t in range(1, n):
        h[t] = rho * (h[t - 1] - mu0) + sv * eta0[t]
    return rng.standard_normal(n) * np.exp(h / 2.0)


def save_logistic_dataset(path, Z, y, sidecar):
    """Write a logistic dataset as CSV (header z_1..z_d,y) plus a JSON sidecar."""
    path = Path(path)
    n, d = Z.shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"z_{j + 1}" for j in range(d)] + ["y"])
        for i in range(n):
            writer.writerow([repr(float(v)) for v in Z[i]] + [int(y[i])])
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2, default=_jsonify)


def load_logistic_dataset(path):
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array([[float(v) for v in row] for row in rows[1:]])
    sidecar = json.loads(path.with_suffix(".json").read_text())
    return data[:, :-1], data[:, -1], sidecar


def save_sv_dataset(path, y, sidecar):
    """Write a volatility series as CSV (header y) plus a JSON sidecar."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"])
        for v in y:
            writer.writerow([repr(float(v))])
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2, default=_jsonify)


def load_sv_dataset(path):
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    y = np.array([float(r[0]) for r in rows[1:]])
    sidecar = json.loads(path.with_suffix(".json").read_text())
    return y, sidecar


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj)}")

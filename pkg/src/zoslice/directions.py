"""Random direction frames V on the Stiefel manifold and slice operations.

Two direction laws are provided, both scaled by c = d/m so the lifted
directional derivatives are unbiased for the gradient:

* ``UNIFORM_STIEFEL``: Haar-uniform orthonormal d x m frame, sampled by QR of
  a d x m standard Gaussian matrix with the column signs corrected by the
  diagonal of R (raw QR output is not Haar).  Factorizing the d x m matrix
  instead of a full d x d one gives the same law for the leading m columns at
  lower cost.
* ``CANONICAL_SUBSET``: m distinct canonical basis vectors, drawn uniformly
  without replacement by a partial Fisher-Yates pass (O(m) extra space).
  Stored as indices; projections and lifts cost O(m), never O(dm).

The orthogonal complement V-perp is never materialized: the slice update
x' = x + V (s' - V'x) agrees with V-perp V-perp' x + V s' because
V V' + V-perp V-perp' = I.
"""

from __future__ import annotations

import enum

import numpy as np


class DirectionMatrix:
    """Element of the Stiefel manifold V_m(R^d), dense or canonical-subset."""

    __slots__ = ("d", "m", "matrix", "indices")

    def __init__(self, d, m, matrix=None, indices=None):
        if not 1 <= m <= d:
            raise ValueError(f"need 1 <= m <= d, got m={m}, d={d}")
        if (matrix is None) == (indices is None):
            raise ValueError("exactly one of matrix/indices required")
        self.d = d
        self.m = m
        self.matrix = matrix
        self.indices = indices

    @classmethod
    def dense(cls, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError("dense direction matrix must be 2-d")
        d, m = matrix.shape
        return cls(d, m, matrix=matrix)

    @classmethod
    def canonical(cls, d, indices):
        indices = np.asarray(indices, dtype=np.intp)
        if indices.ndim != 1 or len(set(indices.tolist())) != indices.size:
            raise ValueError("canonical indices must be distinct")
        if indices.size and (indices.min() < 0 or indices.max() >= d):
            raise ValueError("canonical indices out of range")
        return cls(d, indices.size, indices=indices)

    @property
    def is_canonical(self):
        return self.indices is not None

    def project(self, x):
        """s = V' x."""
        if self.is_canonical:
            return x[self.indices].copy()
        return self.matrix.T @ x

    def lift(self, s):
        """V s, embedded in R^d."""
        if self.is_canonical:
            out = np.zeros(self.d)
            out[self.indices] = s
            return out
        return self.matrix @ s

    def shift(self, x, s):
        """x + V s."""
        if self.is_canonical:
            out = x.copy()
            if self.m == 1:
                out[self.indices[0]] += s[0]
            else:
                out[self.indices] += s
            return out
        return x + self.matrix @ s

    def slice_update(self, x, s_new):
        """Replace the span(V) component of x: equals V-perp V-perp' x + V s_new."""
        if self.is_canonical:
            out = x.copy()
            out[self.indices] = s_new
            return out
        return x + self.matrix @ (s_new - self.matrix.T @ x)

    def perturbations(self, x, eps):
        """The m points x + eps v_i, one row per direction."""
        return self.fd_round_points(x, eps, include_base=False)

    def fd_round_points(self, x, eps, include_base):
        """Points of one finite-difference round: [x,] x + eps v_1..v_m."""
        k0 = 1 if include_base else 0
        P = np.empty((self.m + k0, self.d))
        P[:] = x
        if self.is_canonical:
            if self.m == 1:
                P[k0, self.indices[0]] += eps
            else:
                P[np.arange(k0, self.m + k0), self.indices] += eps
        else:
            P[k0:] += eps * self.matrix.T
        return P

    def as_dense(self):
        if self.is_canonical:
            M = np.zeros((self.d, self.m))
            M[self.indices, np.arange(self.m)] = 1.0
            return M
        return self.matrix

    def gram_residual(self):
        """max |V'V - I|; exactly 0 for canonical frames."""
        if self.is_canonical:
            return 0.0
        G = self.matrix.T @ self.matrix
        return float(np.abs(G - np.eye(self.m)).max())


class DirectionLaw(enum.Enum):
    """Direction-sampling law; both satisfy (d/m) E[V V'] = I."""

    UNIFORM_STIEFEL = "stiefel"
    CANONICAL_SUBSET = "canonical"

    def sample(self, rng, d, m) -> DirectionMatrix:
        if self is DirectionLaw.UNIFORM_STIEFEL:
            return sample_uniform_stiefel(rng, d, m)
        return sample_canonical_subset(rng, d, m)

    @staticmethod
    def scaling(d, m) -> float:
        """Unbiasedness constant c = d/m."""
        return d / m

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        for law in cls:
            if name in (law.value, law.name, law.name.lower()):
                return law
        raise ValueError(f"unknown direction law {name!r}")


def sample_uniform_stiefel(rng, d, m) -> DirectionMatrix:
    """Haar-uniform frame via sign-corrected QR of a d x m Gaussian matrix."""
    if not 1 <= m <= d:
        raise ValueError(f"need 1 <= m <= d, got m={m}, d={d}")
    G = rng.standard_normal((d, m))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return DirectionMatrix.dense(Q * signs)


def sample_canonical_subset(rng, d, m) -> DirectionMatrix:
    """m distinct canonical indices, uniform without replacement.

    Partial Fisher-Yates over a virtual 0..d-1 array held in a dict; the m
    bounded draws are taken in one vectorized rng call (one scalar call for
    m = 1).
    """
    if not 1 <= m <= d:
        raise ValueError(f"need 1 <= m <= d, got m={m}, d={d}")
    if m == 1:
        picked = np.array([rng.integers(0, d)], dtype=np.intp)
        return DirectionMatrix(d, 1, indices=picked)
    draws = rng.integers(np.arange(m), d)
    moved: dict = {}
    picked = np.empty(m, dtype=np.intp)
    for i, j in enumerate(draws.tolist()):
        vi = moved.get(i, i)
        vj = moved.get(j, j)
        picked[i] = vj
        moved[j] = vi
        moved[i] = vj
    return DirectionMatrix(d, m, indices=picked)


def project(V: DirectionMatrix, x):
    return V.project(np.asarray(x, dtype=float))


def slice_update(V: DirectionMatrix, x, s_new):
    return V.slice_update(np.asarray(x, dtype=float), np.asarray(s_new, dtype=float))

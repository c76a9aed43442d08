"""Squared-Frobenius NMF objective and its derivatives.

F(W, H) = ||V - W H||_F^2 with gradient

    dF/dW = -2 (V - W H) H^T,    dF/dH = -2 W^T (V - W H).

The Hessian is only ever applied to a direction (Hessian-vector product) or
contracted twice (quadratic form); it is never materialised here.

Flattened vectors list vec(W) and then vec(H), each column-major.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import core
from .matrix import DimensionError, matmul


@dataclass(frozen=True)
class FactorPair:
    """A pair (W: n x r, H: r x m).

    ``signed`` marks a direction (entries may be negative) rather than a
    feasible point of the factorization problem.
    """

    w: np.ndarray
    h: np.ndarray
    signed: bool = False

    def __post_init__(self):
        w = np.ascontiguousarray(self.w, dtype=np.float64)
        h = np.ascontiguousarray(self.h, dtype=np.float64)
        if w.ndim != 2 or h.ndim != 2:
            raise DimensionError("W and H must be 2-D")
        if w.shape[1] != h.shape[0]:
            raise DimensionError(f"inner dimensions differ: W is {w.shape}, H is {h.shape}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "h", h)

    @property
    def shape(self):
        """(n, r, m)."""
        return self.w.shape[0], self.w.shape[1], self.h.shape[1]

    @property
    def size(self):
        return self.w.size + self.h.size

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.w.ravel(order="F"), self.h.ravel(order="F")])

    @classmethod
    def from_flat(cls, x, n, r, m, signed=False) -> FactorPair:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (n * r + r * m,):
            raise DimensionError(f"expected a vector of length {n * r + r * m}, got {x.shape}")
        w = x[: n * r].reshape((n, r), order="F")
        h = x[n * r:].reshape((r, m), order="F")
        return cls(w, h, signed=signed)

    def mass(self) -> float:
        return float(self.w.sum() + self.h.sum())

    def product(self) -> np.ndarray:
        return matmul(self.w, self.h)

    def scaled(self, alpha: float) -> FactorPair:
        return FactorPair(alpha * self.w, alpha * self.h, self.signed)

    def __add__(self, other: FactorPair) -> FactorPair:
        return FactorPair(self.w + other.w, self.h + other.h, True)

    def __sub__(self, other: FactorPair) -> FactorPair:
        return FactorPair(self.w - other.w, self.h - other.h, True)

    def __neg__(self) -> FactorPair:
        return FactorPair(-self.w, -self.h, True)

    def dot(self, other: FactorPair) -> float:
        """Euclidean inner product of the flattened pairs."""
        return float(np.sum(self.w * other.w) + np.sum(self.h * other.h))


def _check(v, p: FactorPair):
    n, _, m = p.shape
    if v.shape != (n, m):
        raise DimensionError(f"V has shape {v.shape} but W H is {(n, m)}")


def residual(v: np.ndarray, p: FactorPair) -> np.ndarray:
    """V - W H."""
    _check(v, p)
    R, _ = core.residual(np.ascontiguousarray(v, dtype=np.float64), p.w, p.h)
    return R


def evaluate(v: np.ndarray, p: FactorPair) -> float:
    _check(v, p)
    _, F = core.residual(np.ascontiguousarray(v, dtype=np.float64), p.w, p.h)
    return float(F)


def gradient(v: np.ndarray, p: FactorPair) -> FactorPair:
    R = residual(v, p)
    gw, gh = core.gradient(R, p.w, p.h)
    return FactorPair(gw, gh, signed=True)


def hessian_vector_product(v: np.ndarray, p: FactorPair, d: FactorPair) -> FactorPair:
    """Apply the Hessian of F at ``p`` to the direction ``d``.

    Differentiating the gradient along d, with R = V - W H and
    dR = -(dW H + W dH):

        d(dF/dW) = -2 (dR H^T + R dH^T)
        d(dF/dH) = -2 (dW^T R + W^T dR)
    """
    if d.w.shape != p.w.shape or d.h.shape != p.h.shape:
        raise DimensionError("direction and point must have the same shapes")
    R = residual(v, p)
    dR = -(matmul(d.w, p.h) + matmul(p.w, d.h))
    hw = -2.0 * (matmul(dR, p.h.T) + matmul(R, d.h.T))
    hh = -2.0 * (matmul(d.w.T, R) + matmul(p.w.T, dR))
    return FactorPair(hw, hh, signed=True)


def hessian_quadratic_form(v: np.ndarray, p: FactorPair, d: FactorPair) -> float:
    """d^T (Hessian of F at p) d."""
    return d.dot(hessian_vector_product(v, p, d))


def hessian_matrix(v: np.ndarray, p: FactorPair, basis: np.ndarray | None = None) -> np.ndarray:
    """Dense Hessian in the flattened coordinates, optionally projected.

    With ``basis`` (columns spanning a subspace, flattened coordinates) this
    returns B^T H B. Built column by column from Hessian-vector products.
    """
    n, r, m = p.shape
    dim = n * r + r * m
    B = np.eye(dim) if basis is None else np.asarray(basis, dtype=np.float64)
    cols = np.empty((dim, B.shape[1]))
    for c in range(B.shape[1]):
        d = FactorPair.from_flat(B[:, c], n, r, m, signed=True)
        cols[:, c] = hessian_vector_product(v, p, d).flatten()
    M = B.T @ cols
    return 0.5 * (M + M.T)


def special_direction(p: FactorPair, k: int) -> FactorPair:
    """Keep column k of W and the negated row k of H, zero everywhere else.

    ``k`` is 1-based. The Hessian maps this direction to minus the W^k
    gradient block and plus the H_k gradient block, with zeros elsewhere.
    """
    r = p.w.shape[1]
    if not 1 <= k <= r:
        raise IndexError(f"column index {k} outside 1..{r}")
    w = np.zeros_like(p.w)
    h = np.zeros_like(p.h)
    w[:, k - 1] = p.w[:, k - 1]
    h[k - 1, :] = -p.h[k - 1, :]
    return FactorPair(w, h, signed=True)

"""First- and second-order stationarity tests for NMF and simplex-NMF.

Two problems are covered: plain NMF (W, H >= 0) and simplex-NMF (S-NMF),
which also requires the entries of W and H to sum to a constant C. At an
S-NMF first-order point every partial derivative on the support equals a
common multiplier c, and off the support it is at least c.

Second-order checks work on the cone of admissible directions: coordinates
whose partial strictly exceeds c (c = 0 for NMF) are pinned to zero, zero
coordinates may only move upward, and the rest are free. For S-NMF the
direction must also sum to zero. Positive semidefiniteness over a polyhedral
cone is hard in general, so the check is layered:

1. the smallest eigenvalue on the cone's lineality space (free coordinates
   only); a negative value gives an exact witness;
2. the smallest eigenvalue on the span of free and sign-constrained
   coordinates; if that is nonnegative the cone is certified exactly;
3. otherwise, projected eigenvectors and random cone directions are probed.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .matrix import DimensionError, frobenius_norm, matmul
from .objective import FactorPair, gradient, hessian_matrix

NOT_FOSP = "NotFOSP"
FOSP_ONLY = "FOSP-only"
SOSP_CANDIDATE = "SOSP-candidate"
SOSP_VIOLATED = "SOSP-violated"

SUBSPACE_EIGEN = "subspace-eigen"


class DegenerateError(ValueError):
    pass


class RescaleError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    """Unit-scale tolerances; :meth:`scaled` multiplies by max(1, ||V||_F)."""

    zero_tol: float = 1e-8
    grad_tol: float = 1e-6
    eig_tol: float = 1e-8

    def scaled(self, v) -> Tolerances:
        s = max(1.0, frobenius_norm(v))
        return Tolerances(self.zero_tol * s, self.grad_tol * s, self.eig_tol * s)


@dataclass
class StationarityReport:
    problem: str
    classification: str
    tolerances: Tolerances
    multiplier_c: float | None = None
    active_set: list = field(default_factory=list)
    violation_witness: FactorPair | None = None
    witness_value: float | None = None
    certification_mode: str | None = None
    min_eigenvalue: float | None = None
    column_balance: list | None = None
    detail: str = ""

    @property
    def is_fosp(self) -> bool:
        return self.classification != NOT_FOSP

    def to_dict(self) -> dict:
        witness = None
        if self.violation_witness is not None:
            witness = {
                "w": self.violation_witness.w.tolist(),
                "h": self.violation_witness.h.tolist(),
                "quadratic_form": self.witness_value,
            }
        return {
            "problem": self.problem,
            "classification": self.classification,
            "multiplier_c": self.multiplier_c,
            "active_set": [list(a) for a in self.active_set],
            "witness": witness,
            "tolerances": {
                "zero_tol": self.tolerances.zero_tol,
                "grad_tol": self.tolerances.grad_tol,
                "eig_tol": self.tolerances.eig_tol,
            },
            "certification_mode": self.certification_mode,
            "min_eigenvalue": self.min_eigenvalue,
            "column_balance": self.column_balance,
            "detail": self.detail,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _entry_name(idx, n, r, m):
    """Flattened index -> ("W"|"H", row, col), zero-based."""
    idx = int(idx)
    if idx < n * r:
        return ("W", idx % n, idx // n)
    idx -= n * r
    return ("H", idx % r, idx // r)


def _prepare(v, p, tol):
    v = np.asarray(v, dtype=np.float64)
    n, r, m = p.shape
    if v.shape != (n, m):
        raise DimensionError(f"V has shape {v.shape} but W H is {(n, m)}")
    t = (tol or Tolerances()).scaled(v)
    x = p.flatten()
    if x.min() < -t.zero_tol:
        raise ValueError("factor pair has negative entries beyond zero_tol")
    return v, t, x, gradient(v, p).flatten()


def _first_order(x, g, c, t, shape):
    """Return (ok, detail, active_set) for the sign/complementarity rules."""
    n, r, m = shape
    active = [_entry_name(i, n, r, m) for i in np.flatnonzero(x <= t.zero_tol)]
    for i in range(x.size):
        if x[i] > t.zero_tol:
            if abs(g[i] - c) > t.grad_tol:
                blk, a, b = _entry_name(i, n, r, m)
                return False, f"{blk}[{a},{b}] = {x[i]:.3g} > 0 but partial - c = {g[i] - c:.3g}", active
        elif g[i] < c - t.grad_tol:
            blk, a, b = _entry_name(i, n, r, m)
            return False, f"{blk}[{a},{b}] is zero but partial - c = {g[i] - c:.3g} < 0", active
    return True, "", active


def check_fosp_nmf(v, p: FactorPair, tol: Tolerances | None = None) -> StationarityReport:
    """Sign and complementarity conditions of plain NMF.

    Positive entries need a vanishing partial; zero entries need a
    nonnegative one.
    """
    v, t, x, g = _prepare(v, p, tol)
    ok, detail, active = _first_order(x, g, 0.0, t, p.shape)
    return StationarityReport(
        problem="NMF",
        classification=FOSP_ONLY if ok else NOT_FOSP,
        tolerances=t,
        multiplier_c=0.0,
        active_set=active,
        detail=detail,
    )


def _snmf_multiplier(x, g, t):
    support = x > t.zero_tol
    if not support.any():
        raise DegenerateError("no positive entry to define the multiplier c")
    xs = x[support]
    return float(np.dot(xs, g[support]) / xs.sum())


def check_fosp_snmf(v, p: FactorPair, C: float, tol: Tolerances | None = None) -> StationarityReport:
    """First-order conditions of S-NMF with multiplier c.

    c is the mass-weighted mean of the partials over the support.
    """
    v, t, x, g = _prepare(v, p, tol)
    mass = x.sum()
    if abs(mass - C) > 1e-8 * C:
        raise ValueError(f"entries sum to {mass!r}, expected C = {C!r}")
    c = _snmf_multiplier(x, g, t)
    ok, detail, active = _first_order(x, g, c, t, p.shape)
    balance = None
    if ok and abs(c) > t.grad_tol:
        balance = column_balance_check(p, tol=1e-6 * max(1.0, C))
    return StationarityReport(
        problem="S-NMF",
        classification=FOSP_ONLY if ok else NOT_FOSP,
        tolerances=t,
        multiplier_c=c,
        active_set=active,
        column_balance=balance,
        detail=detail,
    )


def _subspace_basis(k, sum_zero):
    """Orthonormal basis (k x d) of R^k, or of its sum-zero hyperplane."""
    if k == 0 or (sum_zero and k == 1):
        return np.zeros((k, 0))
    if not sum_zero:
        return np.eye(k)
    centered = np.eye(k) - 1.0 / k
    u, _, _ = np.linalg.svd(centered)
    return u[:, : k - 1]


def _min_eig(M):
    if M.shape[0] == 0:
        return math.inf, None
    vals, vecs = np.linalg.eigh(M)
    return float(vals[0]), vecs[:, 0]


def _fix_sum(d, free, sum_zero):
    """Shift free coordinates so d sums to zero; None if impossible."""
    if not sum_zero:
        return d
    s = d.sum()
    if abs(s) <= 1e-15 * max(1.0, np.abs(d).max()):
        return d
    if not free.any():
        return None
    d = d.copy()
    d[free] -= s / free.sum()
    return d


def _second_order(v, p, x, g, c, t, sum_zero, n_samples, rng, report):
    n, r, m = p.shape
    pinned = g - c > t.grad_tol
    sign = ~pinned & (x <= t.zero_tol)
    free = ~pinned & ~sign
    S = np.flatnonzero(free | sign)
    free_s = free[S]
    sign_s = sign[S]
    dim = x.size

    E = np.zeros((dim, S.size))
    E[S, np.arange(S.size)] = 1.0
    HS = hessian_matrix(v, p, basis=E)

    def witness(d_s, value):
        scale = np.abs(d_s).max()
        d = np.zeros(dim)
        d[S] = d_s / scale
        report.violation_witness = FactorPair.from_flat(d, n, r, m, signed=True)
        report.witness_value = float(value / scale**2)
        report.classification = SOSP_VIOLATED

    # lineality space: free coordinates only
    F_idx = np.flatnonzero(free_s)
    B0 = _subspace_basis(F_idx.size, sum_zero)
    lam0, vec0 = _min_eig(B0.T @ HS[np.ix_(F_idx, F_idx)] @ B0)
    if lam0 < -t.eig_tol:
        d_s = np.zeros(S.size)
        d_s[F_idx] = B0 @ vec0
        witness(d_s, lam0)
        report.min_eigenvalue = lam0
        report.certification_mode = SUBSPACE_EIGEN
        return report

    B1 = _subspace_basis(S.size, sum_zero)
    lam1, vec1 = _min_eig(B1.T @ HS @ B1)
    report.min_eigenvalue = lam1 if math.isfinite(lam1) else lam0
    if lam1 >= -t.eig_tol or not sign_s.any():
        report.classification = SOSP_CANDIDATE
        report.certification_mode = SUBSPACE_EIGEN
        return report

    def form(d_s):
        return float(d_s @ HS @ d_s)

    candidates = []
    y = B1 @ vec1
    for sgn in (1.0, -1.0):
        d_s = sgn * y
        d_s[sign_s] = np.maximum(d_s[sign_s], 0.0)
        candidates.append(d_s)
    for _ in range(n_samples):
        d_s = np.zeros(S.size)
        d_s[free_s] = rng.standard_normal(free_s.sum())
        keep = rng.random(sign_s.sum()) < 0.5
        d_s[sign_s] = np.abs(rng.standard_normal(sign_s.sum())) * keep
        candidates.append(d_s)

    best, best_val = None, -t.eig_tol
    for d_s in candidates:
        d_s = _fix_sum(d_s, free_s, sum_zero)
        if d_s is None or not np.any(d_s):
            continue
        val = form(d_s / np.abs(d_s).max())
        if val < best_val:
            best, best_val = d_s / np.abs(d_s).max(), val
    if best is not None:
        witness(best, best_val)
    else:
        report.classification = SOSP_CANDIDATE
    report.certification_mode = f"cone-sampled({n_samples})"
    return report


def check_sosp_nmf(v, p: FactorPair, tol: Tolerances | None = None, n_samples: int = 2000,
                   rng=0) -> StationarityReport:
    """Second-order test for plain NMF; returns the first-order report if that fails."""
    report = check_fosp_nmf(v, p, tol)
    if not report.is_fosp:
        return report
    v, t, x, g = _prepare(v, p, tol)
    return _second_order(v, p, x, g, 0.0, t, False, n_samples, np.random.default_rng(rng), report)


def check_sosp_snmf(v, p: FactorPair, C: float, tol: Tolerances | None = None,
                    n_samples: int = 2000, rng=0) -> StationarityReport:
    """Second-order test for S-NMF (directions also sum to zero)."""
    report = check_fosp_snmf(v, p, C, tol)
    if not report.is_fosp:
        return report
    v, t, x, g = _prepare(v, p, tol)
    return _second_order(v, p, x, g, report.multiplier_c, t, True, n_samples,
                         np.random.default_rng(rng), report)


def column_balance_check(p: FactorPair, tol: float = 1e-8) -> list[bool]:
    """Per column k: does column k of W carry the same mass as row k of H?"""
    return [bool(abs(a - b) <= tol) for a, b in zip(p.w.sum(axis=0), p.h.sum(axis=1))]


def balance_columns(p: FactorPair) -> FactorPair:
    """Rescale each (W^k, H_k) so both carry mass sqrt(|W^k|_1 |H_k|_1).

    The product W H is unchanged. Raises RescaleError when exactly one of
    W^k, H_k is zero.
    """
    if p.w.min() < 0 or p.h.min() < 0:
        raise RescaleError("factors must be nonnegative")
    w = p.w.copy()
    h = p.h.copy()
    for k in range(w.shape[1]):
        a = w[:, k].sum()
        b = h[k, :].sum()
        if a == 0.0 and b == 0.0:
            continue
        if a == 0.0 or b == 0.0:
            raise RescaleError(f"column {k + 1}: one of W^k, H_k is zero and the other is not")
        alpha = math.sqrt(b / a)
        w[:, k] *= alpha
        h[k, :] /= alpha
    return FactorPair(w, h)


def rescale_to_simplex(p: FactorPair, C: float, v=None) -> FactorPair:
    """Map (W, H) to a pair with the same product whose entries sum to C.

    Columns are balanced first, then (t W, H / t) with t the larger root of
    t |W|_1 + |H|_1 / t = C. When ``v`` is given, a RuntimeWarning flags
    ||W H||_F > ||V||_F or C at or below the admissible threshold.
    """
    bal = balance_columns(p)
    a = float(bal.w.sum())
    b = float(bal.h.sum())
    if v is not None:
        from .mwu import c_threshold

        n, r, m = p.shape
        if frobenius_norm(matmul(p.w, p.h)) > frobenius_norm(v):
            warnings.warn("||W H||_F exceeds ||V||_F; the mass bound may not hold", RuntimeWarning)
        if not C > c_threshold(np.asarray(v, dtype=np.float64), r):
            warnings.warn("C does not exceed 2r(nm)^(1/4)sqrt(||V||_F)", RuntimeWarning)
    if a == 0.0:
        raise RescaleError("all columns are zero; no pair with positive mass has this product")
    g = 2.0 * math.sqrt(a * b)
    disc = (C - g) * (C + g)
    if disc < 0.0 and C - g >= -1e-12 * C:
        disc = 0.0  # balanced mass equals C up to rounding
    if disc < 0.0:
        raise RescaleError(
            f"balanced mass {a + b:.6g} exceeds C = {C:.6g}; choose C above "
            "2r(nm)^(1/4)sqrt(||V||_F)"
        )
    t = (C + math.sqrt(disc)) / (2.0 * a)
    return replace(bal, w=t * bal.w, h=bal.h / t)

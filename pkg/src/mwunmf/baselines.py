"""Lee-Seung multiplicative updates, alternating and concurrent.

The alternating rule updates W from (W_t, H_t) and then H from
(W_{t+1}, H_t); it never increases ||V - W H||_F^2. The concurrent rule
updates both factors from (W_t, H_t) and can cycle: on V = I_2 from all-ones
factors it alternates between objective 10 and 1.5625 forever.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matrix import DimensionError, matmul
from .objective import FactorPair, evaluate


@dataclass
class MuConfig:
    variant: str = "alternating"  # or "concurrent"
    max_iters: int = 1000
    value_tol: float = 0.0
    target: float | None = None
    zero_division_floor: float = 1e-12
    pairing: str = "canonical"  # or "as-printed" (square problems only)

    def __post_init__(self):
        if self.variant not in ("alternating", "concurrent"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.pairing not in ("canonical", "as-printed"):
            raise ValueError(f"unknown pairing {self.pairing!r}")
        if not self.zero_division_floor > 0:
            raise ValueError("zero_division_floor must be positive")


@dataclass
class MuTrace:
    objective: np.ndarray
    factors: FactorPair
    floor_events: int = 0
    termination: str = "max-iters"
    initial_objective: float = 0.0
    extra: dict = field(default_factory=dict)


class _Floor:
    def __init__(self, floor):
        self.floor = floor
        self.events = 0

    def __call__(self, num, den):
        low = den < self.floor
        self.events += int(low.sum())
        return num / np.where(low, self.floor, den)


def _w_update(v, w, h, div):
    return w * div(matmul(v, h.T), matmul(matmul(w, h), h.T))


def _h_update(v, w, h, div):
    return h * div(matmul(w.T, v), matmul(matmul(w.T, w), h))


def _check_positive(v, p):
    n, r, m = p.shape
    if v.shape != (n, m):
        raise DimensionError(f"V has shape {v.shape} but W H is {(n, m)}")
    if p.w.min() < 0 or p.h.min() < 0:
        raise ValueError("multiplicative updates need nonnegative factors")


def lee_seung_step_alternating(v, p: FactorPair, floor: float = 1e-12, _div=None) -> FactorPair:
    v = np.asarray(v, dtype=np.float64)
    _check_positive(v, p)
    div = _div or _Floor(floor)
    w = _w_update(v, p.w, p.h, div)
    h = _h_update(v, w, p.h, div)
    return FactorPair(w, h)


def lee_seung_step_concurrent(v, p: FactorPair, floor: float = 1e-12, pairing: str = "canonical",
                              _div=None) -> FactorPair:
    """Both factors from the same (W_t, H_t).

    ``pairing="as-printed"`` swaps the two ratios: W takes
    (W^T V) / (W^T W H) and H takes (V H^T) / (W H H^T). Those shapes only
    line up when n = r = m.
    """
    v = np.asarray(v, dtype=np.float64)
    _check_positive(v, p)
    div = _div or _Floor(floor)
    if pairing == "canonical":
        return FactorPair(_w_update(v, p.w, p.h, div), _h_update(v, p.w, p.h, div))
    n, r, m = p.shape
    if not n == r == m:
        raise DimensionError("the as-printed pairing needs square V, W and H of one size")
    w = p.w * div(matmul(p.w.T, v), matmul(matmul(p.w.T, p.w), p.h))
    h = p.h * div(matmul(v, p.h.T), matmul(matmul(p.w, p.h), p.h.T))
    return FactorPair(w, h)


def run(v, p0: FactorPair, cfg: MuConfig | None = None) -> MuTrace:
    """Iterate one Lee-Seung variant, recording the objective after each step."""
    cfg = cfg or MuConfig()
    v = np.asarray(v, dtype=np.float64)
    div = _Floor(cfg.zero_division_floor)
    p = p0
    f0 = prev = evaluate(v, p)
    values = []
    reason = "max-iters"
    for _ in range(cfg.max_iters):
        if cfg.variant == "alternating":
            p = lee_seung_step_alternating(v, p, _div=div)
        else:
            p = lee_seung_step_concurrent(v, p, pairing=cfg.pairing, _div=div)
        f = evaluate(v, p)
        values.append(f)
        if cfg.target is not None and f <= cfg.target * f0:
            reason = "reached-target"
            break
        if cfg.value_tol > 0 and abs(prev - f) <= cfg.value_tol:
            reason = "converged-value"
            break
        prev = f
    return MuTrace(
        objective=np.array(values),
        factors=p,
        floor_events=div.events,
        termination=reason,
        initial_objective=f0,
    )

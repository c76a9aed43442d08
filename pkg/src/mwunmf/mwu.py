"""Concurrent multiplicative weights update (MWU) for NMF on a scaled simplex.

The solver rescales the data to V / C^2 and runs MWU on the unit simplex of
dimension nr + rm. Each step reads the gradient at the current iterate only,
so every entry of W and H can be updated independently:

    x_i <- x_i * (1 - eps * g_i) / Z,    Z = 1 - eps * <x, g>.

At the end the iterate is multiplied by C, which gives a factor pair whose
entries sum to C, and F(C W, C H) = C^4 F_scaled(W, H).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .matrix import DimensionError, dense, frobenius_norm
from .objective import FactorPair, evaluate

_REASONS = {
    1: "converged-step",
    2: "converged-value",
    3: "reached-target",
    4: "safeguard-exhausted",
}

# columns of RunTrace.records
OBJECTIVE, MAX_CHANGE, EPSILON, MASS, MIN_ENTRY = range(5)


class ConfigError(ValueError):
    """The solver configuration is invalid for this problem."""


class StepTooLargeError(ArithmeticError):
    """The step size makes Z or some multiplier non-positive."""


class ScaleCheckError(AssertionError):
    """F(C W, C H) disagreed with C^4 F_scaled(W, H)."""


def c_threshold(v: np.ndarray, r: int) -> float:
    """Smallest admissible mass constant: 2 r (nm)^(1/4) sqrt(||V||_F)."""
    n, m = v.shape
    return 2.0 * r * (n * m) ** 0.25 * math.sqrt(frobenius_norm(v))


def default_c(v: np.ndarray, r: int) -> float:
    """The solver's default mass constant, 4 r (nm)^(1/4) sqrt(||V||_F)."""
    if r < 1:
        raise ConfigError("rank must be at least 1")
    c = 2.0 * c_threshold(v, r)
    if c == 0.0:
        raise ConfigError("V is the zero matrix; any pair with W H = 0 is optimal")
    return c


def epsilon_bound(v_scaled: np.ndarray, r: int) -> float:
    """Gradient bound on the unit simplex for the scaled problem.

    ||V/C^2 - W H||_F <= ||V/C^2||_F + 1 there, which gives
    2 (||V/C^2||_F + 1) sqrt(nr + rm).
    """
    n, m = v_scaled.shape
    return 2.0 * (frobenius_norm(v_scaled) + 1.0) * math.sqrt(n * r + r * m)


@dataclass
class MwuConfig:
    """Solver settings.

    ``c_constant`` and ``epsilon`` accept ``"auto"``. An explicit C below
    :func:`c_threshold` is rejected unless ``force`` is set. ``target``, when
    given, stops the run once F_t / F_0 drops to it.
    """

    c_constant: float | str = "auto"
    epsilon: float | str = "auto"
    epsilon_scale: float = 1.0
    max_iters: int = 200_000
    step_tol: float = 1e-12
    value_tol: float = 1e-14
    seed: int = 0
    adaptive_safeguard: bool = True
    force: bool = False
    target: float | None = None
    num_threads: int = 1
    backend: str | None = None
    epsilon_floor: float = 1e-18
    monotone_tol: float = 1e-12
    check_every: int = 100

    def resolve(self, v: np.ndarray, r: int) -> tuple[float, float]:
        """Return (C, eps) for this problem, validating both."""
        if not isinstance(r, (int, np.integer)) or r < 1:
            raise ConfigError(f"rank must be a positive integer, got {r!r}")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be positive")
        if self.num_threads < 1:
            raise ConfigError("num_threads must be positive")
        if self.c_constant == "auto":
            C = default_c(v, r)
        else:
            C = float(self.c_constant)
            if not C > 0.0:
                raise ConfigError(f"C must be positive, got {C}")
            limit = c_threshold(v, r)
            if not C > limit and not self.force:
                raise ConfigError(
                    f"C = {C:g} does not exceed 2r(nm)^(1/4)sqrt(||V||_F) = {limit:g}; "
                    "pass force=True to run anyway"
                )
        if self.epsilon == "auto":
            if not self.epsilon_scale > 0.0:
                raise ConfigError("epsilon_scale must be positive")
            eps = self.epsilon_scale / (2.0 * epsilon_bound(v / C**2, r))
        else:
            eps = float(self.epsilon)
            if not eps > 0.0:
                raise ConfigError(f"epsilon must be positive, got {eps}")
        return C, eps


@dataclass
class SimplexState:
    """MWU iterate: nonnegative W, H whose entries sum to ``total_mass``."""

    w: np.ndarray
    h: np.ndarray
    total_mass: float = 1.0

    def __post_init__(self):
        self.w = np.ascontiguousarray(self.w, dtype=np.float64)
        self.h = np.ascontiguousarray(self.h, dtype=np.float64)
        if self.w.shape[1] != self.h.shape[0]:
            raise DimensionError("inner dimensions of W and H differ")

    @classmethod
    def from_flat(cls, x, n, r, m, total_mass=1.0) -> SimplexState:
        p = FactorPair.from_flat(x, n, r, m)
        return cls(p.w, p.h, total_mass)

    @classmethod
    def random(cls, n, r, m, seed) -> SimplexState:
        return cls.from_flat(random_simplex_point(n * r + r * m, seed), n, r, m)

    def flatten(self) -> np.ndarray:
        return self.factors().flatten()

    def factors(self) -> FactorPair:
        return FactorPair(self.w, self.h)

    def mass(self) -> float:
        return float(np.sum(self.w) + np.sum(self.h))

    def scaled(self, c: float) -> SimplexState:
        return SimplexState(c * self.w, c * self.h, self.total_mass * c)


def _rng(seed):
    return np.random.default_rng(int(seed) & 0xFFFF_FFFF_FFFF_FFFF)


def random_simplex_point(dim: int, seed) -> np.ndarray:
    """Uniform sample from the probability simplex of dimension ``dim``.

    Normalised i.i.d. exponentials (a flat Dirichlet draw); deterministic in
    ``seed``.
    """
    if dim < 1:
        raise ValueError("simplex dimension must be positive")
    e = _rng(seed).standard_exponential(dim)
    return e / math.fsum(e)


def mwu_step(v_scaled: np.ndarray, s: SimplexState, epsilon: float,
             num_threads: int = 1, backend: str | None = None) -> SimplexState:
    """One concurrent update from ``s`` (no safeguard).

    Raises StepTooLargeError when Z <= 0 or a multiplier is non-positive.
    """
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    vs = np.ascontiguousarray(v_scaled, dtype=np.float64)
    if vs.shape != (s.w.shape[0], s.h.shape[1]):
        raise DimensionError(f"V has shape {vs.shape}, state is {s.w.shape} / {s.h.shape}")
    out = _backend.get(backend).mwu_step(vs, s.w, s.h, float(epsilon), num_threads)
    if out is None:
        raise StepTooLargeError(f"epsilon = {epsilon:g} gives a non-positive multiplier or Z")
    return SimplexState(out[0], out[1], 1.0)


@dataclass
class RunTrace:
    """Result of :func:`solve`.

    ``records`` has one row per accepted iteration with columns OBJECTIVE
    (on the original scale), MAX_CHANGE, EPSILON, MASS and MIN_ENTRY (the last
    two on the unit simplex, before rescaling by C).
    """

    records: np.ndarray
    final_state: SimplexState
    termination: str
    c_constant: float
    initial_epsilon: float
    initial_objective: float
    initial_state: SimplexState
    halvings: int = 0
    max_scale_discrepancy: float = 0.0
    backend: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def iteration_index(self) -> np.ndarray:
        return np.arange(1, len(self.records) + 1)

    @property
    def objective(self) -> np.ndarray:
        return self.records[:, OBJECTIVE]

    @property
    def final_objective(self) -> float:
        return float(self.records[-1, OBJECTIVE]) if len(self.records) else self.initial_objective

    @property
    def relative_error(self) -> float:
        if self.initial_objective == 0.0:
            return 0.0
        return self.final_objective / self.initial_objective

    @property
    def factors(self) -> FactorPair:
        """Final (W, H) on the original scale (entries sum to C)."""
        return self.final_state.factors()


def solve(v: np.ndarray, r: int, cfg: MwuConfig | None = None) -> RunTrace:
    """Factor V ~ W H with concurrent MWU.

    Runs on V / C^2 over the unit simplex and returns the trace with the final
    iterate rescaled by C. Stops on ``step_tol`` (max entry change on the
    simplex), ``value_tol`` (objective change relative to the current
    objective), ``target`` or ``max_iters``.
    """
    cfg = cfg or MwuConfig()
    v = dense(v)
    if np.any(v < 0):
        raise ConfigError("V must be entrywise nonnegative")
    C, eps = cfg.resolve(v, r)
    core = _backend.get(cfg.backend)
    n, m = v.shape

    vs = np.ascontiguousarray(v / C**2)
    start = SimplexState.random(n, r, m, cfg.seed)
    w = start.w.copy()
    h = start.h.copy()
    R, F = core.residual(vs, w, h)
    F0 = F
    scale4 = C**4
    vnorm2 = frobenius_norm(v) ** 2

    if cfg.adaptive_safeguard:
        mono_tol = cfg.monotone_tol / scale4
        eps_floor = cfg.epsilon_floor
    else:
        mono_tol = math.inf
        eps_floor = eps * 0.75  # first halving ends the run

    eps0 = eps
    target = -1.0 if cfg.target is None else float(cfg.target)
    records = np.empty((cfg.max_iters, 5))
    it = 0
    status = 0
    halvings = 0
    worst = 0.0
    while it < cfg.max_iters and status == 0:
        chunk = min(cfg.check_every, cfg.max_iters - it)
        done, status, eps, F, hv = core.mwu_iterate(
            vs, w, h, R, F, F0, eps, chunk, cfg.step_tol, cfg.value_tol,
            target, mono_tol, eps_floor, scale4, records[it:it + chunk], cfg.num_threads,
        )
        it += done
        halvings += hv
        worst = max(worst, _scale_check(v, w, h, C, F, vnorm2))

    if status == 4 and not cfg.adaptive_safeguard:
        raise StepTooLargeError(
            f"step rejected at iteration {it + 1}; enable adaptive_safeguard or lower epsilon"
        )
    return RunTrace(
        records=records[:it].copy(),
        final_state=SimplexState(w, h).scaled(C),
        termination=_REASONS.get(status, "max-iters"),
        c_constant=C,
        initial_epsilon=eps0,
        initial_objective=F0 * scale4,
        initial_state=start.scaled(C),
        halvings=halvings,
        max_scale_discrepancy=worst,
        backend=core.NAME,
    )


def _scale_check(v, w, h, C, F_scaled, vnorm2):
    direct = evaluate(v, FactorPair(C * w, C * h))
    via_scale = C**4 * F_scaled
    gap = abs(direct - via_scale)
    rel = gap / max(direct, via_scale, np.finfo(float).tiny)
    if gap > 1e-9 * max(direct, via_scale) + 1e-12 * vnorm2:
        raise ScaleCheckError(
            f"F(CW, CH) = {direct!r} but C^4 F_scaled = {via_scale!r}"
        )
    return rel

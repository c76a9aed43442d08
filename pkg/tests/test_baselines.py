import numpy as np
import pytest

from mwunmf.baselines import (
    MuConfig,
    lee_seung_step_alternating,
    lee_seung_step_concurrent,
    run,
)
from mwunmf.matrix import DimensionError
from mwunmf.objective import FactorPair, evaluate

I2 = np.eye(2)
ONES = FactorPair(np.ones((2, 2)), np.ones((2, 2)))


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [{"variant": "both"}, {"pairing": "swapped"}, {"zero_division_floor": 0.0}]
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            MuConfig(**kw)


class TestConcurrent:
    def test_period_two_entries(self):
        p1 = lee_seung_step_concurrent(I2, ONES)
        assert np.all(p1.w == 0.25) and np.all(p1.h == 0.25)
        p2 = lee_seung_step_concurrent(I2, p1)
        assert np.all(p2.w == 1.0) and np.all(p2.h == 1.0)

    def test_objective_cycles(self):
        tr = run(I2, ONES, MuConfig(variant="concurrent", max_iters=50))
        f = tr.objective
        assert np.allclose(f[0::2], 1.5625, atol=1e-9)
        assert np.allclose(f[1::2], 10.0, atol=1e-9)
        # never eventually monotone: 10 reappears in every window of 3 after step 1
        for t in range(1, len(f) - 2):
            assert np.any(np.isclose(f[t:t + 3], 10.0, atol=1e-9))

    def test_as_printed_pairing_cycles_too(self):
        tr = run(I2, ONES, MuConfig(variant="concurrent", pairing="as-printed", max_iters=10))
        assert np.allclose(tr.objective, [1.5625, 10.0] * 5)

    def test_as_printed_needs_square(self):
        p = FactorPair(np.ones((3, 2)), np.ones((2, 3)))
        with pytest.raises(DimensionError):
            lee_seung_step_concurrent(np.ones((3, 3)), p, pairing="as-printed")

    def test_exact_fixed_point(self, rng):
        w, h = rng.uniform(0.5, 1, (3, 2)), rng.uniform(0.5, 1, (2, 4))
        p = lee_seung_step_concurrent(w @ h, FactorPair(w, h))
        np.testing.assert_allclose(p.w, w, rtol=1e-13)
        np.testing.assert_allclose(p.h, h, rtol=1e-13)

    def test_scalar_fixed_point(self):
        one = np.array([[1.0]])
        p = lee_seung_step_concurrent(one, FactorPair(one, one))
        assert p.w[0, 0] == 1.0 and p.h[0, 0] == 1.0


class TestAlternating:
    def test_example_non_increasing(self):
        tr = run(I2, ONES, MuConfig(variant="alternating", max_iters=100))
        f = np.concatenate([[tr.initial_objective], tr.objective])
        assert np.all(np.diff(f) <= 1e-12)
        assert tr.objective[0] < tr.initial_objective

    def test_example_stalls_on_rank_one_saddle(self):
        # symmetric start keeps W, H proportional to all-ones, so the best
        # reachable value is the rank-one error of I_2
        tr = run(I2, ONES, MuConfig(variant="alternating", max_iters=10))
        assert np.allclose(tr.objective, 1.0, atol=1e-12)

    def test_random_non_increasing(self, rng):
        for _ in range(20):
            n, r, m = (int(x) for x in rng.integers(1, 7, 3))
            v = rng.uniform(0.01, 1, (n, m))
            p = FactorPair(rng.uniform(0.1, 1, (n, r)), rng.uniform(0.1, 1, (r, m)))
            tr = run(v, p, MuConfig(max_iters=200))
            f = np.concatenate([[tr.initial_objective], tr.objective])
            assert np.all(np.diff(f) <= 1e-12)

    def test_uses_updated_w(self, rng):
        v = rng.random((3, 3))
        p = FactorPair(rng.random((3, 2)) + 0.1, rng.random((2, 3)) + 0.1)
        alt = lee_seung_step_alternating(v, p)
        conc = lee_seung_step_concurrent(v, p)
        np.testing.assert_array_equal(alt.w, conc.w)
        assert not np.array_equal(alt.h, conc.h)

    def test_positivity(self, rng):
        for variant in ("alternating", "concurrent"):
            v = rng.uniform(0.01, 1, (4, 5))
            p = FactorPair(rng.uniform(0.1, 1, (4, 2)), rng.uniform(0.1, 1, (2, 5)))
            tr = run(v, p, MuConfig(variant=variant, max_iters=300))
            assert tr.factors.w.min() > 0 and tr.factors.h.min() > 0


class TestRun:
    def test_rejects_negative_start(self):
        with pytest.raises(ValueError):
            run(I2, FactorPair(-np.ones((2, 2)), np.ones((2, 2))))

    def test_floor_events_counted(self):
        v = np.array([[1.0, 0.0]])
        p = FactorPair(np.array([[1.0]]), np.array([[1.0, 0.0]]))
        tr = run(v, p, MuConfig(max_iters=3))
        assert tr.floor_events > 0
        assert np.all(np.isfinite(tr.factors.h))

    def test_target(self, rng):
        w, h = rng.uniform(0.1, 1, (5, 2)), rng.uniform(0.1, 1, (2, 5))
        p0 = FactorPair(rng.uniform(0.1, 1, (5, 2)), rng.uniform(0.1, 1, (2, 5)))
        tr = run(w @ h, p0, MuConfig(max_iters=100_000, target=0.01))
        assert tr.termination == "reached-target"
        assert tr.objective[-1] <= 0.01 * tr.initial_objective

    def test_value_tol(self):
        tr = run(I2, ONES, MuConfig(max_iters=100, value_tol=1e-12))
        assert tr.termination == "converged-value"
        assert len(tr.objective) == 2

    def test_initial_objective(self):
        assert run(I2, ONES, MuConfig(max_iters=1)).initial_objective == evaluate(I2, ONES)

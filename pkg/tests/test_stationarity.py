import json
import math
import warnings

import numpy as np
import pytest

from mwunmf.matrix import DimensionError
from mwunmf.mwu import MwuConfig, default_c, solve
from mwunmf.objective import FactorPair, gradient, hessian_quadratic_form
from mwunmf.stationarity import (
    FOSP_ONLY,
    NOT_FOSP,
    SOSP_CANDIDATE,
    SOSP_VIOLATED,
    SUBSPACE_EIGEN,
    DegenerateError,
    RescaleError,
    Tolerances,
    balance_columns,
    check_fosp_nmf,
    check_fosp_snmf,
    check_sosp_nmf,
    check_sosp_snmf,
    column_balance_check,
    rescale_to_simplex,
)

ONE = np.array([[1.0]])
SQRT3 = math.sqrt(3.0)


def pt(x, y):
    return FactorPair(np.array([[x]]), np.array([[y]]))


def in_cone(v, p, report, c, sum_zero):
    """Check the witness against the admissible-direction cone."""
    t = report.tolerances
    x = p.flatten()
    g = gradient(v, p).flatten()
    d = report.violation_witness.flatten()
    pinned = g - c > t.grad_tol
    zero = x <= t.zero_tol
    ok = np.all(d[pinned] == 0) and np.all(d[zero & ~pinned] >= 0)
    if sum_zero:
        ok = ok and abs(d.sum()) <= 1e-12
    return ok


class TestTolerances:
    def test_unit_scale(self):
        t = Tolerances().scaled(ONE)
        assert (t.zero_tol, t.grad_tol, t.eig_tol) == (1e-8, 1e-6, 1e-8)

    def test_scales_with_norm(self):
        t = Tolerances().scaled(np.array([[3.0, 4.0]]))
        assert t.grad_tol == pytest.approx(5e-6)

    def test_small_norm_keeps_unit(self):
        assert Tolerances().scaled(np.array([[0.01]])).grad_tol == 1e-6


class TestFospNmf:
    def test_x_zero_is_not_fosp(self):
        # dF/dy = -2x < 0 at y = 0 breaks the zero-entry sign rule
        rep = check_fosp_nmf(ONE, pt(3.0, 0.0))
        assert rep.classification == NOT_FOSP
        assert "H[0,0]" in rep.detail

    def test_exact(self):
        assert check_fosp_nmf(ONE, pt(1, 1)).classification == FOSP_ONLY

    def test_origin(self):
        rep = check_fosp_nmf(ONE, pt(0, 0))
        assert rep.is_fosp
        assert rep.active_set == [("W", 0, 0), ("H", 0, 0)]

    def test_half_is_not_fosp(self):
        assert check_fosp_nmf(ONE, pt(0.5, 0.5)).classification == NOT_FOSP

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            check_fosp_nmf(np.ones((2, 2)), pt(1, 1))

    def test_negative_entries(self):
        with pytest.raises(ValueError):
            check_fosp_nmf(ONE, pt(-1.0, 1.0))

    def test_monotone_in_grad_tol(self, rng):
        for _ in range(30):
            v = rng.random((2, 3))
            p = FactorPair(rng.random((2, 1)), rng.random((1, 3)))
            loose_ok = False
            for gt in (1e-8, 1e-6, 1e-3, 1e-1, 1.0, 10.0):
                ok = check_fosp_nmf(v, p, Tolerances(grad_tol=gt)).is_fosp
                assert ok or not loose_ok
                loose_ok = ok


class TestSospNmf:
    def test_exact_point(self):
        rep = check_sosp_nmf(ONE, pt(1, 1))
        assert rep.classification == SOSP_CANDIDATE
        assert rep.certification_mode == SUBSPACE_EIGEN
        assert rep.min_eigenvalue == pytest.approx(0.0, abs=1e-12)

    def test_origin_saddle(self):
        rep = check_sosp_nmf(ONE, pt(0, 0))
        assert rep.classification == SOSP_VIOLATED
        assert rep.violation_witness.flatten().tolist() == [1.0, 1.0]
        assert rep.witness_value == pytest.approx(-4.0)
        assert in_cone(ONE, pt(0, 0), rep, 0.0, False)

    def test_witness_value_is_the_form(self):
        rep = check_sosp_nmf(ONE, pt(0, 0))
        assert hessian_quadratic_form(ONE, pt(0, 0), rep.violation_witness) == pytest.approx(rep.witness_value)

    def test_not_fosp_passes_through(self):
        assert check_sosp_nmf(ONE, pt(0.5, 0.5)).classification == NOT_FOSP

    def test_exact_factorization_is_candidate(self, rng):
        for _ in range(10):
            w0, h0 = rng.uniform(0.2, 1, (2, 2)), rng.uniform(0.2, 1, (2, 2))
            rep = check_sosp_nmf(w0 @ h0, FactorPair(w0, h0))
            assert rep.classification == SOSP_CANDIDATE

    def test_interior_saddle(self):
        # V = diag(2, 1), rank 1 aligned with the smaller singular value
        v = np.diag([2.0, 1.0])
        p = FactorPair(np.array([[0.0], [1.0]]), np.array([[0.0, 1.0]]))
        rep = check_sosp_nmf(v, p)
        assert rep.classification == SOSP_VIOLATED
        assert rep.witness_value < -rep.tolerances.eig_tol
        assert in_cone(v, p, rep, 0.0, False)

    def test_sampling_is_seeded(self, rng):
        v = np.diag([2.0, 1.0])
        p = FactorPair(np.array([[0.0], [1.0]]), np.array([[0.0, 1.0]]))
        a = check_sosp_nmf(v, p, rng=3).to_json()
        b = check_sosp_nmf(v, p, rng=3).to_json()
        assert a == b


class TestFospSnmf:
    def test_half_point_c_one(self):
        rep = check_fosp_snmf(ONE, pt(0.5, 0.5), 1.0)
        assert rep.is_fosp
        assert rep.multiplier_c == pytest.approx(-0.75)
        assert rep.column_balance == [True]

    def test_optimum_c_four(self):
        rep = check_fosp_snmf(ONE, pt(2 + SQRT3, 2 - SQRT3), 4.0)
        assert rep.is_fosp
        assert abs(rep.multiplier_c) <= 1e-12
        assert rep.column_balance is None

    def test_two_two(self):
        rep = check_fosp_snmf(ONE, pt(2, 2), 4.0)
        assert rep.is_fosp and rep.multiplier_c == pytest.approx(12.0)

    @pytest.mark.parametrize("p", [pt(0, 4), pt(4, 0)])
    def test_boundary_points_not_fosp(self, p):
        # partial at the zero coordinate is -8 < c = 0
        assert check_fosp_snmf(ONE, p, 4.0).classification == NOT_FOSP

    def test_degenerate(self):
        with pytest.raises(DegenerateError):
            check_fosp_snmf(ONE, pt(0, 0), 0.0)

    def test_mass_must_match(self):
        with pytest.raises(ValueError):
            check_fosp_snmf(ONE, pt(1, 1), 4.0)

    def test_multiplier_is_mass_weighted(self, rng):
        v = rng.random((2, 2))
        p = FactorPair(rng.random((2, 1)), rng.random((1, 2)))
        rep = check_fosp_snmf(v, p, p.mass())
        x, g = p.flatten(), gradient(v, p).flatten()
        assert rep.multiplier_c == pytest.approx(np.dot(x, g) / x.sum())


class TestSospSnmf:
    def test_half_point_c_one(self):
        rep = check_sosp_snmf(ONE, pt(0.5, 0.5), 1.0)
        assert rep.classification == SOSP_CANDIDATE
        assert rep.multiplier_c == pytest.approx(-0.75)

    def test_two_two_violated(self):
        rep = check_sosp_snmf(ONE, pt(2, 2), 4.0)
        assert rep.classification == SOSP_VIOLATED
        assert rep.witness_value < -rep.tolerances.eig_tol
        assert in_cone(ONE, pt(2, 2), rep, rep.multiplier_c, True)
        assert np.abs(rep.violation_witness.flatten()).max() == 1.0

    @pytest.mark.parametrize("p", [pt(2 - SQRT3, 2 + SQRT3), pt(2 + SQRT3, 2 - SQRT3)])
    def test_optima_c_four(self, p):
        assert check_sosp_snmf(ONE, p, 4.0).classification == SOSP_CANDIDATE

    def test_candidates_descend_to_nmf(self, rng):
        # exact pairs at default C: candidates for both problems, with c ~ 0
        for _ in range(10):
            w0, h0 = rng.uniform(0.1, 1, (3, 2)), rng.uniform(0.1, 1, (2, 3))
            v = w0 @ h0
            C = default_c(v, 2)
            p = rescale_to_simplex(FactorPair(w0, h0), C)
            s = check_sosp_snmf(v, p, C)
            assert s.classification == SOSP_CANDIDATE
            assert abs(s.multiplier_c) <= 1e-6
            assert check_fosp_nmf(v, p).is_fosp

    def test_json_fields(self):
        d = json.loads(check_sosp_snmf(ONE, pt(2, 2), 4.0).to_json())
        for key in ("classification", "multiplier_c", "witness", "tolerances", "certification_mode"):
            assert key in d
        assert d["witness"]["quadratic_form"] < 0
        assert set(d["tolerances"]) == {"zero_tol", "grad_tol", "eig_tol"}

    def test_boundary_cone_sampling(self):
        # zero entries with partial equal to c are sign-constrained, not pinned
        v = np.array([[1.0, 0.0], [0.0, 0.0]])
        p = FactorPair(np.array([[1.0], [0.0]]), np.array([[1.0, 0.0]]))
        rep = check_sosp_nmf(v, p)
        assert rep.classification == SOSP_CANDIDATE


class TestColumnBalance:
    def test_symmetric(self):
        assert column_balance_check(pt(2, 2)) == [True]

    def test_unbalanced_optimum(self):
        assert column_balance_check(pt(2 + SQRT3, 2 - SQRT3)) == [False]

    def test_half(self):
        assert column_balance_check(pt(0.5, 0.5)) == [True]

    def test_balanced_at_solver_fosp(self, rng):
        # C below the threshold gives first-order points with c != 0
        for seed in range(6):
            v = rng.random((3, 2))
            tr = solve(v, 2, MwuConfig(c_constant=0.8, force=True, seed=seed, epsilon_scale=1e2))
            rep = check_fosp_snmf(v, tr.factors, 0.8)
            assert rep.is_fosp
            assert abs(rep.multiplier_c) > 0.1
            assert rep.column_balance == [True, True]


class TestRescaler:
    def test_scalar_example(self):
        q = rescale_to_simplex(pt(2, 0.5), 4.0)
        assert q.w[0, 0] == pytest.approx(2 + SQRT3, rel=1e-14)
        assert q.h[0, 0] == pytest.approx(2 - SQRT3, rel=1e-14)

    def test_identity_on_balanced(self):
        q = rescale_to_simplex(pt(2, 2), 4.0)
        assert q.flatten().tolist() == [2.0, 2.0]

    def test_identity_on_balanced_matrix(self, rng):
        # t = 1 is a double root here, so rounding in the mass moves t by ~sqrt(eps)
        for _ in range(20):
            p = balance_columns(FactorPair(rng.random((3, 2)), rng.random((2, 4))))
            q = rescale_to_simplex(p, p.mass())
            np.testing.assert_allclose(q.flatten(), p.flatten(), rtol=1e-7)
            np.testing.assert_allclose(q.w @ q.h, p.w @ p.h, rtol=1e-12)

    def test_random_exact_pairs(self, rng):
        for _ in range(20):
            n, r, m = (int(x) for x in rng.integers(1, 6, 3))
            w0, h0 = rng.random((n, r)), rng.random((r, m))
            v = w0 @ h0
            C = default_c(v, r)
            q = rescale_to_simplex(FactorPair(w0, h0), C)
            assert np.linalg.norm(q.w @ q.h - v) <= 1e-10 * (1 + np.linalg.norm(v))
            assert q.mass() == pytest.approx(C, abs=1e-9)

    def test_column_mass_bound(self, rng):
        for _ in range(20):
            n, r, m = (int(x) for x in rng.integers(1, 6, 3))
            p = FactorPair(rng.random((n, r)), rng.random((r, m)))
            bal = balance_columns(p)
            bound = 2 * (n * m) ** 0.25 * math.sqrt(np.linalg.norm(p.w @ p.h))
            col = bal.w.sum(axis=0) + bal.h.sum(axis=1)
            assert np.all(col <= bound + 1e-9)
            np.testing.assert_allclose(bal.w.sum(axis=0), bal.h.sum(axis=1), rtol=1e-12)

    def test_zero_column_pair_passes(self):
        p = FactorPair(np.array([[1.0, 0.0]]), np.array([[1.0], [0.0]]))
        q = rescale_to_simplex(p, 4.0)
        assert q.w[0, 1] == 0.0 and q.h[1, 0] == 0.0

    def test_mixed_zero_column(self):
        p = FactorPair(np.array([[1.0, 0.0]]), np.array([[1.0], [2.0]]))
        with pytest.raises(RescaleError):
            rescale_to_simplex(p, 4.0)

    def test_c_too_small(self):
        with pytest.raises(RescaleError, match="exceeds C"):
            rescale_to_simplex(pt(1, 1), 1.0)

    def test_warns_below_threshold(self):
        with pytest.warns(RuntimeWarning):
            rescale_to_simplex(pt(0.5, 0.5), 1.0, v=ONE)

    def test_quiet_above_threshold(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            rescale_to_simplex(pt(1, 1), 4.0, v=ONE)

    def test_rejects_negative(self):
        with pytest.raises(RescaleError):
            balance_columns(pt(-1.0, 1.0))

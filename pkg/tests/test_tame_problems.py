import math

import numpy as np
import pytest

from nme import (BoundSeq, GradedElement, GradingSpec, TameProblem, check_tame_at,
                 directional_derivative_fd, estimate_constants, identity_problem,
                 nonlinear_smoothing_problem, problem_from_config, quadratic_problem,
                 random_element, sampled_box_inclusion, scaled_identity_problem,
                 smoothing_problem)
from nme.errors import GuardViolation, LevelRangeError
from nme.properties import catalog
from nme.tame_problems import sample_base_point, target_box

SPEC = GradingSpec(K=16, N=4)
S1 = GradedElement.mode(SPEC, "sin", 1)
S3 = GradedElement.mode(SPEC, "sin", 3)

# frozen: quadratic_problem(mu=1) constants, K=16, N=4, q=4, seed 0, 100 trials (same values at 200)
QUAD_C_SEED0 = (2.1850542892480926, 2.2124699195833144, 11.557337123138854,
                107.47707029041128, 1258.851015384625)


@pytest.fixture(scope="module")
def problems():
    return catalog(SPEC, seed=0)


def dense_jacobian(problem, x):
    # columns f'(x; e_i); independent of the Galerkin right inverse
    basis = np.eye(SPEC.size)
    return np.column_stack([problem.dderiv(x, GradedElement(e, SPEC)).coeffs for e in basis])


class TestConstruction:
    def test_f0_must_vanish(self):
        with pytest.raises(ValueError):
            TameProblem("bad", SPEC, eval=lambda x: x + GradedElement.constant(SPEC, 1.0),
                        dderiv=lambda x, h: h, right_inverse=lambda x, v: v)

    def test_constants_positive(self):
        with pytest.raises(ValueError):
            identity_problem(SPEC).with_constants(BoundSeq.of([1, 1, 0, 1, 1]))._check_c(
                BoundSeq.of([1, 1, 0, 1, 1]))
        with pytest.raises(ValueError):
            quadratic_problem(SPEC, c=[1, 1, 0, 1, 1])

    def test_loss_range(self):
        with pytest.raises(LevelRangeError):
            smoothing_problem(GradingSpec(K=4, N=0))

    def test_catalog_f0(self, problems):
        for p in problems:
            assert p.eval(GradedElement.zero(SPEC)).is_zero

    def test_provenance(self, problems):
        src = {p.name: p.c_source for p in problems}
        assert src == {"identity": "analytic", "scaled_identity": "analytic",
                       "smoothing": "analytic", "quadratic": "estimated",
                       "nonlinear_smoothing": "estimated"}
        assert "c_distribution" in problems[3].params

    def test_config(self):
        p = problem_from_config({"problem": "quadratic", "mu": 0.5, "K": 8, "N": 2, "q": 5,
                                 "c": [3, 4, 5], "d": 0})
        assert p.params["mu"] == 0.5 and p.spec.q == 5 and p.c.values == (3, 4, 5)
        assert p.c_source == "user"
        with pytest.raises(ValueError):
            problem_from_config({"problem": "smoothing", "d": 0})
        with pytest.raises(ValueError):
            problem_from_config({"problem": "nope"})


class TestDerivatives:
    def test_linear_exact(self, rng):
        p = smoothing_problem(SPEC)
        x, h = random_element(SPEC, rng), random_element(SPEC, rng)
        assert directional_derivative_fd(p, x, h, 0.3).allclose(p.eval(h), atol=1e-13)

    def test_quadratic_at_zero(self):
        p = quadratic_problem(SPEC, 1.0)
        for t in (1e-1, 1e-2):
            fd = directional_derivative_fd(p, GradedElement.zero(SPEC), S1, t)
            # h + t h^2 with h^2 = 1/2 - cos(2θ)/2, exactly representable
            expected = S1 + t * (GradedElement.constant(SPEC, 0.5) - GradedElement.mode(SPEC, "cos", 2, 0.5))
            assert fd.allclose(expected, atol=1e-13)

    def test_quadratic_ladder_closed_form(self):
        p = quadratic_problem(SPEC, 1.0)
        x = GradedElement.constant(SPEC, 0.2)
        exact = p.dderiv(x, S1)
        assert exact.allclose(1.4 * S1, atol=1e-14)
        for t in (1e-2, 1e-3, 1e-4):
            gap = (exact - directional_derivative_fd(p, x, S1, t)).norms()
            # ||sin^2||_n = (1, 1, 2, 4, 8)
            assert gap == pytest.approx(t * np.array([1, 1, 2, 4, 8]), rel=1e-6)

    def test_ladder_all_problems(self, problems, rng):
        for p in problems:
            for _ in range(10):
                x = 0.5 * sample_base_point(p, rng)  # keep x + t h guarded
                h = random_element(SPEC, rng, decay=2.0, scale=0.5)
                exact = p.dderiv(x, h)
                gaps = [(exact - directional_derivative_fd(p, x, h, t)).norms()
                        for t in (1e-2, 1e-3, 1e-4)]
                floor = 1e-9 * np.maximum(exact.norms(), 1)
                for a, b in zip(gaps, gaps[1:]):
                    live = a > floor
                    assert np.all(a[live] >= 8 * b[live])

    def test_guard(self):
        p = quadratic_problem(SPEC, 1.0)
        with pytest.raises(GuardViolation):
            directional_derivative_fd(p, GradedElement.constant(SPEC, -0.3), S1, 1e-3)
        with pytest.raises(ValueError):
            directional_derivative_fd(p, GradedElement.zero(SPEC), S1, 0.0)


class TestRightInverse:
    def test_consistency(self, problems, rng):
        for p in problems:
            top = SPEC.N - p.d
            for _ in range(100):
                x = sample_base_point(p, rng)
                v = random_element(SPEC, rng, decay=float(rng.integers(0, 3)))
                res = (p.dderiv(x, p.right_inverse(x, v)) - v).norms()[:top + 1]
                assert np.all(res <= 1e-8 * (1 + v.norms()[:top + 1]))

    def test_matches_dense_solve(self, problems, rng):
        for p in problems[3:]:
            x = sample_base_point(p, rng)
            v = random_element(SPEC, rng)
            u = np.linalg.solve(dense_jacobian(p, x), v.coeffs)
            assert np.allclose(p.right_inverse(x, v).coeffs, u, rtol=1e-9, atol=1e-11)


class TestCheckTame:
    def test_identity(self, rng):
        v = random_element(SPEC, rng)
        rep = check_tame_at(identity_problem(SPEC), GradedElement.zero(SPEC), v)
        assert rep.passed and max(rep.inverse_residual) == 0
        assert rep.bound_ratio == pytest.approx((1,) * 5)

    def test_zero_target(self, problems):
        for p in problems:
            rep = check_tame_at(p, GradedElement.zero(SPEC), GradedElement.zero(SPEC))
            assert rep.passed
            assert all(r == 0 for r in rep.bound_ratio if r is not None)

    def test_smoothing_sin3(self):
        rep = check_tame_at(smoothing_problem(SPEC), GradedElement.zero(SPEC), S3)
        assert rep.passed
        assert rep.bound_ratio[:4] == pytest.approx((2 / 3,) * 4, rel=1e-13)
        assert rep.bound_ratio[4] is None and rep.exempt_levels == (4,)

    def test_corrupted_constant_fails(self):
        p = smoothing_problem(SPEC).with_constants(BoundSeq.constant(5, 0.1))
        rep = check_tame_at(p, GradedElement.zero(SPEC), S3)
        assert not rep.passed
        assert rep.bound_ratio[0] == pytest.approx(4 / 0.3)

    def test_guard(self):
        with pytest.raises(GuardViolation):
            check_tame_at(quadratic_problem(SPEC), GradedElement.constant(SPEC, -1.0), S1)


class TestInclusion:
    def test_identity_unit(self):
        p = identity_problem(SPEC)
        assert sampled_box_inclusion(p, GradedElement.zero(SPEC), BoundSeq.ones(5), 50)

    def test_zero_box(self, problems):
        for p in problems:
            assert sampled_box_inclusion(p, GradedElement.zero(SPEC), BoundSeq.zeros(5), 10)

    def test_quadratic_at_zero(self):
        p = quadratic_problem(SPEC, 1.0)
        s = BoundSeq.of([1, 1, 2, 4, 8])
        assert sampled_box_inclusion(p, GradedElement.zero(SPEC), s, 100, slack=1e-6)

    def test_catalog_random_points(self, problems):
        rng = np.random.default_rng(11)
        for p in problems:
            for _ in range(3):
                x = sample_base_point(p, rng)
                s = BoundSeq.of(rng.uniform(0.5, 2.0) * 2.0 ** np.arange(5))
                assert sampled_box_inclusion(p, x, s, 100, slack=1e-6, rng=rng)

    def test_detects_bad_constant(self):
        p = smoothing_problem(SPEC).with_constants(BoundSeq.constant(5, 0.5))
        assert not sampled_box_inclusion(p, GradedElement.zero(SPEC), BoundSeq.ones(5), 20)

    def test_target_box_shift(self):
        s = BoundSeq.of([2, 4, 6, 8, 10])
        T = target_box(smoothing_problem(SPEC), s)
        assert T.values == (math.inf, 1, 2, 3, 4)


class TestEstimate:
    def test_identity(self):
        c = estimate_constants(identity_problem(SPEC), trials=100)
        assert c.values == pytest.approx((1.1,) * 5, rel=1e-12)

    def test_structured_columns_match_right_inverse(self, problems, rng):
        from nme.tame_problems import _inverse_columns
        for p in problems:
            x = sample_base_point(p, rng)
            U = _inverse_columns(p, x)
            V = [p.right_inverse(x, GradedElement(e, SPEC)).coeffs for e in np.eye(SPEC.size)]
            assert np.allclose(U, V, rtol=1e-10, atol=1e-12)

    def test_sampler_guard_safe(self, problems):
        rng = np.random.default_rng(2)
        for p in problems:
            for _ in range(50):
                assert p.domain_guard(sample_base_point(p, rng))

    def test_scaled_identity(self):
        c = estimate_constants(scaled_identity_problem(SPEC), trials=100)
        assert c.values == pytest.approx((0.55,) * 5, rel=1e-12)

    def test_smoothing_range(self):
        c = estimate_constants(smoothing_problem(SPEC), trials=200)
        assert all(4 / 3 * 1.1 <= v <= 2 * 1.1 + 1e-12 for v in c)

    def test_frozen_quadratic(self):
        assert quadratic_problem(SPEC, 1.0).c.values == pytest.approx(QUAD_C_SEED0, rel=1e-9)

    def test_deterministic(self):
        p = quadratic_problem(SPEC, 1.0)
        assert estimate_constants(p, seed=4) == estimate_constants(p, seed=4)

    def test_trials(self):
        with pytest.raises(ValueError):
            estimate_constants(identity_problem(SPEC), trials=50)

    def test_nonlinear_smoothing_exempt_top(self):
        c = nonlinear_smoothing_problem(SPEC, 1.0).c
        assert len(c) == 5 and c[4] == c[3]

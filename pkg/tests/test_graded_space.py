import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import dense_norms
from nme import (BoundSeq, GradedElement, GradingSpec, bound_product, box_contains,
                 derivative, distance_n, metric, metric_slack, norm, random_element,
                 shift_levels, unit_ball)
from nme.errors import (EmptySetError, LengthMismatchError, LevelRangeError,
                        SpecMismatchError)

SPEC = GradingSpec(K=16, N=4)


def sin(k, amp=1.0, spec=SPEC):
    return GradedElement.mode(spec, "sin", k, amp)


def const(c, spec=SPEC):
    return GradedElement.constant(spec, c)


elements = st.builds(
    lambda seed, decay, scale: random_element(SPEC, np.random.default_rng(seed), decay, scale),
    st.integers(0, 2 ** 32 - 1), st.sampled_from([0.0, 1.0, 2.0]),
    st.floats(0.01, 10.0))


class TestSpec:
    def test_grid_size(self):
        s = GradingSpec(K=5, N=2, q=6)
        assert s.M == 6 * 11
        assert s.size == 11
        assert np.allclose(np.diff(s.grid()), 2 * np.pi / s.M)

    @pytest.mark.parametrize("kw", [dict(K=0, N=1), dict(K=3, N=-1), dict(K=3, N=1, q=3)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            GradingSpec(**kw)

    def test_immutable(self):
        with pytest.raises(Exception):
            SPEC.K = 3


class TestElement:
    def test_coefficients_read_only(self):
        x = sin(1)
        with pytest.raises(ValueError):
            x.coeffs[0] = 1.0

    def test_wrong_length(self):
        with pytest.raises(LengthMismatchError):
            GradedElement(np.zeros(5), SPEC)

    def test_non_finite(self):
        c = np.zeros(SPEC.size)
        c[3] = np.nan
        with pytest.raises(ValueError):
            GradedElement(c, SPEC)

    def test_grid_round_trip(self, rng):
        x = random_element(SPEC, rng)
        y = GradedElement.from_grid(SPEC, x.grid_values())
        assert np.allclose(x.coeffs, y.coeffs, atol=1e-13)

    def test_from_function(self):
        x = GradedElement.from_function(SPEC, lambda th: 3 * np.cos(2 * th) - np.sin(5 * th))
        assert x.a[2] == pytest.approx(3.0, abs=1e-14)
        assert x.b[4] == pytest.approx(-1.0, abs=1e-14)

    def test_vector_space(self, rng):
        x, y = random_element(SPEC, rng), random_element(SPEC, rng)
        assert np.allclose((x + y - y).coeffs, x.coeffs, atol=1e-15)
        assert np.allclose((2.5 * x).coeffs, 2.5 * x.coeffs)
        assert np.allclose((-x).coeffs, -x.coeffs)
        assert np.allclose((x / 4).coeffs, 0.25 * x.coeffs)

    def test_spec_mismatch(self):
        with pytest.raises(SpecMismatchError):
            sin(1) + sin(1, spec=GradingSpec(K=8, N=4))

    def test_serialization_round_trip(self, rng):
        x = random_element(SPEC, rng)
        data = json.loads(json.dumps(x.to_dict()))
        assert set(data) == {"K", "a", "b"}
        assert len(data["a"]) == 17 and len(data["b"]) == 16
        assert np.array_equal(GradedElement.from_dict(data, SPEC).coeffs, x.coeffs)

    def test_from_dict_mismatch(self):
        with pytest.raises(SpecMismatchError):
            GradedElement.from_dict({"K": 3, "a": [0] * 4, "b": [0] * 3}, SPEC)


class TestDerivative:
    def test_constant(self):
        assert derivative(const(5.0), 1).is_zero

    def test_sine_second(self):
        assert derivative(sin(1), 2).allclose(sin(1, -1.0))

    def test_sin2_first_against_finite_difference(self):
        x = sin(2)
        d = derivative(x, 1).grid_values()
        th = SPEC.grid()
        step = 1e-5
        fd = (np.sin(2 * (th + step)) - np.sin(2 * (th - step))) / (2 * step)
        assert np.max(np.abs(d - fd)) < 1e-8
        assert np.allclose(d, 2 * np.cos(2 * th), atol=1e-13)

    def test_level_range(self):
        with pytest.raises(LevelRangeError):
            derivative(sin(1), 5)


class TestNorm:
    def test_constant(self):
        assert all(norm(const(-2.5), n) == 2.5 for n in SPEC.levels)

    def test_zero(self):
        assert norm(GradedElement.zero(SPEC), SPEC.N) == 0.0

    def test_sin2(self):
        assert norm(sin(2), 1) == pytest.approx(2.0, rel=1e-14)
        assert list(sin(2).norms()) == pytest.approx([1, 2, 4, 8, 16], rel=1e-14)

    def test_top_mode_off_grid(self):
        # |cos(K(θ - π/M))| peaks halfway between grid nodes; with M/(2K)
        # integer every peak does, so the plain grid sup is cos(Kπ/M)
        spec = GradingSpec(K=4, N=1, q=8)
        c = np.zeros(spec.size)
        phase = np.pi / spec.M * spec.K
        c[4], c[8] = np.cos(phase), np.sin(phase)
        x = GradedElement(c, spec)
        assert np.max(np.abs(x.grid_values())) == pytest.approx(np.cos(np.pi / 18), rel=1e-12)
        assert list(x.norms()) == pytest.approx([1.0, 4.0], rel=1e-14)

    def test_matches_dense_oracle(self, rng):
        for decay in (0.0, 1.0, 2.0):
            x = random_element(SPEC, rng, decay=decay)
            ref = dense_norms(x, SPEC.N)
            # the fine grid itself can only underestimate, by ~ (Kπ/points)^2 K^2/2
            assert np.all(x.norms() >= ref * (1 - 1e-12))
            assert np.allclose(x.norms(), ref, rtol=1e-5)

    def test_level_range(self):
        with pytest.raises(LevelRangeError):
            norm(sin(1), -1)

    @settings(max_examples=200, deadline=None)
    @given(elements)
    def test_nesting(self, x):
        assert np.all(np.diff(x.norms()) >= 0)

    @settings(max_examples=100, deadline=None)
    @given(elements, st.floats(1e-3, 100) | st.floats(-100, -1e-3))
    def test_homogeneity(self, x, lam):
        assert np.allclose((lam * x).norms(), abs(lam) * x.norms(), rtol=1e-12, atol=0)

    @settings(max_examples=100, deadline=None)
    @given(elements, elements)
    def test_triangle(self, x, y):
        assert np.all((x + y).norms() <= (x.norms() + y.norms()) * (1 + 1e-12))

    def test_zero_iff(self, rng):
        x = random_element(SPEC, rng) * 1e-200
        assert x.norms()[0] > 0


class TestMetric:
    def test_identity(self, rng):
        x = random_element(SPEC, rng)
        assert metric(x, x) == 0.0

    @pytest.mark.parametrize("c, expected", [(1.0, 0.5), (3.0, 0.75)])
    def test_constant_shift(self, rng, c, expected):
        x = random_element(SPEC, rng)
        assert metric(x, x + const(c)) == pytest.approx(expected, rel=1e-12)

    def test_slack(self):
        assert metric_slack(SPEC) == 2.0 ** -5

    def test_mismatch(self):
        with pytest.raises(SpecMismatchError):
            metric(sin(1), sin(1, spec=GradingSpec(K=16, N=3)))

    @settings(max_examples=100, deadline=None)
    @given(elements, elements, elements)
    def test_axioms(self, x, y, z):
        dxy = metric(x, y)
        assert dxy == pytest.approx(metric(y, x), rel=1e-12)
        assert dxy <= (metric(x, z) + metric(z, y)) * (1 + 1e-12)
        assert metric(x + z, y + z) == pytest.approx(dxy, rel=1e-12, abs=1e-15)
        assert 0 <= dxy < 1

    def test_convergence_equivalence(self, rng):
        x = random_element(SPEC, rng, decay=2.0)
        e = random_element(SPEC, rng, decay=2.0)
        prev = math.inf
        for j in range(1, 12):
            d = metric(x + e * 10.0 ** -j, x)
            assert d < prev
            prev = d
        assert prev < metric_slack(SPEC)
        # metric below 2^-(N+1) bounds every level term by its weight
        nv = (e * 1e-11).norms()
        assert np.all(2.0 ** -np.arange(5) * nv / (1 + nv) <= prev)


class TestBoxes:
    def test_zero_in_every_box(self):
        assert box_contains(GradedElement.zero(SPEC), BoundSeq.zeros(5))

    def test_sin2_unit(self):
        assert not box_contains(sin(2), BoundSeq.ones(5))

    def test_sin2_powers(self):
        assert box_contains(sin(2), BoundSeq.of(2.0 ** n for n in range(5)))

    def test_slack(self):
        s = BoundSeq.of([1, 2, 4, 8, 16 * (1 - 1e-8)])
        assert not box_contains(sin(2), s)
        assert box_contains(sin(2), s, slack=1e-7)

    def test_length(self):
        with pytest.raises(LengthMismatchError):
            box_contains(sin(1), BoundSeq.ones(3))

    def test_unit_ball(self):
        b = unit_ball(SPEC, 2)
        assert b.values == (math.inf, math.inf, 1.0, math.inf, math.inf)
        assert box_contains(sin(1), b) and not box_contains(sin(2), b)

    @settings(max_examples=100, deadline=None)
    @given(elements, st.lists(st.floats(0, 1e4), min_size=5, max_size=5))
    def test_recheck(self, x, s):
        assert box_contains(x, BoundSeq.of(s)) == all(norm(x, n) <= s[n] for n in range(5))


class TestDistance:
    def test_member(self, rng):
        x = random_element(SPEC, rng)
        assert distance_n(x, [sin(1), x], 3) == 0.0

    def test_to_zero(self):
        assert distance_n(sin(1), [GradedElement.zero(SPEC)], 0) == pytest.approx(1.0)

    def test_constants(self):
        assert distance_n(const(1.5), [GradedElement.zero(SPEC), const(2.0)], 2) == pytest.approx(0.5)

    def test_empty(self):
        with pytest.raises(EmptySetError):
            distance_n(sin(1), [], 0)


class TestBoundSeq:
    def test_product(self):
        s = BoundSeq.of([4, 5, 6])
        assert bound_product(BoundSeq.ones(3), s) == s
        assert bound_product(BoundSeq.zeros(3), s) == BoundSeq.zeros(3)
        assert bound_product(BoundSeq.of([1, 2, 3]), s).values == (4, 10, 18)

    def test_product_zero_times_inf(self):
        assert bound_product(BoundSeq.of([0, 2]), BoundSeq.of([math.inf, math.inf])).values == (0, math.inf)

    def test_product_length(self):
        with pytest.raises(LengthMismatchError):
            bound_product(BoundSeq.ones(2), BoundSeq.ones(3))

    def test_shift(self):
        s = BoundSeq.of([1, 2, 3, 4])
        assert shift_levels(s, 0) == s
        assert shift_levels(s, 1).values == (2, 3, 4)
        assert shift_levels(s, 3).values == (4,)
        with pytest.raises(LevelRangeError):
            shift_levels(s, 4)

    @pytest.mark.parametrize("bad", [[-1.0], [math.nan]])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            BoundSeq.of(bad)

    def test_json_inf(self):
        s = BoundSeq.of([1.0, math.inf])
        text = json.dumps(s.to_json())
        assert text == '[1.0, "inf"]'
        assert BoundSeq.from_json(json.loads(text)) == s

"""Seeded property suites behind ``nme props``.

Each suite returns a :class:`PropertyResult`; ``run_all`` runs them in a
fixed order from one seed so that the summary is reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from nme.compactness import (SequenceSource, extract_convergent,
                             membership_via_distances, sup_norms)
from nme.continuation import (ContinuationConfig, dense_newton_oracle, solve)
from nme.graded_space import (BoundSeq, GradedElement, GradingSpec, box_contains,
                              metric, random_element)
from nme.tame_problems import (directional_derivative_fd, identity_problem,
                               nonlinear_smoothing_problem, quadratic_problem,
                               sample_base_point, sampled_box_inclusion,
                               scaled_identity_problem, smoothing_problem)

REL_TOL = 1e-12


@dataclass
class PropertyResult:
    name: str
    passed: bool
    cases: int
    detail: Dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "pass": self.passed, "cases": self.cases,
                "detail": self.detail}


def catalog(spec: GradingSpec, seed: int = 0) -> list:
    """All catalog problems on ``spec`` (quadratic families with mu = 1)."""
    return [identity_problem(spec), scaled_identity_problem(spec),
            smoothing_problem(spec), quadratic_problem(spec, 1.0, seed=seed),
            nonlinear_smoothing_problem(spec, 1.0, seed=seed)]


def _elements(spec, rng, count):
    # mixed decay so that both smooth and rough elements appear
    return [random_element(spec, rng, decay=float(rng.integers(0, 3)),
                           scale=float(rng.uniform(0.1, 3.0))) for _ in range(count)]


def graded_axioms(spec: GradingSpec, seed: int, count: int = 1000) -> List[PropertyResult]:
    rng = np.random.default_rng(seed)
    xs, ys, zs = (_elements(spec, rng, count) for _ in range(3))
    lams = rng.uniform(-5.0, 5.0, count)
    nest = sym = tri = trans = homog = box = 0
    for x, y, z, lam in zip(xs, ys, zs, lams):
        nx = x.norms()
        nest += int(np.all(np.diff(nx) >= 0))
        dxy, dyx = metric(x, y), metric(y, x)
        sym += int(abs(dxy - dyx) <= REL_TOL * max(dxy, 1e-300))
        dxz, dzy = metric(x, z), metric(z, y)
        tri += int(dxy <= (dxz + dzy) * (1 + REL_TOL))
        dt = metric(x + z, y + z)
        trans += int(abs(dt - dxy) <= REL_TOL * dxy + 1e-15)
        nl = (lam * x).norms()
        homog += int(np.all(np.abs(nl - abs(lam) * nx) <= REL_TOL * abs(lam) * nx + 1e-300))
        s = BoundSeq(tuple(nx * rng.uniform(0.9, 1.1, nx.size)))
        box += int(box_contains(x, s) == bool(np.all(nx <= s.as_array())))
    mk = lambda name, k: PropertyResult(name, k == count, count, {"failures": count - k})
    return [mk("norm_nesting", nest), mk("metric_symmetry", sym),
            mk("metric_triangle", tri), mk("metric_translation_invariance", trans),
            mk("norm_homogeneity", homog), mk("box_recheck", box)]


def _pairwise_ok(xs, indices, levels, tol):
    worst = 0.0
    for n in range(levels + 1):
        tail = indices[n:]
        for i in range(len(tail)):
            for j in range(i + 1, len(tail)):
                worst = max(worst, (xs[tail[i]] - xs[tail[j]]).norms()[n] / (2 * tol))
    return worst <= 1.0, worst


def compactness_machinery(spec: GradingSpec, seed: int, cases: int = 100) -> List[PropertyResult]:
    s1 = GradedElement.mode(spec, "sin", 1)
    out = []
    seqs = {"alternating": lambda k: (-1.0) ** k * s1,
            "harmonic": lambda k: s1 / (k + 1.0)}
    for name, gen in seqs.items():
        src = SequenceSource(gen)
        levels = min(2, spec.N)
        res = extract_convergent(src, levels=levels, tol=0.1, want=4, scan_limit=60)
        ok, worst = _pairwise_ok(src.take(60), list(res.indices), levels, 0.1)
        ok = ok and all(b > a for a, b in zip(res.indices, res.indices[1:]))
        out.append(PropertyResult(f"extraction_cauchy_{name}", ok, 1,
                                  {"indices": list(res.indices), "worst_ratio": worst}))

    rng = np.random.default_rng(seed + 1)
    agree = 0
    for _ in range(cases):
        pool = _elements(spec, rng, int(rng.integers(1, 6)))
        x = pool[int(rng.integers(len(pool)))] if rng.random() < 0.5 else _elements(spec, rng, 1)[0]
        direct = any(np.array_equal(x.coeffs, p.coeffs) for p in pool)
        agree += int(membership_via_distances(x, pool, 1e-9) == direct)
    out.append(PropertyResult("membership_matches_direct", agree == cases, cases,
                              {"failures": cases - agree}))

    gen = lambda k: random_element(spec, np.random.default_rng([seed, k]), decay=1.0)
    src = SequenceSource(gen)
    a, b = sup_norms(src, 10).as_array(), sup_norms(src, 20).as_array()
    out.append(PropertyResult("sup_norms_monotone", bool(np.all(b >= a)), 1, {}))
    return out


def derivative_ladder(problems, seed: int, pairs: int = 50) -> PropertyResult:
    """Gap ``||f'(x;h) - FD_t||_n`` shrinks >= 8x per decade of ``t``.

    Gaps already at round-off (linear maps) count as passing. Base points
    are halved so that ``x + t h`` stays inside the guard.
    """
    rng = np.random.default_rng(seed + 2)
    ladder = (1e-2, 1e-3, 1e-4)
    worst, failures, total = math.inf, 0, 0
    for prob in problems:
        for _ in range(pairs):
            x = 0.5 * sample_base_point(prob, rng)
            h = random_element(prob.spec, rng, decay=2.0, scale=0.5)
            exact = prob.dderiv(x, h)
            scale = np.maximum(exact.norms(), 1.0)
            gaps = np.array([(exact - directional_derivative_fd(prob, x, h, t)).norms()
                             for t in ladder])
            floor = 1e-9 * scale
            for a, b, n in zip(gaps[:-1].ravel(), gaps[1:].ravel(),
                               np.tile(np.arange(prob.spec.N + 1), len(ladder) - 1)):
                if a <= floor[n]:
                    continue
                ratio = a / max(b, 1e-300)
                worst = min(worst, ratio)
                failures += int(ratio < 8.0)
            total += 1
    return PropertyResult("derivative_fd_ladder", failures == 0, total,
                          {"min_decade_ratio": None if math.isinf(worst) else worst,
                           "failures": failures})


def inverse_consistency(problems, seed: int, cases: int = 100) -> PropertyResult:
    rng = np.random.default_rng(seed + 3)
    worst, failures = 0.0, 0
    for prob in problems:
        for _ in range(cases):
            x = sample_base_point(prob, rng)
            v = random_element(prob.spec, rng, decay=float(rng.integers(0, 3)))
            top = prob.spec.N - prob.d
            res = (prob.dderiv(x, prob.right_inverse(x, v)) - v).norms()[:top + 1]
            ratio = np.max(res / (1e-8 * (1.0 + v.norms()[:top + 1])))
            worst = max(worst, float(ratio))
            failures += int(ratio > 1.0)
    return PropertyResult("right_inverse_consistency", failures == 0,
                          cases * len(problems), {"worst_ratio": worst})


def sampled_inclusion(problems, seed: int, samples: int = 100,
                      base_points: int = 3) -> PropertyResult:
    rng = np.random.default_rng(seed + 4)
    failed = []
    for prob in problems:
        s = BoundSeq(tuple(2.0 ** n for n in prob.spec.levels))
        for _ in range(base_points):
            x = sample_base_point(prob, rng)
            if not sampled_box_inclusion(prob, x, s, samples, slack=1e-6, rng=rng):
                failed.append(prob.name)
    return PropertyResult("sampled_box_inclusion", not failed,
                          len(problems) * base_points, {"failed": failed})


def continuation_suite(spec: GradingSpec, seed: int) -> List[PropertyResult]:
    rng = np.random.default_rng(seed + 5)
    eps = 1e-4
    cfg = ContinuationConfig(eps=eps)
    runs = []
    for prob in (identity_problem(spec), smoothing_problem(spec)):
        y = random_element(spec, rng)
        runs.append((prob, y, solve(prob, y, cfg)))
    quad = quadratic_problem(spec, 1.0, seed=seed)
    yq = GradedElement.mode(spec, "sin", 1, 0.05) + GradedElement.mode(spec, "cos", 2, 0.02)
    runs.append((quad, yq, solve(quad, yq, ContinuationConfig(eps=eps, monitored_levels=1))))

    audit = [p for _, _, o in runs for p in o.trace.audit(eps)]
    halving = True
    for _, _, o in runs:
        tr = o.trace
        for i in range(1, len(tr)):
            if not tr.accepted_mask[i - 1] and not tr.r[i] < tr.r[i - 1]:
                halving = False
    box = all(not o.trace.box_violations for _, _, o in runs[:2])
    box_exact = True
    for prob, y, o in runs[:2]:
        # re-check x(t) in t*s at slack 1e-9 from the recorded norms and bounds
        acc = o.trace.accepted_mask
        box_exact &= bool(np.all(o.trace.norm[acc] <= o.trace.bound[acc] * (1 + 1e-9)))
    xn = dense_newton_oracle(quad, yq, tol=1e-12)
    gap = float((runs[2][2].x_final - xn).norms()[0])
    again = solve(quad, yq, ContinuationConfig(eps=eps, monitored_levels=1))
    same = (again.trace.to_csv() == runs[2][2].trace.to_csv()
            and np.array_equal(again.x_final.coeffs, runs[2][2].x_final.coeffs))
    return [PropertyResult("residual_accumulation", not audit, len(runs), {"violations": audit[:5]}),
            PropertyResult("monotone_progress", halving, len(runs), {}),
            PropertyResult("box_invariant_exact_problems", box and box_exact, 2, {}),
            PropertyResult("newton_oracle_equivalence", gap <= 10 * max(eps, 1e-12), 1,
                           {"gap": gap}),
            PropertyResult("determinism", bool(same), 1, {})]


def run_all(seed: int = 0, K: int = 16, N: int = 4, q: int = 4) -> List[PropertyResult]:
    spec = GradingSpec(K, N, q)
    problems = catalog(spec, seed)
    results = []
    results += graded_axioms(spec, seed)
    results += compactness_machinery(spec, seed)
    results.append(derivative_ladder(problems, seed))
    results.append(inverse_consistency(problems, seed))
    results.append(sampled_inclusion(problems, seed))
    results += continuation_suite(spec, seed)
    return results

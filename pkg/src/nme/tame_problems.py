"""Tame problems: a map, its directional derivative and a tame right inverse.

A :class:`TameProblem` packages ``f``, ``f'(x; .)``, a right inverse
``v -> u`` with ``f'(x; u) = v`` and constants ``c_n``, ``d`` such that
``||u||_n <= c_n ||v||_{n+d}``. Nonlinear catalog entries only have a right
inverse on a guarded region; the guard is part of the contract.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from nme import kernels
from nme.errors import (DegenerateSampling, GuardViolation, LevelRangeError,
                        SamplerFailure)
from nme.graded_space import (BoundSeq, GradedElement, GradingSpec,
                              box_contains, random_element)

ZERO_TOL = 1e-12

ESTIMATION_DISTRIBUTION = (
    "base points: shape e_i/(1+k)^2 with random signs e_i, scaled so that "
    "max|2 mu L x| = u/2 on the grid with u uniform in [0.5, 1] (0.5*u*shape "
    "for linear maps); targets per base point: every unit mode cos k, sin k "
    "plus one random draw (a unit mode with uniform phase or white Gaussian "
    "coefficients, alternating)"
)


def _always(x):
    return True


@dataclass(frozen=True, eq=False)
class MultiplierQuadratic:
    """Structure ``f(x) = L x + mu P((L x)^2)`` with ``L`` diagonal in Fourier.

    Lets the compiled continuation engine run the whole step loop; the
    guard is ``min(1 + 2 mu L x) >= guard_floor``.
    """

    mult: np.ndarray
    mu: float
    guard_floor: float = 0.5


@dataclass(frozen=True, eq=False)
class TameProblem:
    name: str
    spec: GradingSpec
    eval: Callable[[GradedElement], GradedElement]
    dderiv: Callable[[GradedElement, GradedElement], GradedElement]
    right_inverse: Callable[[GradedElement, GradedElement], GradedElement]
    d: int = 0
    c: Optional[BoundSeq] = None
    domain_guard: Callable[[GradedElement], bool] = _always
    c_source: str = "unset"
    params: dict = field(default_factory=dict)
    structure: Optional[MultiplierQuadratic] = None

    def __post_init__(self):
        if not 0 <= self.d <= self.spec.N:
            raise LevelRangeError(f"loss d={self.d} outside 0..{self.spec.N}")
        f0 = self.eval(GradedElement.zero(self.spec))
        if np.any(f0.norms() > ZERO_TOL):
            raise ValueError(f"{self.name}: f(0) != 0 (norms {f0.norms()})")
        if self.c is not None:
            self._check_c(self.c)

    def _check_c(self, c):
        if len(c) != self.spec.N + 1:
            raise ValueError(f"c has {len(c)} entries, need {self.spec.N + 1}")
        if not all(0 < v < math.inf for v in c):
            raise ValueError("tame constants must be positive and finite")

    def with_constants(self, c: BoundSeq, source: str = "user") -> "TameProblem":
        return replace(self, c=c, c_source=source)

    def require_c(self) -> BoundSeq:
        if self.c is None:
            raise ValueError(f"{self.name}: tame constants not set")
        return self.c

    @property
    def checked_levels(self) -> range:
        """Source levels whose tame bound is verifiable (``n + d <= N``)."""
        return range(self.spec.N - self.d + 1)

    def guard(self, x: GradedElement) -> None:
        if not self.domain_guard(x):
            raise GuardViolation(f"{self.name}: point outside the guarded domain")


@dataclass(frozen=True)
class TameCheckReport:
    inverse_residual: tuple
    bound_ratio: tuple          # None at exempt levels
    exempt_levels: tuple
    passed: bool

    def to_dict(self) -> dict:
        return {"inverse_residual": list(self.inverse_residual),
                "bound_ratio": list(self.bound_ratio),
                "exempt_levels": list(self.exempt_levels),
                "pass": self.passed}


# catalog

def identity_problem(spec: GradingSpec) -> TameProblem:
    return TameProblem(
        name="identity", spec=spec,
        eval=lambda x: x,
        dderiv=lambda x, h: h,
        right_inverse=lambda x, v: v,
        d=0, c=BoundSeq.ones(spec.N + 1), c_source="analytic",
        structure=MultiplierQuadratic(np.ones(spec.size), 0.0))


def scaled_identity_problem(spec: GradingSpec, factor: float = 2.0) -> TameProblem:
    if factor == 0:
        raise ValueError("factor must be nonzero")
    return TameProblem(
        name="scaled_identity", spec=spec,
        eval=lambda x: factor * x,
        dderiv=lambda x, h: factor * h,
        right_inverse=lambda x, v: v / factor,
        d=0, c=BoundSeq.constant(spec.N + 1, 1.0 / abs(factor)),
        c_source="analytic", params={"factor": factor},
        structure=MultiplierQuadratic(np.full(spec.size, float(factor)), 0.0))


def _smoothing_weights(spec):
    k = np.arange(spec.K + 1, dtype=float)
    sigma = 1.0 / (1.0 + k)
    return np.concatenate([sigma, sigma[1:]])


def smoothing_problem(spec: GradingSpec) -> TameProblem:
    """``f = S`` with Fourier multiplier ``1/(1+|k|)``; loses one derivative."""
    if spec.N < 1:
        raise LevelRangeError("smoothing problem needs N >= 1 (d = 1)")
    sigma = _smoothing_weights(spec)

    def apply_s(x):
        return GradedElement._wrap(x.coeffs * sigma, spec)

    return TameProblem(
        name="smoothing", spec=spec,
        eval=apply_s,
        dderiv=lambda x, h: apply_s(h),
        right_inverse=lambda x, v: GradedElement._wrap(v.coeffs / sigma, spec),
        d=1, c=BoundSeq.constant(spec.N + 1, 2.0), c_source="analytic",
        structure=MultiplierQuadratic(sigma, 0.0))


def _galerkin_solve(spec, g_values, rhs):
    # solve P(g * u) = rhs for u of degree K; P is the grid projection
    synth, anal = kernels.basis_matrices(spec.K, spec.M)
    G = anal @ (g_values[:, None] * synth)
    return np.linalg.solve(G, rhs)


def _resolve_constants(problem, c, seed, trials):
    if c is None or (isinstance(c, str) and c == "estimate"):
        est = estimate_constants(problem, trials=trials, seed=seed)
        params = dict(problem.params, c_distribution=ESTIMATION_DISTRIBUTION,
                      c_trials=trials, c_seed=seed)
        return replace(problem, c=est, c_source="estimated", params=params)
    if not isinstance(c, BoundSeq):
        c = BoundSeq.of(c)
    return problem.with_constants(c, "user")


def quadratic_problem(spec: GradingSpec, mu: float = 1.0, c="estimate",
                      seed: int = 0, trials: int = 100) -> TameProblem:
    """``f(x) = x + mu*P(x^2)``; right inverse valid where ``1 + 2 mu x >= 1/2``.

    The right inverse solves the projected multiplication system
    ``P((1 + 2 mu x) u) = v`` exactly, so ``f'(x; u) = v`` to round-off.
    """
    def ev(x):
        xv = x.grid_values()
        return x + mu * GradedElement.from_grid(spec, xv * xv)

    def dd(x, h):
        return h + (2.0 * mu) * GradedElement.from_grid(spec, x.grid_values() * h.grid_values())

    def rinv(x, v):
        g = 1.0 + 2.0 * mu * x.grid_values()
        return GradedElement._wrap(_galerkin_solve(spec, g, v.coeffs), spec)

    def guard(x):
        return bool(np.min(1.0 + 2.0 * mu * x.grid_values()) >= 0.5)

    raw = TameProblem(name="quadratic", spec=spec, eval=ev, dderiv=dd,
                      right_inverse=rinv, d=0, domain_guard=guard,
                      params={"mu": mu},
                      structure=MultiplierQuadratic(np.ones(spec.size), float(mu)))
    return _resolve_constants(raw, c, seed, trials)


def nonlinear_smoothing_problem(spec: GradingSpec, mu: float = 1.0, c="estimate",
                                seed: int = 0, trials: int = 100) -> TameProblem:
    """``f(x) = Sx + mu*P((Sx)^2)`` with ``S`` the smoothing multiplier; d = 1."""
    if spec.N < 1:
        raise LevelRangeError("nonlinear smoothing problem needs N >= 1 (d = 1)")
    sigma = _smoothing_weights(spec)

    def sx_values(x):
        return GradedElement._wrap(x.coeffs * sigma, spec).grid_values()

    def ev(x):
        sx = GradedElement._wrap(x.coeffs * sigma, spec)
        sv = sx.grid_values()
        return sx + mu * GradedElement.from_grid(spec, sv * sv)

    def dd(x, h):
        g = 1.0 + 2.0 * mu * sx_values(x)
        return GradedElement.from_grid(spec, g * sx_values(h))

    def rinv(x, v):
        g = 1.0 + 2.0 * mu * sx_values(x)
        w = _galerkin_solve(spec, g, v.coeffs)
        return GradedElement._wrap(w / sigma, spec)

    def guard(x):
        return bool(np.min(1.0 + 2.0 * mu * sx_values(x)) >= 0.5)

    raw = TameProblem(name="nonlinear_smoothing", spec=spec, eval=ev, dderiv=dd,
                      right_inverse=rinv, d=1, domain_guard=guard,
                      params={"mu": mu},
                      structure=MultiplierQuadratic(sigma, float(mu)))
    return _resolve_constants(raw, c, seed, trials)


CATALOG = ("identity", "quadratic", "smoothing", "nonlinear_smoothing", "scaled_identity")


def problem_from_config(cfg: dict) -> TameProblem:
    """Build a catalog problem from the problem-configuration mapping."""
    spec = GradingSpec(K=int(cfg.get("K", 16)), N=int(cfg.get("N", 4)), q=int(cfg.get("q", 4)))
    name = cfg["problem"]
    mu = float(cfg.get("mu", 1.0))
    c = cfg.get("c", "estimate")
    seed = int(cfg.get("seed", 0))
    if name == "identity":
        prob = identity_problem(spec)
    elif name == "scaled_identity":
        prob = scaled_identity_problem(spec, float(cfg.get("factor", 2.0)))
    elif name == "smoothing":
        prob = smoothing_problem(spec)
    elif name == "quadratic":
        prob = quadratic_problem(spec, mu, c=c, seed=seed)
    elif name == "nonlinear_smoothing":
        prob = nonlinear_smoothing_problem(spec, mu, c=c, seed=seed)
    else:
        raise ValueError(f"unknown problem {name!r}; choose from {', '.join(CATALOG)}")
    if "d" in cfg and int(cfg["d"]) != prob.d:
        raise ValueError(f"problem {name} has d={prob.d}, config says d={cfg['d']}")
    if name in ("identity", "scaled_identity", "smoothing") and not (
            c is None or isinstance(c, str)):
        prob = prob.with_constants(BoundSeq.of(c), "user")
    return prob


# samplers

def _base_weights(spec, decay):
    k = np.arange(spec.K + 1, dtype=float)
    w = 1.0 / (1.0 + k) ** decay
    return np.concatenate([w, w[1:]])


def sample_base_point(problem: TameProblem, rng: np.random.Generator,
                      scale: float = 0.5, decay: float = 2.0,
                      max_halvings: int = 60) -> GradedElement:
    """Random point of a fixed compact region inside the guarded domain.

    The shape is ``e_i / (1+k)^decay`` with random signs ``e_i``, scaled by
    ``u`` uniform in ``[0.5, 1]``. For multiplier-quadratic problems the
    shape is normalized so that ``max |2 mu L x| = u/2`` on the grid, so the
    points fill the guard region ``min(1 + 2 mu L x) >= 1/2`` up to its
    boundary. Otherwise the point is ``scale * u * shape``, halved until
    the guard holds.
    """
    spec = problem.spec
    shape = _base_weights(spec, decay) * rng.choice([-1.0, 1.0], spec.size)
    u = rng.uniform(0.5, 1.0)
    st = problem.structure
    if st is not None and st.mu != 0:
        synth, _ = kernels.basis_matrices(spec.K, spec.M)
        peak = float(np.max(np.abs(2.0 * st.mu * (synth @ (st.mult * shape)))))
        if peak > 0:
            x = GradedElement._wrap(shape * (0.5 * u / peak), spec)
            if problem.domain_guard(x):
                return x
    x = GradedElement._wrap(scale * u * shape, spec)
    for _ in range(max_halvings):
        if problem.domain_guard(x):
            return x
        x = 0.5 * x
    raise SamplerFailure(f"{problem.name}: no guarded base point after {max_halvings} halvings")


def _sample_direction(spec, rng, trial):
    if trial % 2 == 0:
        k = int(rng.integers(0, spec.K + 1))
        phase = rng.uniform(0.0, 2.0 * math.pi)
        c = np.zeros(spec.size)
        if k == 0:
            c[0] = 1.0 if rng.random() < 0.5 else -1.0
        else:
            c[k] = math.cos(phase)
            c[spec.K + k] = math.sin(phase)
        return GradedElement._wrap(c, spec)
    return random_element(spec, rng)


# operations

def directional_derivative_fd(problem: TameProblem, x: GradedElement,
                              h: GradedElement, t: float) -> GradedElement:
    """Forward difference quotient ``(f(x + t h) - f(x)) / t``."""
    if t <= 0:
        raise ValueError("t must be positive")
    xt = x + t * h
    problem.guard(x)
    problem.guard(xt)
    return (problem.eval(xt) - problem.eval(x)) / t


def check_tame_at(problem: TameProblem, x: GradedElement, v: GradedElement,
                  slack: float = 0.0, tol: float = 1e-8) -> TameCheckReport:
    """Check the right inverse and its tame bound at one ``(x, v)``.

    The inverse residual at level ``n`` must stay below
    ``tol * (1 + ||v||_n)``. Source levels above ``N - d`` are exempt from
    the bound check and reported as such.
    """
    problem.guard(x)
    c = problem.require_c()
    u = problem.right_inverse(x, v)
    resid = (problem.dderiv(x, u) - v).norms()
    un, vn = u.norms(), v.norms()
    d = problem.d
    ratios, exempt = [], []
    ok = bool(np.all(resid <= tol * (1.0 + vn)))
    for n in problem.spec.levels:
        if n + d > problem.spec.N:
            ratios.append(None)
            exempt.append(n)
            continue
        denom = c[n] * vn[n + d]
        if denom == 0.0:
            ratio = 0.0 if un[n] == 0.0 else math.inf
        else:
            ratio = float(un[n] / denom)
        ratios.append(ratio)
        ok = ok and ratio <= 1.0 + slack
    return TameCheckReport(tuple(float(r) for r in resid), tuple(ratios),
                           tuple(exempt), ok)


def target_box(problem: TameProblem, s: BoundSeq) -> BoundSeq:
    """Bounds on ``v`` (in target levels) for ``v`` in the box of ``b.s``.

    With loss ``d`` the reindexed target level ``n`` is original level
    ``n + d``; original levels below ``d`` stay unbounded.
    """
    c = problem.require_c()
    d, N = problem.d, problem.spec.N
    vals = [math.inf] * d
    for n in range(N - d + 1):
        vals.append(0.0 if s[n] == 0 else s[n] / c[n])
    return BoundSeq(tuple(vals))


def _exempt_box(problem, s):
    keep = problem.spec.N - problem.d
    return BoundSeq(tuple(v if n <= keep else math.inf for n, v in enumerate(s)))


def sampled_box_inclusion(problem: TameProblem, x: GradedElement, s: BoundSeq,
                          samples: int, slack: float = 1e-6,
                          rng: Optional[np.random.Generator] = None,
                          max_retries: int = 20) -> bool:
    """Sampled check that every ``v`` in the ``b.s`` target box has a preimage
    under ``f'(x; .)`` inside the box ``s``.

    Each ``v`` is a random trigonometric polynomial rescaled onto the target
    box (half of the draws land on its boundary); ``right_inverse(x, v)`` must
    satisfy ``box_contains(., s, slack)`` at the verifiable levels.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    problem.guard(x)
    rng = np.random.default_rng(0) if rng is None else rng
    if len(s) != problem.spec.N + 1:
        raise ValueError("bound length does not match the grading")
    T = target_box(problem, s)
    Tarr = T.as_array()
    src_box = _exempt_box(problem, s)
    zero = GradedElement.zero(problem.spec)
    for trial in range(samples):
        for _ in range(max_retries):
            v0 = _sample_direction(problem.spec, rng, trial)
            nv = v0.norms()
            finite = np.isfinite(Tarr)
            if not np.any(finite):
                v = v0
            else:
                with np.errstate(divide="ignore"):
                    lam = np.min(Tarr[finite] / nv[finite])
                if lam == 0.0:
                    v = zero
                else:
                    u = 1.0 if trial % 4 < 2 else rng.uniform(0.0, 1.0)
                    v = (u * lam * (1.0 - 1e-12)) * v0
            if box_contains(v, T):
                break
        else:
            raise SamplerFailure(f"could not draw a target inside the box after {max_retries} tries")
        u_vec = problem.right_inverse(x, v)
        if not box_contains(u_vec, src_box, slack):
            return False
    return True


def _inverse_columns(problem, x):
    # right_inverse applied to every unit coefficient vector, one row each
    spec = problem.spec
    st = problem.structure
    if st is not None and st.mu == 0:
        return np.ascontiguousarray(np.diag(1.0 / st.mult))
    if st is not None:
        # f'(x; u) = P(g * L u) with g = 1 + 2 mu L x: invert the Galerkin matrix
        synth, anal = kernels.basis_matrices(spec.K, spec.M)
        g = 1.0 + 2.0 * st.mu * (synth @ (st.mult * x.coeffs))
        G = anal @ (g[:, None] * synth)
        return np.ascontiguousarray((np.linalg.inv(G) / st.mult[:, None]).T)
    eye = np.eye(spec.size)
    return np.ascontiguousarray(
        [problem.right_inverse(x, GradedElement._wrap(e.copy(), spec)).coeffs for e in eye])


def estimate_constants(problem: TameProblem, trials: int = 100,
                       levels: Optional[int] = None, seed: int = 0,
                       margin: float = 0.1) -> BoundSeq:
    """Empirical tame constants ``(1 + margin) * max ||R(x, v)||_n / ||v||_{n+d}``.

    Each of the ``trials`` base points is probed with every unit mode and
    one random target (see :data:`ESTIMATION_DISTRIBUTION`). Levels above
    ``min(levels, N - d)`` cannot be estimated and repeat the last
    estimated value; they are exempt from every bound check anyway.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    spec, d = problem.spec, problem.d
    top = spec.N - d if levels is None else min(levels, spec.N - d)
    if top < 0:
        raise LevelRangeError("no level can be estimated")
    rng = np.random.default_rng(seed)
    cos_tab, sin_tab = spec.tables()
    unit_norms = kernels.level_norms_batch(np.eye(spec.size), cos_tab, sin_tab, spec.N)
    worst = np.zeros(top + 1)
    for trial in range(trials):
        x = sample_base_point(problem, rng)
        un = kernels.level_norms_batch(_inverse_columns(problem, x), cos_tab, sin_tab, spec.N)
        worst = np.maximum(worst, (un[:, :top + 1] / unit_norms[:, d:d + top + 1]).max(axis=0))
        v = _sample_direction(spec, rng, trial)
        vn = v.norms()
        if vn[d] > 1e-300:
            ratio = problem.right_inverse(x, v).norms()[:top + 1] / vn[d:d + top + 1]
            worst = np.maximum(worst, ratio)
    if not np.all(worst > 0):
        raise DegenerateSampling(f"{problem.name}: all sampled targets vanished")
    c = list((1.0 + margin) * worst)
    c += [c[-1]] * (spec.N + 1 - len(c))
    return BoundSeq(tuple(c))

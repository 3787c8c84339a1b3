"""Continuation solver for ``f(x) = y`` driven by tame right-inverse steps.

Starting from ``x = 0, t = 0`` the solver follows ``f(x(t)) ~ t*y``: at each
accepted state it takes ``h = R(x, y)`` and looks for a step ``r`` (by
halving) with

    ||f(x + r h) - f(x) - r y||_n <= r * eps      for every monitored n.

Accepted defects add up by the triangle inequality, so after reaching ``t``
the residual ``||f(x) - t y||_n`` stays below ``t * eps``. Since every ``h``
lies in the box ``s_n = c_n ||y||_{n+d}``, ``x(t)`` stays in ``t`` times
that box.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from nme import kernels
from nme.errors import (GuardExit, MaxSteps, NewtonDivergence, StepUnderflow,
                        TameViolation)
from nme.graded_space import (BoundSeq, GradedElement, distance_n,
                              shift_levels)
from nme.tame_problems import TameProblem


def _norms_upto(x: GradedElement, top: int) -> np.ndarray:
    # cheaper than x.norms() when only the low levels are monitored
    if x._norms is not None or top >= x.spec.N:
        return x.norms()[:top + 1]
    cos_tab, sin_tab = x.spec.tables()
    return kernels.level_norms(x.coeffs, cos_tab, sin_tab, top)


@dataclass(frozen=True)
class ContinuationConfig:
    eps: float = 1e-3
    r0: float = 0.125
    r_min: float = 2.0 ** -20
    growth: float = 2.0
    max_steps: int = 1_000_000
    monitored_levels: Optional[int] = None  # highest monitored level; None -> N
    tame_slack: float = 1e-6

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 < self.r_min < self.r0 <= 1:
            raise ValueError("need 0 < r_min < r0 <= 1")
        if self.growth < 1:
            raise ValueError("growth must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.tame_slack < 0:
            raise ValueError("tame_slack must be >= 0")

    def top_level(self, problem: TameProblem) -> int:
        N = problem.spec.N
        if self.monitored_levels is None:
            return N
        if not 0 <= self.monitored_levels <= N:
            raise ValueError(f"monitored_levels must lie in 0..{N}")
        return self.monitored_levels


@dataclass(frozen=True)
class StepRecord:
    """One attempted step.

    ``t`` and ``r`` describe the attempt; ``resid``, ``norm`` and ``bound``
    describe the iterate after it (at ``t + r`` if accepted, else at ``t``).
    """

    t: float
    r: float
    accepted: bool
    defect: tuple
    resid: tuple
    norm: tuple
    bound: tuple
    box_ok: bool = True
    cause: str = ""

    @property
    def t_after(self) -> float:
        return self.t + self.r if self.accepted else self.t


_CAUSE_CODES = {"": 0, "defect": 1, "guard": 2}
_CAUSES = {v: k for k, v in _CAUSE_CODES.items()}


class ContinuationTrace:
    """Column store of attempted steps; :class:`StepRecord` views on demand.

    Arrays: ``t, r`` (attempts), ``accepted, box_ok`` (bool), ``cause``
    (0 none, 1 defect, 2 guard) and the ``(steps, levels + 1)`` matrices
    ``defect, resid, norm, bound``.
    """

    def __init__(self, levels, t=(), r=(), accepted=(), defect=None, resid=None,
                 norm=None, bound=None, box_ok=None, cause=None):
        self.levels = int(levels)
        self.t = np.asarray(t, dtype=float)
        self.r = np.asarray(r, dtype=float)
        self.accepted_mask = np.asarray(accepted, dtype=bool)
        size, width = self.t.size, self.levels + 1

        def mat(a):
            return np.zeros((size, width)) if a is None else np.asarray(a, dtype=float).reshape(size, width)
        self.defect, self.resid = mat(defect), mat(resid)
        self.norm, self.bound = mat(norm), mat(bound)
        self.box_ok = np.ones(size, bool) if box_ok is None else np.asarray(box_ok, dtype=bool)
        self.cause = np.zeros(size, np.int8) if cause is None else np.asarray(cause, dtype=np.int8)
        self._records = None

    @classmethod
    def from_records(cls, levels: int, records) -> "ContinuationTrace":
        records = list(records)
        if not records:
            return cls(levels)
        return cls(levels, [rec.t for rec in records], [rec.r for rec in records],
                   [rec.accepted for rec in records],
                   [rec.defect for rec in records], [rec.resid for rec in records],
                   [rec.norm for rec in records], [rec.bound for rec in records],
                   [rec.box_ok for rec in records],
                   [_CAUSE_CODES[rec.cause] for rec in records])

    def __len__(self):
        return self.t.size

    @property
    def t_after(self) -> np.ndarray:
        return np.where(self.accepted_mask, self.t + self.r, self.t)

    @property
    def records(self) -> List[StepRecord]:
        if self._records is None:
            self._records = [self._record(i) for i in range(len(self))]
        return self._records

    def _record(self, i: int) -> StepRecord:
        return StepRecord(float(self.t[i]), float(self.r[i]), bool(self.accepted_mask[i]),
                          tuple(self.defect[i].tolist()), tuple(self.resid[i].tolist()),
                          tuple(self.norm[i].tolist()), tuple(self.bound[i].tolist()),
                          bool(self.box_ok[i]), _CAUSES[int(self.cause[i])])

    def __getitem__(self, i: int) -> StepRecord:
        return self.records[i] if self._records is not None else self._record(range(len(self))[i])

    def accepted(self) -> List[StepRecord]:
        return [self._record(i) for i in np.nonzero(self.accepted_mask)[0]]

    @property
    def n_accepted(self) -> int:
        return int(self.accepted_mask.sum())

    @property
    def box_violations(self) -> List[int]:
        return [int(i) for i in np.nonzero(~self.box_ok)[0]]

    def columns(self) -> List[str]:
        idx = range(self.levels + 1)
        cols = ["t", "r", "accepted"]
        for name in ("defect", "resid", "norm", "bound"):
            cols += [f"{name}_{n}" for n in idx]
        return cols

    def rows(self):
        for i in range(len(self)):
            yield ([float(self.t[i]), float(self.r[i]), int(self.accepted_mask[i])]
                   + self.defect[i].tolist() + self.resid[i].tolist()
                   + self.norm[i].tolist() + self.bound[i].tolist())

    def to_csv(self, fh=None) -> Optional[str]:
        """Write the trace as CSV (17 significant digits); returns text if no file."""
        out = io.StringIO() if fh is None else fh
        w = csv.writer(out, lineterminator="\n")
        w.writerow(self.columns())
        for row in self.rows():
            w.writerow([_fmt(v) for v in row])
        return out.getvalue() if fh is None else None

    def audit(self, eps: float, round_off: float = 1e-12) -> List[str]:
        """Violations of the per-step and accumulated residual estimates."""
        problems = []
        for i in np.nonzero(np.diff(self.t) < 0)[0]:
            problems.append(f"record {i + 1}: t decreased")
        acc = np.nonzero(self.accepted_mask)[0]
        for i in acc[np.diff(self.t[acc], prepend=-math.inf) <= 0]:
            problems.append(f"record {i}: t not increasing across acceptances")
        bad_d = self.defect[acc] > (self.r[acc] * eps)[:, None]
        for i, n in zip(*np.nonzero(bad_d)):
            problems.append(f"record {acc[i]}: defect_{n}={self.defect[acc[i], n]:.3e} > r*eps")
        bad_r = self.resid[acc] > (self.t_after[acc] * eps + round_off)[:, None]
        for i, n in zip(*np.nonzero(bad_r)):
            problems.append(f"record {acc[i]}: resid_{n}={self.resid[acc[i], n]:.3e} > t*eps")
        return problems


def _fmt(v):
    if isinstance(v, (bool, int, np.integer)):
        return str(int(v))
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return format(float(v), ".17g")


@dataclass
class SolveOutcome:
    x_final: GradedElement
    trace: ContinuationTrace
    certified_residual: tuple
    certified_bound: tuple  # None at exempt levels
    t_final: float = 1.0

    @property
    def success(self) -> bool:
        return all(self.certified_residual) and all(b for b in self.certified_bound if b is not None)

    def to_dict(self) -> dict:
        return {"x_final": self.x_final.to_dict(),
                "t_final": self.t_final,
                "steps": len(self.trace),
                "accepted_steps": self.trace.n_accepted,
                "certified_residual": list(self.certified_residual),
                "certified_bound": list(self.certified_bound),
                "box_violations": self.trace.box_violations}


@dataclass(frozen=True)
class StepCheck:
    defects: tuple
    accepted: bool
    cause: str
    x_new: Optional[GradedElement] = None
    f_new: Optional[GradedElement] = None


def step_acceptable(problem: TameProblem, x: GradedElement, h: GradedElement,
                    ybar: GradedElement, r: float, eps: float, levels: int,
                    fx: Optional[GradedElement] = None) -> StepCheck:
    """Accept iff ``||f(x + r h) - f(x) - r ybar||_n <= r eps`` for ``n <= levels``.

    Leaving the guarded domain is a rejection with cause ``"guard"``.
    """
    x_new = x + r * h
    if not problem.domain_guard(x_new):
        return StepCheck((math.nan,) * (levels + 1), False, "guard", x_new)
    fx = problem.eval(x) if fx is None else fx
    f_new = problem.eval(x_new)
    defect = _norms_upto(f_new - fx - r * ybar, levels)
    ok = bool(np.all(defect <= r * eps))
    return StepCheck(tuple(float(v) for v in defect), ok, "" if ok else "defect",
                     x_new, f_new)


def _source_box(problem: TameProblem, ynorms: np.ndarray) -> np.ndarray:
    # s_n = c_n |y|_{n+d}; levels above N - d are unbounded (exempt)
    c = problem.require_c()
    shifted = shift_levels(BoundSeq(tuple(ynorms)), problem.d)
    s = np.full(problem.spec.N + 1, math.inf)
    for n in range(len(shifted)):
        s[n] = c[n] * shifted[n]
    return s


_ERRORS = {1: StepUnderflow, 2: GuardExit, 3: MaxSteps, 4: TameViolation}


def solve(problem: TameProblem, y: GradedElement,
          config: Optional[ContinuationConfig] = None,
          engine: str = "auto") -> SolveOutcome:
    """Follow ``t -> t*y`` from ``x = 0`` to ``t = 1``.

    ``engine="auto"`` runs the compiled loop when the problem declares a
    :class:`~nme.tame_problems.MultiplierQuadratic` structure and the
    extension is built, and the generic Python loop otherwise.
    """
    config = ContinuationConfig() if config is None else config
    if engine not in ("auto", "compiled", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    compiled = (problem.structure is not None
                and kernels.continuation_engine is not None)
    if engine == "compiled" and not compiled:
        raise RuntimeError("compiled engine unavailable for this problem/backend")
    if compiled and engine != "python":
        x, trace, t = _solve_compiled(problem, y, config)
    else:
        x, trace, t = _solve_python(problem, y, config)
    return _certify(problem, y, config, x, trace, t)


def _certify(problem, y, config, x, trace, t):
    top = config.top_level(problem)
    s = _source_box(problem, y.norms())
    resid = _norms_upto(problem.eval(x) - y, top)
    cert_res = tuple(bool(v <= config.eps * (1.0 + 1e-9)) for v in resid)
    xn = x.norms()
    cert_bound = tuple(bool(xn[n] <= s[n] * (1.0 + config.tame_slack))
                       if math.isfinite(s[n]) else None for n in problem.spec.levels)
    return SolveOutcome(x, trace, cert_res, cert_bound, t)


def _solve_compiled(problem, y, config):
    spec = problem.spec
    st = problem.structure
    top = config.top_level(problem)
    s = _source_box(problem, y.norms())
    cos_tab, sin_tab = spec.tables()
    status, t, x_arr, _, h_norms, buf = kernels.continuation_engine(
        np.ascontiguousarray(st.mult, dtype=float), float(st.mu),
        np.ascontiguousarray(y.coeffs), np.ascontiguousarray(s),
        cos_tab, sin_tab, spec.N, top, config.eps, config.r0, config.r_min,
        config.growth, config.max_steps, config.tame_slack, st.guard_floor)
    n = buf.size
    trace = ContinuationTrace(top, buf.t[:n], buf.r[:n], buf.accepted[:n],
                              buf.defect[:n], buf.resid[:n], buf.norm[:n],
                              buf.bound[:n], buf.box_ok[:n], buf.cause[:n])
    if status == 5:
        raise np.linalg.LinAlgError("singular right-inverse system")
    if status:
        if status == 4:
            msg = f"step direction leaves the tame box at t={t:.6g}: norms {h_norms} vs bound {s}"
        elif status == 3:
            msg = f"{config.max_steps} attempts used, t={t:.6g}"
        else:
            last = _CAUSES[int(trace.cause[-1])] if len(trace) else ""
            msg = (f"step below r_min={config.r_min:.3e} at t={t:.6g} "
                   f"(last rejection: {last})")
        raise _ERRORS[status](msg, trace, t)
    return GradedElement(x_arr, spec), trace, t


def _solve_python(problem, y, config):
    spec = problem.spec
    top = config.top_level(problem)
    eps = config.eps
    s = _source_box(problem, y.norms())
    s_mon = s[:top + 1]
    slack = config.tame_slack
    records = []

    def trace():
        return ContinuationTrace.from_records(top, records)

    x = GradedElement.zero(spec)
    problem.guard(x)
    fx = problem.eval(x)
    t = 0.0
    resid = _norms_upto(fx, top)
    xnorm = np.zeros(top + 1)
    r_trial = config.r0
    attempts = 0

    with np.errstate(invalid="ignore"):
        while t < 1.0:
            h = problem.right_inverse(x, y)
            if not np.all(h.norms() <= s * (1.0 + slack)):
                raise TameViolation(
                    f"step direction leaves the tame box at t={t:.6g}: "
                    f"norms {h.norms()} vs bound {s}", trace(), t)
            last_cause = ""
            while True:
                attempts += 1
                if attempts > config.max_steps:
                    raise MaxSteps(f"{config.max_steps} attempts used, t={t:.6g}", trace(), t)
                if r_trial < config.r_min:
                    msg = (f"step below r_min={config.r_min:.3e} at t={t:.6g} "
                           f"(last rejection: {last_cause})")
                    if last_cause == "guard":
                        raise GuardExit(msg, trace(), t)
                    raise StepUnderflow(msg, trace(), t)
                final = r_trial >= 1.0 - t
                r = 1.0 - t if final else r_trial
                chk = step_acceptable(problem, x, h, y, r, eps, top, fx)
                if chk.accepted:
                    t_new = 1.0 if final else t + r
                    x, fx = chk.x_new, chk.f_new
                    resid = _norms_upto(fx - t_new * y, top)
                    xnorm = _norms_upto(x, top)
                    bound = t_new * s_mon
                    box_ok = bool(np.all(xnorm <= bound * (1.0 + slack)))
                    records.append(StepRecord(
                        t, r, True, chk.defects, tuple(resid), tuple(xnorm),
                        tuple(bound), box_ok))
                    t = t_new
                    r_trial = r * config.growth
                    break
                last_cause = chk.cause
                records.append(StepRecord(
                    t, r, False, chk.defects, tuple(resid), tuple(xnorm),
                    tuple(t * s_mon), True, chk.cause))
                r_trial = r / 2.0
    return x, trace(), t


@dataclass(frozen=True)
class BoundReport:
    ratios: tuple            # ||x||_n / (c_n ||y||_{n+d}); None at exempt levels
    bound_ok: tuple
    residual: tuple          # d_n(y, {f(x)}) at levels 0..N
    residual_ok: tuple
    exempt_levels: tuple
    c_source: str
    passed: bool

    def to_dict(self) -> dict:
        return {"ratios": list(self.ratios), "bound_ok": list(self.bound_ok),
                "residual": list(self.residual), "residual_ok": list(self.residual_ok),
                "exempt_levels": list(self.exempt_levels),
                "c_source": self.c_source, "pass": self.passed}


def verify_theorem_bounds(outcome: SolveOutcome, problem: TameProblem,
                          y: GradedElement, slack: float = 0.0,
                          eps: Optional[float] = None,
                          levels: Optional[int] = None) -> BoundReport:
    """Check ``||x||_n <= c_n ||y||_{n+d} (1 + slack)`` and the residual.

    The residual is re-measured as the level-``n`` distance from ``y`` to the
    one-point set ``{f(x)}`` for ``n <= levels`` (default: all levels).
    """
    spec = problem.spec
    c = problem.require_c()
    d = problem.d
    x = outcome.x_final
    xn, yn = x.norms(), y.norms()
    top = spec.N if levels is None else levels
    ratios, ok, exempt = [], [], []
    for n in spec.levels:
        if n + d > spec.N:
            ratios.append(None)
            ok.append(None)
            exempt.append(n)
            continue
        bound = c[n] * yn[n + d]
        ratios.append(0.0 if xn[n] == 0 else (math.inf if bound == 0 else float(xn[n] / bound)))
        ok.append(bool(xn[n] <= bound * (1.0 + slack)))
    fx = problem.eval(x)
    resid = tuple(distance_n(y, [fx], n) for n in range(top + 1))
    if eps is None:
        res_ok = tuple(True for _ in resid)
    else:
        res_ok = tuple(bool(r <= eps) for r in resid)
    passed = all(v for v in ok if v is not None) and all(res_ok)
    return BoundReport(tuple(ratios), tuple(ok), resid, res_ok, tuple(exempt),
                       problem.c_source, passed)


def dense_newton_oracle(problem: TameProblem, y: GradedElement, tol: float = 1e-12,
                        max_iter: int = 50) -> GradedElement:
    """Damped Newton on the full coefficient system, Jacobian from ``dderiv``.

    Independent of the continuation path and of ``right_inverse``; meant for
    cross-checking ``solve`` only.
    """
    spec = problem.spec
    basis = [GradedElement._wrap(col.copy(), spec) for col in np.eye(spec.size)]
    x = GradedElement.zero(spec)
    F = problem.eval(x) - y
    for _ in range(max_iter + 1):
        if F.norms()[0] <= tol:
            return x
        J = np.column_stack([problem.dderiv(x, e).coeffs for e in basis])
        delta = np.linalg.solve(J, -F.coeffs)
        merit = np.linalg.norm(F.coeffs)
        lam = 1.0
        while lam > 1e-10:
            cand = GradedElement._wrap(x.coeffs + lam * delta, spec)
            if problem.domain_guard(cand):
                F_c = problem.eval(cand) - y
                if np.linalg.norm(F_c.coeffs) < (1.0 - 1e-4 * lam) * merit:
                    x, F = cand, F_c
                    break
            lam *= 0.5
        else:
            raise NewtonDivergence("line search failed")
    raise NewtonDivergence(f"no convergence in {max_iter} iterations")

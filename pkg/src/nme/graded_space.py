"""Truncated compactly graded space of real trigonometric polynomials.

Elements are trigonometric polynomials of degree at most ``K`` on the
circle ``[0, 2*pi)``. The grading is the family of discrete C^n norms

    ||x||_n = max_{0 <= j <= n} max_m |x^{(j)}(theta_m)|,   n = 0..N,

with the sup taken over an equispaced grid of ``M = q*(2K+1)`` points and
derivatives computed exactly on the Fourier coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from nme import kernels
from nme.errors import (EmptySetError, LengthMismatchError, LevelRangeError,
                        SpecMismatchError)

PERIOD = 2.0 * math.pi


@dataclass(frozen=True)
class GradingSpec:
    K: int
    N: int
    q: int = 4

    def __post_init__(self):
        for name in ("K", "N", "q"):
            if not isinstance(getattr(self, name), (int, np.integer)):
                raise TypeError(f"{name} must be an integer")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.N < 0:
            raise ValueError("N must be >= 0")
        if self.q < 4:
            raise ValueError("q must be >= 4")

    @property
    def period(self) -> float:
        return PERIOD

    @property
    def M(self) -> int:
        return self.q * (2 * self.K + 1)

    @property
    def size(self) -> int:
        return 2 * self.K + 1

    @property
    def levels(self) -> range:
        return range(self.N + 1)

    def grid(self) -> np.ndarray:
        return PERIOD * np.arange(self.M) / self.M

    def tables(self):
        return kernels.tables(self.K, self.M)

    def check_level(self, n: int) -> None:
        if not 0 <= n <= self.N:
            raise LevelRangeError(f"level {n} outside 0..{self.N}")


class GradedElement:
    """Immutable trigonometric polynomial ``a_0 + sum a_k cos k + b_k sin k``.

    ``coeffs`` is laid out as ``[a_0, a_1..a_K, b_1..b_K]``.
    """

    __slots__ = ("coeffs", "spec", "_norms", "_values")

    def __init__(self, coeffs, spec: GradingSpec):
        c = np.array(coeffs, dtype=float)
        if c.shape != (spec.size,):
            raise LengthMismatchError(
                f"expected {spec.size} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.flags.writeable = False
        self.coeffs = c
        self.spec = spec
        self._norms = None
        self._values = None

    @classmethod
    def _wrap(cls, c: np.ndarray, spec: GradingSpec) -> "GradedElement":
        # trusted fast path: c is a fresh float array of the right shape
        obj = cls.__new__(cls)
        c.flags.writeable = False
        obj.coeffs = c
        obj.spec = spec
        obj._norms = None
        obj._values = None
        return obj

    # constructors

    @classmethod
    def zero(cls, spec):
        return cls._wrap(np.zeros(spec.size), spec)

    @classmethod
    def constant(cls, spec, value):
        c = np.zeros(spec.size)
        c[0] = value
        return cls._wrap(c, spec)

    @classmethod
    def mode(cls, spec, kind: str, k: int, amp: float = 1.0):
        """``amp*sin(k theta)`` or ``amp*cos(k theta)``."""
        if not 0 <= k <= spec.K:
            raise ValueError(f"mode {k} outside 0..{spec.K}")
        c = np.zeros(spec.size)
        if kind == "cos":
            c[k] = amp
        elif kind == "sin":
            if k == 0:
                raise ValueError("sin mode needs k >= 1")
            c[spec.K + k] = amp
        else:
            raise ValueError(f"unknown mode kind {kind!r}")
        return cls._wrap(c, spec)

    @classmethod
    def from_grid(cls, spec, values):
        """Project grid values onto degree ``K`` (discrete Fourier projection)."""
        v = np.ascontiguousarray(values, dtype=float)
        if v.shape != (spec.M,):
            raise LengthMismatchError(f"expected {spec.M} grid values")
        cos_tab, sin_tab = spec.tables()
        return cls._wrap(kernels.analyze(v, cos_tab, sin_tab), spec)

    @classmethod
    def from_function(cls, spec, func):
        return cls.from_grid(spec, func(spec.grid()))

    # views

    @property
    def a(self) -> np.ndarray:
        return self.coeffs[:self.spec.K + 1]

    @property
    def b(self) -> np.ndarray:
        return self.coeffs[self.spec.K + 1:]

    def grid_values(self) -> np.ndarray:
        if self._values is None:
            cos_tab, sin_tab = self.spec.tables()
            v = kernels.synthesize(self.coeffs, cos_tab, sin_tab)
            v.flags.writeable = False
            self._values = v
        return self._values

    def norms(self) -> np.ndarray:
        """All levels ``[||x||_0, ..., ||x||_N]`` (cached)."""
        if self._norms is None:
            cos_tab, sin_tab = self.spec.tables()
            nv = kernels.level_norms(self.coeffs, cos_tab, sin_tab, self.spec.N)
            nv.flags.writeable = False
            self._norms = nv
        return self._norms

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    # arithmetic

    def _check(self, other):
        if not isinstance(other, GradedElement):
            return NotImplemented
        if other.spec != self.spec:
            raise SpecMismatchError(f"{self.spec} vs {other.spec}")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return GradedElement._wrap(self.coeffs + other.coeffs, self.spec)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return GradedElement._wrap(self.coeffs - other.coeffs, self.spec)

    def __neg__(self):
        return GradedElement._wrap(-self.coeffs, self.spec)

    def __mul__(self, lam):
        if isinstance(lam, GradedElement):
            return NotImplemented
        return GradedElement._wrap(self.coeffs * float(lam), self.spec)

    __rmul__ = __mul__

    def __truediv__(self, lam):
        return GradedElement._wrap(self.coeffs / float(lam), self.spec)

    def allclose(self, other, atol=1e-12, rtol=0.0) -> bool:
        self._check(other)
        return bool(np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=rtol))

    def __repr__(self):
        return f"GradedElement(K={self.spec.K}, coeffs={self.coeffs!r})"

    # serialization

    def to_dict(self) -> dict:
        return {"K": self.spec.K, "a": [float(v) for v in self.a],
                "b": [float(v) for v in self.b]}

    @classmethod
    def from_dict(cls, data: dict, spec: GradingSpec):
        if int(data["K"]) != spec.K:
            raise SpecMismatchError(f"element has K={data['K']}, spec has K={spec.K}")
        a, b = list(data["a"]), list(data["b"])
        if len(a) != spec.K + 1 or len(b) != spec.K:
            raise LengthMismatchError("coefficient lists do not match K")
        return cls(a + b, spec)


def _float_or_inf(v):
    if isinstance(v, str):
        if v.lower() in ("inf", "+inf", "infinity"):
            return math.inf
        raise ValueError(f"unknown bound sentinel {v!r}")
    return float(v)


@dataclass(frozen=True)
class BoundSeq:
    """Truncated element of R_+^infty; ``inf`` marks an unbounded level."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        for v in vals:
            if math.isnan(v) or v < 0:
                raise ValueError(f"bound entries must be >= 0, got {v}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def of(cls, values: Iterable[float]) -> "BoundSeq":
        return cls(tuple(values))

    @classmethod
    def constant(cls, length: int, value: float) -> "BoundSeq":
        return cls((value,) * length)

    @classmethod
    def ones(cls, length: int) -> "BoundSeq":
        return cls.constant(length, 1.0)

    @classmethod
    def zeros(cls, length: int) -> "BoundSeq":
        return cls.constant(length, 0.0)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    def to_json(self) -> list:
        return ["inf" if math.isinf(v) else v for v in self.values]

    @classmethod
    def from_json(cls, data: Sequence) -> "BoundSeq":
        return cls(tuple(_float_or_inf(v) for v in data))


def unit_ball(spec: GradingSpec, n: int) -> BoundSeq:
    """Closed unit ball of level ``n`` as a box: 1 at ``n``, unbounded elsewhere."""
    spec.check_level(n)
    return BoundSeq(tuple(1.0 if i == n else math.inf for i in spec.levels))


def derivative(x: GradedElement, j: int) -> GradedElement:
    x.spec.check_level(j)
    K = x.spec.K
    k = np.arange(K + 1, dtype=float)
    c = x.a - 1j * np.concatenate([[0.0], x.b])
    c = c * (1j * k) ** j
    if j > 0:
        c[0] = 0.0
    return GradedElement._wrap(np.concatenate([c.real, -c.imag[1:]]), x.spec)


def norm(x: GradedElement, n: int) -> float:
    x.spec.check_level(n)
    return float(x.norms()[n])


def metric(x: GradedElement, y: GradedElement) -> float:
    """Max-form Frechet metric over levels ``0..N``.

    Terms for levels above ``N`` are each below :func:`metric_slack`.
    """
    nv = (x - y).norms()
    return float(np.max(2.0 ** -np.arange(nv.size) * nv / (1.0 + nv)))


def metric_slack(spec: GradingSpec) -> float:
    return 2.0 ** -(spec.N + 1)


def box_contains(x: GradedElement, s: BoundSeq, slack: float = 0.0) -> bool:
    if len(s) != x.spec.N + 1:
        raise LengthMismatchError(f"bound has {len(s)} levels, space has {x.spec.N + 1}")
    return bool(np.all(x.norms() <= s.as_array() * (1.0 + slack)))


def distance_n(x: GradedElement, A: Sequence[GradedElement], n: int) -> float:
    if len(A) == 0:
        raise EmptySetError("distance to an empty set")
    x.spec.check_level(n)
    return min(norm(x - a, n) for a in A)


def bound_product(u: BoundSeq, s: BoundSeq) -> BoundSeq:
    if len(u) != len(s):
        raise LengthMismatchError(f"lengths {len(u)} and {len(s)} differ")
    # 0 * inf counts as 0: a zero weight pins the level regardless of s
    return BoundSeq(tuple(0.0 if (a == 0 or b == 0) else a * b for a, b in zip(u, s)))


def shift_levels(s: BoundSeq, d: int) -> BoundSeq:
    if d < 0 or d > len(s) - 1:
        raise LevelRangeError(f"shift {d} outside 0..{len(s) - 1}")
    return BoundSeq(s.values[d:])


def random_element(spec: GradingSpec, rng: np.random.Generator,
                   decay: float = 0.0, scale: float = 1.0) -> GradedElement:
    """Gaussian coefficients with standard deviation ``scale/(1+k)**decay``."""
    k = np.arange(spec.K + 1, dtype=float)
    w = scale / (1.0 + k) ** decay
    c = np.concatenate([rng.standard_normal(spec.K + 1) * w,
                        rng.standard_normal(spec.K) * w[1:]])
    return GradedElement._wrap(c, spec)

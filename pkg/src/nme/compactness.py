"""Finite counterparts of the compactness criterion and membership-by-distances.

At finite ``K`` every norm is equivalent, so compactness here is modelled,
not inherited: ``extract_convergent`` exercises the diagonal argument
(nested index sets refined one level at a time) on a finite scan, and
reports failure as inconclusive rather than as a counterexample.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from nme import kernels
from nme.errors import (BoundsViolation, EmptySetError, ExtractionExhausted,
                        LevelRangeError)
from nme.graded_space import BoundSeq, GradedElement, distance_n


@dataclass(frozen=True)
class SequenceSource:
    """Deterministic sequence ``k -> x_k`` with optional declared bounds."""

    generator: Callable[[int], GradedElement]
    declared_bounds: Optional[BoundSeq] = None

    def __call__(self, k: int) -> GradedElement:
        return self.generator(k)

    def take(self, count: int) -> list:
        return [self.generator(k) for k in range(count)]


@dataclass(frozen=True)
class ExtractionResult:
    indices: tuple
    per_level_tol: tuple

    def to_dict(self) -> dict:
        return {"indices": list(self.indices), "per_level_tol": list(self.per_level_tol)}


def _coeff_matrix(elements):
    return np.ascontiguousarray(np.stack([x.coeffs for x in elements]))


def sup_norms(source: SequenceSource, count: int) -> BoundSeq:
    """Per-level sup of ``||x_k||_n`` over ``k < count``.

    Raises :class:`BoundsViolation` if the source declares bounds and the
    sample exceeds them at some level.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    xs = source.take(count)
    spec = xs[0].spec
    cos_tab, sin_tab = spec.tables()
    sup = kernels.level_norms_batch(_coeff_matrix(xs), cos_tab, sin_tab, spec.N).max(axis=0)
    result = BoundSeq(tuple(sup))
    if source.declared_bounds is not None:
        declared = source.declared_bounds.as_array()
        over = np.nonzero(sup > declared * (1.0 + 1e-12))[0]
        if over.size:
            n = int(over[0])
            raise BoundsViolation(
                f"sample norm {sup[n]:.6g} exceeds declared bound {declared[n]:.6g} at level {n}")
    return result


def _pairwise_level_distances(elements, level):
    # D[i, j] = ||x_i - x_j||_level for all pairs, computed in one batch
    spec = elements[0].spec
    C = _coeff_matrix(elements)
    P = len(elements)
    iu, ju = np.triu_indices(P, k=1)
    D = np.zeros((P, P))
    if iu.size:
        cos_tab, sin_tab = spec.tables()
        diffs = np.ascontiguousarray(C[iu] - C[ju])
        vals = kernels.level_norms_batch(diffs, cos_tab, sin_tab, level)[:, level]
        D[iu, ju] = vals
        D[ju, iu] = vals
    return D


def extract_convergent(source: SequenceSource, levels: int, tol: float,
                       want: int, scan_limit: int) -> ExtractionResult:
    """Diagonal extraction of a subsequence that is Cauchy within ``2*tol``.

    Stage ``n`` keeps the indices of the current pool that lie in the
    most populous ``tol``-ball (centres drawn from the pool, ties to the
    smallest index) under ``||.||_n``. The returned ``k_i`` is taken from
    the stage-``min(i, levels)`` pool with ``k_i > k_{i-1}``, so for every
    ``n <= levels`` all ``k_i, k_j`` with ``i, j >= n`` share a stage-``n``
    ball.
    """
    if want < 2:
        raise ValueError("want must be >= 2")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if scan_limit < want:
        raise ExtractionExhausted(f"scan_limit {scan_limit} < want {want}")
    xs = source.take(scan_limit)
    spec = xs[0].spec
    if not 0 <= levels <= spec.N:
        raise LevelRangeError(f"levels {levels} outside 0..{spec.N}")

    pools = []
    pool = np.arange(scan_limit)
    for n in range(levels + 1):
        D = _pairwise_level_distances([xs[i] for i in pool], n)
        counts = (D <= tol).sum(axis=1)
        centre = int(np.argmax(counts))
        pool = pool[D[centre] <= tol]
        pools.append(pool)

    indices = []
    for i in range(want):
        stage = pools[min(i, levels)]
        later = stage[stage > indices[-1]] if indices else stage
        if later.size == 0:
            raise ExtractionExhausted(
                f"found {len(indices)} of {want} indices within scan_limit={scan_limit}")
        indices.append(int(later[0]))

    # achieved diameter at level n over positions i, j >= n
    achieved = []
    for n in range(levels + 1):
        tail = [xs[k] for k in indices[n:]]
        if len(tail) < 2:
            achieved.append(0.0)
            continue
        achieved.append(float(_pairwise_level_distances(tail, n).max()))
    return ExtractionResult(tuple(indices), tuple(achieved))


def membership_via_distances(x: GradedElement, sample: Sequence[GradedElement],
                             tol: float) -> bool:
    """True iff ``d_n(x, sample) <= tol`` at every level ``0..N``."""
    if len(sample) == 0:
        raise EmptySetError("membership test against an empty sample")
    return all(distance_n(x, sample, n) <= tol for n in x.spec.levels)

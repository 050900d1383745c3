"""Finite hypothesis classes over an integer domain, dichotomies and nets.

The domain is always ``X = {0, ..., domain_size - 1}``.  A class is stored as a
dense ``(k, domain_size)`` table of 0/1 labels whose row order is the canonical
hypothesis order used for every tie-break in the package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import BadDistribution, EmptyRestriction, TooLarge

KINDS = ("thresholds", "point", "explicit")

# exhaustive subset searches (growth function, VC dimension) are limited to this
MAX_EXHAUSTIVE_DOMAIN = 20


@dataclass(frozen=True)
class LabeledSample:
    """An ordered sample ``((x_1, y_1), ..., (x_n, y_n))``; duplicates allowed."""

    points: tuple
    labels: tuple

    def __post_init__(self):
        points = tuple(int(x) for x in self.points)
        labels = tuple(int(y) for y in self.labels)
        if len(points) != len(labels):
            raise ValueError("points and labels must have equal length")
        if not points:
            raise ValueError("a sample needs at least one example")
        if any(y not in (0, 1) for y in labels):
            raise ValueError("labels must be 0 or 1")
        if any(x < 0 for x in points):
            raise ValueError("points must be non-negative domain indices")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[int]]) -> "LabeledSample":
        pairs = [tuple(p) for p in pairs]
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def pairs(self):
        return list(zip(self.points, self.labels))

    @cached_property
    def xs(self) -> np.ndarray:
        arr = np.asarray(self.points, dtype=np.intp)
        arr.flags.writeable = False
        return arr

    @cached_property
    def ys(self) -> np.ndarray:
        arr = np.asarray(self.labels, dtype=np.int8)
        arr.flags.writeable = False
        return arr

    def subsample(self, indices: Iterable[int]) -> "LabeledSample":
        indices = list(indices)
        return LabeledSample(
            tuple(self.points[i] for i in indices), tuple(self.labels[i] for i in indices)
        )

    def replace(self, index: int, point: int, label: int) -> "LabeledSample":
        points = list(self.points)
        labels = list(self.labels)
        points[index] = point
        labels[index] = label
        return LabeledSample(tuple(points), tuple(labels))

    def relabel(self, row) -> "LabeledSample":
        """The sample with every label replaced by ``row[x]``."""
        return LabeledSample(self.points, tuple(int(row[x]) for x in self.points))

    def is_neighbor(self, other: "LabeledSample") -> bool:
        if self.n != other.n:
            return False
        diff = sum(p != q for p, q in zip(self.pairs, other.pairs))
        return diff == 1

    def check_domain(self, domain_size: int) -> None:
        if max(self.points) >= domain_size:
            raise ValueError(
                f"point {max(self.points)} outside domain of size {domain_size}"
            )


@dataclass(frozen=True)
class Dichotomy:
    """One labeling pattern of a restriction set.

    ``labels`` is indexed like the restriction sequence; ``row`` is the full
    domain labeling of ``representative``, the smallest hypothesis index that
    realizes the pattern.
    """

    labels: tuple
    representative: int
    row: tuple

    def __call__(self, x: int) -> int:
        return self.row[x]

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.row, dtype=float)


@dataclass(frozen=True)
class HypothesisClass:
    kind: str
    domain_size: int
    vectors: tuple = ()
    vc_dim: int | None = None
    _memo: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown class kind {self.kind!r}")
        if self.domain_size < 1:
            raise ValueError("domain_size must be positive")
        if self.kind == "explicit":
            vectors = tuple(tuple(int(b) for b in v) for v in self.vectors)
            if not vectors:
                raise ValueError("explicit class needs at least one vector")
            if any(len(v) != self.domain_size for v in vectors):
                raise ValueError("every vector must have domain_size entries")
            if any(b not in (0, 1) for v in vectors for b in v):
                raise ValueError("vectors must be binary")
            object.__setattr__(self, "vectors", vectors)
        elif self.vectors:
            raise ValueError(f"{self.kind} classes take no vectors")
        if self.vc_dim is None:
            if self.kind in ("thresholds", "point") and self.domain_size >= 2:
                vc = 1
            else:
                vc = compute_vc_dim(self)
            object.__setattr__(self, "vc_dim", vc)

    @classmethod
    def thresholds(cls, domain_size: int) -> "HypothesisClass":
        """``h_t(x) = 1`` iff ``x < t`` for ``t = 0, ..., domain_size``."""
        return cls("thresholds", domain_size)

    @classmethod
    def point_functions(cls, domain_size: int) -> "HypothesisClass":
        return cls("point", domain_size)

    @classmethod
    def explicit(cls, vectors, vc_dim: int | None = None) -> "HypothesisClass":
        vectors = tuple(tuple(v) for v in vectors)
        if not vectors:
            raise ValueError("explicit class needs at least one vector")
        return cls("explicit", len(vectors[0]), vectors, vc_dim)

    @classmethod
    def all_functions(cls, domain_size: int) -> "HypothesisClass":
        vectors = list(itertools.product((0, 1), repeat=domain_size))
        return cls("explicit", domain_size, tuple(vectors), domain_size)

    @classmethod
    def from_json(cls, obj: dict) -> "HypothesisClass":
        kind = obj["kind"]
        if kind == "explicit":
            return cls.explicit(obj["vectors"], obj.get("vc_dim"))
        return cls(kind, int(obj["domain_size"]))

    def to_json(self) -> dict:
        out = {"kind": self.kind, "domain_size": self.domain_size}
        if self.kind == "explicit":
            out["vectors"] = [list(v) for v in self.vectors]
        return out

    @cached_property
    def table(self) -> np.ndarray:
        xs = np.arange(self.domain_size)
        if self.kind == "thresholds":
            t = np.arange(self.domain_size + 1)[:, None]
            table = (xs[None, :] < t).astype(np.int8)
        elif self.kind == "point":
            table = np.eye(self.domain_size, dtype=np.int8)
        else:
            table = np.asarray(self.vectors, dtype=np.int8)
        table.flags.writeable = False
        return table

    @property
    def size(self) -> int:
        return self.table.shape[0]

    def row(self, index: int) -> tuple:
        return tuple(int(b) for b in self.table[index])

    def mistakes(self, sample: LabeledSample) -> np.ndarray:
        """Number of examples of ``sample`` each hypothesis gets wrong."""
        return (self.table[:, sample.xs] != sample.ys[None, :]).sum(axis=1)

    def losses(self, sample: LabeledSample) -> np.ndarray:
        return self.mistakes(sample) / sample.n

    def representatives(self, points) -> np.ndarray:
        """Canonical representative indices of ``H`` restricted to a point set.

        Cached on the set of distinct points, since the equivalence classes
        only depend on which points are present.
        """
        key = tuple(sorted(set(int(p) for p in points)))
        reps = self._memo.get(key)
        if reps is None:
            if not key:
                raise EmptyRestriction("restriction set is empty")
            if key[-1] >= self.domain_size:
                raise ValueError(f"point {key[-1]} outside domain")
            _, first = np.unique(self.table[:, list(key)], axis=0, return_index=True)
            reps = np.sort(first)
            reps.flags.writeable = False
            self._memo[key] = reps
        return reps


def restrict(H: HypothesisClass, T: Sequence[int]) -> list[Dichotomy]:
    """Split ``H`` into agreement classes on ``T``, one Dichotomy per class.

    The output is sorted by bit-vector (lexicographically, in the order of
    ``T``).
    """
    T = [int(t) for t in T]
    if not T:
        raise EmptyRestriction("restriction set is empty")
    if max(T) >= H.domain_size or min(T) < 0:
        raise ValueError("restriction point outside domain")
    patterns, first = np.unique(H.table[:, T], axis=0, return_index=True)
    return [
        Dichotomy(tuple(int(b) for b in pattern), int(rep), H.row(rep))
        for pattern, rep in zip(patterns, first)
    ]


def _count_patterns(table: np.ndarray, cols) -> int:
    sub = table[:, cols]
    codes = sub.astype(np.int64) @ (1 << np.arange(sub.shape[1], dtype=np.int64))
    return len(np.unique(codes))


def _check_exhaustive(H: HypothesisClass, m: int) -> None:
    if H.domain_size > MAX_EXHAUSTIVE_DOMAIN:
        raise TooLarge(
            f"domain of size {H.domain_size} exceeds exhaustive limit "
            f"{MAX_EXHAUSTIVE_DOMAIN}",
            bound=sauer_bound(H.vc_dim, m) if H.vc_dim is not None else 2**m,
        )


def growth_count(H: HypothesisClass, m: int) -> int:
    """Maximum number of dichotomies of ``H`` over any ``m`` domain points."""
    if not 1 <= m <= H.domain_size:
        raise ValueError(f"m must lie in [1, {H.domain_size}]")
    _check_exhaustive(H, m)
    ceiling = min(len(np.unique(H.table, axis=0)), 2**m)
    best = 0
    for cols in itertools.combinations(range(H.domain_size), m):
        best = max(best, _count_patterns(H.table, list(cols)))
        if best == ceiling:
            break
    return best


def growth_function(H: HypothesisClass, m: int) -> int:
    """Growth function extended to any sample size.

    A sample of more than ``domain_size`` examples still has at most
    ``domain_size`` distinct points, so the value saturates there.
    """
    m = min(int(m), H.domain_size)
    if m < 1:
        return 1
    memo = H._memo.setdefault("growth", {})
    if m not in memo:
        memo[m] = growth_count(H, m)
    return memo[m]


def sauer_bound(d: int, m: int) -> int:
    """``sum_{i<=d} C(m, i)``; equals ``2**m`` once ``d >= m``."""
    return sum(math.comb(m, i) for i in range(0, d + 1))


def sauer_bound_exp(d: int, m: int) -> float:
    """The ``(e m / d)^d`` form, valid for ``m > d + 1``; ``2**m`` otherwise."""
    if d == 0:
        return 1.0
    if m > d + 1:
        return (math.e * m / d) ** d
    return float(2**m)


def compute_vc_dim(H: HypothesisClass) -> int:
    """Largest ``m`` such that some ``m``-subset of the domain is shattered."""
    _check_exhaustive(H, 1)
    distinct = len(np.unique(H.table, axis=0))
    vc = 0
    for m in range(1, H.domain_size + 1):
        if 2**m > distinct:
            break
        if not any(
            _count_patterns(H.table, list(cols)) == 2**m
            for cols in itertools.combinations(range(H.domain_size), m)
        ):
            break
        vc = m
    return vc


def empirical_weights(sample: LabeledSample, domain_size: int) -> np.ndarray:
    """Uniform distribution over the examples of ``sample``, pushed onto ``X``."""
    return np.bincount(sample.xs, minlength=domain_size) / sample.n


def net_radius(A, H: HypothesisClass, weights) -> float:
    """Largest weighted disagreement between two hypotheses agreeing on ``A``."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (H.domain_size,):
        raise BadDistribution("weights must be a vector over the domain")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise BadDistribution(f"weights sum to {weights.sum()!r}, not 1")
    A = sorted(set(int(a) for a in A))
    support = np.flatnonzero(weights > 0)
    cols = sorted(set(A) | set(support.tolist()))
    sub = np.unique(H.table[:, cols], axis=0)
    a_pos = [cols.index(a) for a in A]
    s_pos = [cols.index(s) for s in support.tolist()]
    w = weights[support]
    if a_pos:
        _, group = np.unique(sub[:, a_pos], axis=0, return_inverse=True)
        group = np.asarray(group).ravel()
    else:
        group = np.zeros(len(sub), dtype=int)
    worst = 0.0
    for g in np.unique(group):
        rows = sub[group == g][:, s_pos]
        if len(rows) < 2:
            continue
        disagree = (rows[:, None, :] != rows[None, :, :]).astype(float) @ w
        worst = max(worst, float(disagree.max()))
    return worst


def is_eps_net(A, H: HypothesisClass, weights, alpha: float) -> bool:
    """Whether every pair of hypotheses agreeing on ``A`` differs on mass <= alpha."""
    return net_radius(A, H, weights) <= alpha + 1e-12


def erm(H: HypothesisClass, sample: LabeledSample) -> Dichotomy:
    """Empirical risk minimizer; ties go to the smallest hypothesis index."""
    sample.check_domain(H.domain_size)
    index = int(np.argmin(H.mistakes(sample)))
    row = H.row(index)
    return Dichotomy(row, index, row)

"""Brute-force oracles: neighbor grids, dominance checks, exact privacy extraction.

The ``naive_*`` functions recompute predictors from scratch with plain Python
arithmetic (``math.exp``, explicit index-subset enumeration, no log-space) and
import nothing from the learner modules, so they can serve as independent
references for the optimized code paths.
"""

from __future__ import annotations

import itertools
import math
import os
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.stats import binomtest

from .classes import HypothesisClass, LabeledSample, is_eps_net
from .errors import TooLarge

MAX_GRID = 10**6


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("STABLE_PREDICT_THREADS", "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# neighbor grids


def _symbols_to_sample(symbols) -> LabeledSample:
    symbols = [int(s) for s in symbols]
    return LabeledSample(tuple(s // 2 for s in symbols), tuple(s % 2 for s in symbols))


@dataclass(frozen=True, eq=False)
class NeighborGrid:
    """Every sample of size ``n`` over ``X x {0, 1}`` with its neighbor pairs.

    An example ``(x, y)`` is encoded as the symbol ``2 x + y``.  In
    ``"sequences"`` mode the grid holds all ``(2|X|)^n`` ordered samples; in
    ``"multisets"`` mode it holds one sorted representative per multiset, which
    is exact for learners invariant under permuting the sample.  ``pairs`` lists
    each unordered neighbor pair once.
    """

    domain_size: int
    n: int
    mode: str
    symbols: np.ndarray
    pairs: np.ndarray

    @classmethod
    def build(cls, domain_size: int, n: int, mode: str = "sequences", limit: int = MAX_GRID):
        k = 2 * domain_size
        if mode == "sequences":
            size = k**n
        elif mode == "multisets":
            size = math.comb(n + k - 1, n)
        else:
            raise ValueError(f"unknown grid mode {mode!r}")
        if size > limit:
            raise TooLarge(f"{mode} grid has {size} samples, limit is {limit}")
        if mode == "sequences":
            symbols, pairs = _sequence_grid(k, n)
        else:
            symbols, pairs = _multiset_grid(k, n)
        symbols.flags.writeable = False
        pairs.flags.writeable = False
        return cls(domain_size, n, mode, symbols, pairs)

    def __len__(self) -> int:
        return len(self.symbols)

    def sample(self, i: int) -> LabeledSample:
        return _symbols_to_sample(self.symbols[i])

    def samples(self):
        for row in self.symbols:
            yield _symbols_to_sample(row)

    @cached_property
    def ordered_pairs(self) -> np.ndarray:
        return np.concatenate([self.pairs, self.pairs[:, ::-1]])


def _sequence_grid(k, n):
    symbols = np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int64).reshape(-1, n)
    index = np.arange(len(symbols))
    pairs = []
    for pos in range(n):
        stride = k ** (n - 1 - pos)
        for delta in range(1, k):
            ok = symbols[:, pos] + delta < k
            pairs.append(np.stack([index[ok], index[ok] + delta * stride], axis=1))
    return symbols, np.concatenate(pairs) if pairs else np.empty((0, 2), dtype=np.int64)


def _multiset_grid(k, n):
    symbols = np.array(
        list(itertools.combinations_with_replacement(range(k), n)), dtype=np.int64
    ).reshape(-1, n)
    counts = np.zeros((len(symbols), k), dtype=np.int64)
    for j in range(n):
        np.add.at(counts, (np.arange(len(symbols)), symbols[:, j]), 1)
    base = (n + 1) ** np.arange(k, dtype=np.int64)
    codes = counts @ base
    order = np.argsort(codes)
    sorted_codes = codes[order]
    index = np.arange(len(symbols))
    pairs = []
    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            ok = counts[:, a] > 0
            target = codes[ok] - base[a] + base[b]
            j = order[np.searchsorted(sorted_codes, target)]
            i = index[ok]
            keep = i < j
            pairs.append(np.stack([i[keep], j[keep]], axis=1))
    return symbols, np.concatenate(pairs)


def _values_of(out) -> np.ndarray:
    return np.asarray(getattr(out, "values", out), dtype=float)


def _evaluate_chunk(learner, rows):
    return [_values_of(learner(_symbols_to_sample(r))) for r in rows]


def evaluate_grid(learner, grid: NeighborGrid, workers: int | None = None) -> np.ndarray:
    """``(len(grid), |X|)`` array of ``Pr[label 1]`` for every grid sample.

    Runs in worker processes when ``STABLE_PREDICT_THREADS`` (or ``workers``)
    is above one and the learner pickles; results are identical either way.
    """
    workers = max_workers() if workers is None else workers
    if workers > 1 and len(grid) >= 4 * workers:
        try:
            pickle.dumps(learner)
        except Exception:
            workers = 1
    if workers <= 1:
        return np.array([_values_of(learner(s)) for s in grid.samples()])
    chunks = np.array_split(grid.symbols, workers * 4)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_evaluate_chunk, [learner] * len(chunks), chunks)
        return np.array([v for part in parts for v in part])


# --------------------------------------------------------------------------
# dominance, stability gap, privacy extraction


@dataclass(frozen=True, eq=False)
class DominanceClaim:
    """``lhs <= lam * rhs + kappa_add`` in the sense of ``|h(x) - y|`` for all x, y."""

    lhs: np.ndarray
    rhs: np.ndarray
    lam: float = 1.0
    kappa_add: float = 0.0


def check_dominance(claim: DominanceClaim, tol: float = 1e-12):
    """Return ``(holds, (x, y, margin))`` for the tightest cell.

    ``margin = lam * |rhs(x) - y| + kappa_add - |lhs(x) - y|``; negative means
    the claim is violated at that cell.
    """
    lhs = np.atleast_1d(np.asarray(claim.lhs, dtype=float))
    rhs = np.atleast_1d(np.asarray(claim.rhs, dtype=float))
    margins = np.stack(
        [
            claim.lam * rhs + claim.kappa_add - lhs,  # y = 0
            claim.lam * (1 - rhs) + claim.kappa_add - (1 - lhs),  # y = 1
        ]
    )
    y, x = np.unravel_index(int(np.argmin(margins)), margins.shape)
    margin = float(margins[y, x])
    return margin >= -tol, (int(x), int(y), margin)


def stability_gap(values: np.ndarray, pairs: np.ndarray):
    """Sup additive gap over neighbor pairs; returns ``(gap, (i, j, x))``."""
    if len(pairs) == 0:
        return 0.0, None
    diff = np.abs(values[pairs[:, 0]] - values[pairs[:, 1]])
    flat = int(np.argmax(diff))
    p, x = np.unravel_index(flat, diff.shape)
    return float(diff[p, x]), (int(pairs[p, 0]), int(pairs[p, 1]), int(x))


def privacy_cells(values: np.ndarray, pairs: np.ndarray):
    """Probability pairs ``(p, q)`` with ``p = Pr_S[y|x]``, ``q = Pr_S'[y|x]``.

    Covers both orders of every pair and both labels, reduced to the Pareto
    set (high ``p``, low ``q``) which determines every (eps, delta) query.
    """
    a = values[pairs[:, 0]].ravel()
    b = values[pairs[:, 1]].ravel()
    p = np.concatenate([a, b, 1 - a, 1 - b])
    q = np.concatenate([b, a, 1 - b, 1 - a])
    order = np.lexsort((q, -p))
    p, q = p[order], q[order]
    running = np.minimum.accumulate(q)
    keep = np.ones(len(p), dtype=bool)
    keep[1:] = q[1:] < running[:-1]
    return p[keep], q[keep]


def _eps_from_cells(p, q, delta: float) -> float:
    live = p > delta
    if not np.any(live):
        return 0.0
    p, q = p[live], q[live]
    if np.any(q <= 0):
        return math.inf
    return max(0.0, float(np.max(np.log(p - delta) - np.log(q))))


def privacy_eps(values: np.ndarray, pairs: np.ndarray, delta: float = 0.0) -> float:
    """Smallest eps with ``p <= e^eps q + delta`` on every cell."""
    if len(pairs) == 0:
        return 0.0
    return _eps_from_cells(*privacy_cells(values, pairs), delta)


def privacy_frontier(values, pairs, resolution: float = 1e-4):
    """``(deltas, eps)`` on a grid of step ``resolution`` up to the point where eps hits 0."""
    if len(pairs) == 0:
        return np.array([0.0]), np.array([0.0])
    p, q = privacy_cells(values, pairs)
    gap = float(np.max(p - q)) if len(p) else 0.0
    steps = int(math.ceil(max(gap, 0.0) / resolution)) + 1
    deltas = np.round(np.arange(steps) * resolution, 12)
    eps = np.array([_eps_from_cells(p, q, d) for d in deltas])
    return deltas, eps


def sup_stability_gap(learner, grid: NeighborGrid) -> float:
    return stability_gap(evaluate_grid(learner, grid), grid.pairs)[0]


def min_privacy_eps(learner, grid: NeighborGrid, delta: float = 0.0) -> float:
    return privacy_eps(evaluate_grid(learner, grid), grid.pairs, delta)


def dominance_over_grid(values, pairs, lam: float, kappa_add: float = 0.0, tol: float = 1e-12):
    """``check_dominance`` for every ordered neighbor pair; returns ``(holds, worst margin)``."""
    a = values[pairs[:, 0]]
    b = values[pairs[:, 1]]
    worst = math.inf
    for lhs, rhs in ((a, b), (b, a)):
        m0 = lam * rhs + kappa_add - lhs
        m1 = lam * (1 - rhs) + kappa_add - (1 - lhs)
        worst = min(worst, float(m0.min()), float(m1.min()))
    return worst >= -tol, worst


# --------------------------------------------------------------------------
# naive oracles


def _rows(H: HypothesisClass):
    return [tuple(int(b) for b in row) for row in H.table.tolist()]


def naive_dichotomy_reps(rows, points):
    """Smallest index realizing each distinct pattern on ``points``."""
    seen = {}
    for i, row in enumerate(rows):
        pattern = tuple(row[x] for x in points)
        if pattern not in seen:
            seen[pattern] = i
    return sorted(seen.values())


def naive_loss(row, points, labels):
    return sum(1 for x, y in zip(points, labels) if row[x] != y) / len(points)


def naive_exp_probabilities(rows, points, labels, eps):
    n = len(points)
    weights = [math.exp(-n * naive_loss(row, points, labels) * eps / 2) for row in rows]
    z = sum(weights)
    return [w / z for w in weights]


def naive_h_ST(H, sample: LabeledSample, t_points, eps):
    rows = _rows(H)
    reps = naive_dichotomy_reps(rows, list(t_points))
    chosen = [rows[i] for i in reps]
    probs = naive_exp_probabilities(chosen, sample.points, sample.labels, eps)
    return [sum(p * row[x] for p, row in zip(probs, chosen)) for x in range(H.domain_size)]


def naive_stable_values(H, sample: LabeledSample, n_prime: int, gamma: float):
    """Average of ``h_{S,S_I}`` over every index subset ``I`` of size ``n_prime``."""
    total = [0.0] * H.domain_size
    count = 0
    for I in itertools.combinations(range(sample.n), n_prime):
        vals = naive_h_ST(H, sample, [sample.points[i] for i in I], gamma)
        total = [t + v for t, v in zip(total, vals)]
        count += 1
    return [t / count for t in total]


def naive_soft_majority(votes, kappa):
    """``exp(k mean) / (exp(k mean) + exp(k (1 - mean)))`` written out literally."""
    r = len(votes)
    ones = sum(votes) / r
    zeros = sum(1 - v for v in votes) / r
    a, b = math.exp(kappa * ones), math.exp(kappa * zeros)
    return a / (a + b)


def naive_realizable_values(rows, points, labels, r, size, kappa, domain_size):
    voters = []
    for j in range(r):
        block = range(j * size, (j + 1) * size)
        bp = [points[i] for i in block]
        bl = [labels[i] for i in block]
        losses = [naive_loss(row, bp, bl) for row in rows]
        voters.append(rows[losses.index(min(losses))])
    return [naive_soft_majority([v[x] for v in voters], kappa) for x in range(domain_size)]


def naive_main_values(H, sample: LabeledSample, n_prime, eta, r, size, kappa=None):
    """Reference for the relabel-and-aggregate private learner.

    ``kappa`` defaults to ``r / (2 eta n)``.
    """
    rows = _rows(H)
    n = sample.n
    if kappa is None:
        kappa = r / (2 * eta * n)
    total = [0.0] * H.domain_size
    count = 0
    for I in itertools.combinations(range(n), n_prime):
        reps = naive_dichotomy_reps(rows, [sample.points[i] for i in I])
        lam = [math.exp(-naive_loss(rows[i], sample.points, sample.labels) / eta) for i in reps]
        z = sum(lam)
        mix = [0.0] * H.domain_size
        for w, i in zip(lam, reps):
            relabeled = [rows[i][x] for x in sample.points]
            phi = naive_realizable_values(
                rows, sample.points, relabeled, r, size, kappa, H.domain_size
            )
            mix = [m + w / z * f for m, f in zip(mix, phi)]
        total = [t + m for t, m in zip(total, mix)]
        count += 1
    return [t / count for t in total]


def naive_subsampled_values(base, sample: LabeledSample, n_prime):
    """Average of ``base(S_I)`` over every index subset of size ``n_prime``."""
    outs = [
        list(base(sample.subsample(I)))
        for I in itertools.combinations(range(sample.n), n_prime)
    ]
    return [sum(col) / len(outs) for col in zip(*outs)]


# --------------------------------------------------------------------------
# statistical estimators


def empirical_prediction_law(learner_sampled, sample, x, trials, rng):
    """Bernoulli estimate of ``Pr[label 1]`` with a Wilson 99% half-width."""
    if trials < 100:
        raise ValueError("need at least 100 trials")
    ones = sum(int(learner_sampled(sample, x, rng)) for _ in range(trials))
    lo, hi = binomtest(ones, trials).proportion_ci(confidence_level=0.99, method="wilson")
    p_hat = ones / trials
    return p_hat, max(p_hat - lo, hi - p_hat)


def uniform_convergence_check(H, D, n, alpha, trials, rng) -> float:
    """Fraction of samples on which some hypothesis has ``|L_D - L_S| > alpha``."""
    true = D.true_losses(H)
    failures = 0
    for _ in range(trials):
        S = D.sample(n, rng)
        emp = H.losses(S)
        failures += bool(np.any(np.abs(true - emp) > alpha + 1e-12))
    return failures / trials


def draw_net_candidate(weights, n_prime, rng, mode="with_replacement"):
    """Point set of ``n_prime`` draws; ``"distinct"`` redraws until that many distinct points.

    In distinct mode the request is capped at the size of the support.
    """
    k = len(weights)
    if mode == "with_replacement":
        return set(rng.choice(k, size=n_prime, p=weights).tolist())
    if mode != "distinct":
        raise ValueError(f"unknown sampling mode {mode!r}")
    target = min(n_prime, int(np.count_nonzero(weights)))
    chosen = set()
    while len(chosen) < target:
        chosen.update(rng.choice(k, size=target - len(chosen), p=weights).tolist())
    return chosen


def net_probability_check(H, D, n_prime, alpha, trials, rng, mode="with_replacement") -> float:
    """Empirical probability that a random draw of ``n_prime`` points is not an alpha-net."""
    weights = np.asarray(getattr(D, "point_weights", D), dtype=float)
    verdict = {}
    failures = 0
    for _ in range(trials):
        A = frozenset(draw_net_candidate(weights, n_prime, rng, mode))
        if A not in verdict:
            verdict[A] = is_eps_net(A, H, weights, alpha)
        failures += not verdict[A]
    return failures / trials

"""Test-side reference computations written without the package's arithmetic."""

import itertools
import math
from fractions import Fraction


def support_law_bruteforce(points, n_prime):
    """Distinct-point set of every index subset, counted exactly."""
    counts = {}
    subsets = list(itertools.combinations(range(len(points)), n_prime))
    for I in subsets:
        key = tuple(sorted({points[i] for i in I}))
        counts[key] = counts.get(key, 0) + 1
    return {k: Fraction(v, len(subsets)) for k, v in counts.items()}


def threshold_rows(domain_size):
    return [tuple(1 if x < t else 0 for x in range(domain_size)) for t in range(domain_size + 1)]


def exp_weights(rows, points, labels, eps):
    n = len(points)
    w = [math.exp(-eps / 2 * sum(r[x] != y for x, y in zip(points, labels))) for r in rows]
    return [v / sum(w) for v in w]


def sigmoid_vote(votes, kappa):
    a = math.exp(kappa * sum(votes) / len(votes))
    b = math.exp(kappa * (len(votes) - sum(votes)) / len(votes))
    return a / (a + b)


def patterns(rows, cols):
    return {tuple(r[c] for c in cols) for r in rows}

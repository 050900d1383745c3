"""Uniformly stable agnostic learner built from subsampled exponential mechanisms.

The predictor averages, over every index subset ``I`` of size ``n_prime``, the
exponential mechanism (privacy ``gamma``, loss on the full sample) run over the
dichotomies of ``H`` on the points of ``S_I``.  That inner mixture depends on
``S_I`` only through its set of distinct points, so the exact average is a sum
over point sets weighted by how often a random ``I`` produces each one.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .classes import HypothesisClass, LabeledSample, growth_function, restrict
from .errors import TooLarge
from .mechanisms import exp_mech_distribution, softmax
from .sample_size import DEFAULT_CONSTANTS, Condition, PreconditionReport, n_exp, n_net

# exact mode enumerates point sets of the sample, 2**distinct of them at most
MAX_DISTINCT_POINTS = 16
# above this sample size, float support probabilities use log-binomials
BIGINT_LIMIT = 5000


@dataclass(frozen=True)
class StableConfig:
    n_prime: int
    gamma: float
    alpha: float = 0.25
    beta: float = 0.25

    def __post_init__(self):
        if self.n_prime < 1:
            raise ValueError("n_prime must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        for name in ("alpha", "beta"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")

    @classmethod
    def for_target_stability(cls, target: float, n_prime: int = 1, alpha=0.25, beta=0.25):
        """Config whose proven stability ``3 gamma`` equals ``target``."""
        return cls(n_prime, target / 3.0, alpha, beta)

    def min_sample_size(self) -> int:
        """Smallest ``n`` with ``n_prime / n <= gamma``."""
        n = math.ceil(self.n_prime / self.gamma - 1e-12)
        return max(n, self.n_prime)

    def to_json(self) -> dict:
        return {"n_prime": self.n_prime, "gamma": self.gamma, "alpha": self.alpha, "beta": self.beta}


def stable_preconditions(cfg: StableConfig, H: HypothesisClass, n: int, constants=DEFAULT_CONSTANTS):
    d = max(H.vc_dim, 1)
    k = growth_function(H, cfg.n_prime)
    return PreconditionReport(
        (
            Condition("n >= n_prime", n, cfg.n_prime),
            Condition("n_prime >= N_net(alpha, alpha, d)", cfg.n_prime, n_net(cfg.alpha, cfg.alpha, d, constants)),
            Condition("n >= N_exp(tau_{n_prime}(H), gamma, alpha)", n, n_exp(k, cfg.gamma, cfg.alpha, constants)),
            Condition("n >= n_prime / gamma", n, cfg.n_prime / cfg.gamma),
        )
    )


@dataclass(frozen=True, eq=False)
class MixturePredictor:
    """Randomized predictor ``sum_i weights[i] * components[i]``.

    ``components`` is a ``(terms, |X|)`` array of ``Pr[label 1]`` values.
    ``mode`` is ``"exact"`` or ``"monte_carlo"``; in the latter case ``samples``
    and ``seed`` record how the terms were drawn.
    """

    weights: np.ndarray
    components: np.ndarray
    mode: str = "exact"
    samples: int | None = None
    seed: int | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        c = np.atleast_2d(np.asarray(self.components, dtype=float))
        if w.ndim != 1 or len(w) != len(c):
            raise ValueError("one weight per component required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be a distribution")
        if np.any(c < -1e-12) or np.any(c > 1 + 1e-12):
            raise ValueError("component values must lie in [0, 1]")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", c)

    @cached_property
    def values(self) -> np.ndarray:
        v = np.clip(self.weights @ self.components, 0.0, 1.0)
        v.flags.writeable = False
        return v

    def __call__(self, x: int) -> float:
        return float(self.values[x])

    def sample(self, x: int, rng: np.random.Generator) -> int:
        return int(rng.random() < self.values[x])


def empirical_loss(values, sample: LabeledSample) -> float:
    """``L_S`` of a randomized predictor given by ``Pr[label 1]`` per point."""
    v = np.asarray(values, dtype=float)[sample.xs]
    return float(np.mean(np.abs(v - sample.ys)))


# --------------------------------------------------------------------------
# distribution of the point set of a random index subset


def _support_masks(m: int, n_prime: int):
    return [mask for mask in range(1, 1 << m) if bin(mask).count("1") <= n_prime]


def subset_support_distribution(points, n_prime: int, exact: bool = True):
    """Law of the distinct points of ``S_I`` for a uniform ``n_prime``-subset ``I``.

    Returns a dict mapping sorted point tuples to probabilities (``Fraction``
    when ``exact``, float otherwise).  The probability that the support lies
    inside ``Q`` is ``C(c_Q, n_prime) / C(n, n_prime)`` with ``c_Q`` the number
    of examples on ``Q``; Moebius inversion over subsets recovers the exact law.
    Float results for ``n > BIGINT_LIMIT`` come from log-binomials, with an
    absolute error of a few ulps per point set.
    """
    points = [int(p) for p in points]
    n = len(points)
    if not 1 <= n_prime <= n:
        raise ValueError("n_prime must lie in [1, n]")
    distinct = sorted(set(points))
    m = len(distinct)
    if m > MAX_DISTINCT_POINTS:
        raise TooLarge(
            f"{m} distinct points exceed the exact limit {MAX_DISTINCT_POINTS}; "
            "use monte_carlo mode",
            bound=math.comb(n, n_prime),
        )
    counts = [points.count(p) for p in distinct]
    size = 1 << m
    mass = [0] * size
    for mask in range(1, size):
        low = mask & -mask
        mass[mask] = mass[mask ^ low] + counts[low.bit_length() - 1]
    if not exact and n > BIGINT_LIMIT:
        return _support_distribution_float(distinct, mass, n, n_prime)
    inside = [math.comb(c, n_prime) for c in mass]
    # inverse zeta transform: inside[mask] -> Pr[support == mask] * C(n, n_prime)
    for bit in range(m):
        step = 1 << bit
        for mask in range(size):
            if mask & step:
                inside[mask] -= inside[mask ^ step]
    total = math.comb(n, n_prime)
    out = {}
    for mask in _support_masks(m, n_prime):
        if inside[mask]:
            key = tuple(distinct[b] for b in range(m) if mask >> b & 1)
            out[key] = Fraction(inside[mask], total) if exact else inside[mask] / total
    return out


def _support_distribution_float(distinct, mass, n, n_prime):
    m = len(distinct)
    c = np.array(mass, dtype=float)
    with np.errstate(invalid="ignore"):
        log_inside = np.where(
            c >= n_prime,
            gammaln(c + 1) - gammaln(n_prime + 1) - gammaln(c - n_prime + 1),
            -np.inf,
        )
    log_total = gammaln(n + 1) - gammaln(n_prime + 1) - gammaln(n - n_prime + 1)
    prob = np.exp(log_inside - log_total)
    for bit in range(m):
        step = 1 << bit
        masks = np.arange(1 << m)
        hit = masks[(masks & step) != 0]
        prob[hit] -= prob[hit ^ step]
    prob = np.clip(prob, 0.0, None)
    out = {}
    for mask in _support_masks(m, n_prime):
        if prob[mask] > 0:
            out[tuple(distinct[b] for b in range(m) if mask >> b & 1)] = float(prob[mask])
    return out


# --------------------------------------------------------------------------
# the learner


def _check(H: HypothesisClass, sample: LabeledSample, cfg: StableConfig):
    sample.check_domain(H.domain_size)
    if cfg.n_prime > sample.n:
        raise ValueError(f"n_prime={cfg.n_prime} exceeds sample size {sample.n}")


def _mechanism_values(H, mistakes, reps, scale) -> np.ndarray:
    """Exponential-weights mixture over ``reps`` with logits ``-scale * mistakes``."""
    return softmax(-scale * mistakes[reps]) @ H.table[reps]


def h_ST(H: HypothesisClass, sample: LabeledSample, T, gamma: float) -> np.ndarray:
    """Exponential mechanism with privacy ``gamma`` over ``H_T``, losses on ``sample``.

    ``T`` may be a LabeledSample or a sequence of points and need not be part
    of ``sample``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    points = T.points if isinstance(T, LabeledSample) else tuple(int(t) for t in T)
    return exp_mech_distribution(restrict(H, points), sample, gamma).mixture_values()


def stable_predict_exact(H: HypothesisClass, sample: LabeledSample, cfg: StableConfig) -> MixturePredictor:
    _check(H, sample, cfg)
    law = subset_support_distribution(sample.points, cfg.n_prime, exact=False)
    mistakes = H.mistakes(sample).astype(float)
    scale = cfg.gamma / 2.0  # n * L_S * eps / 2 with L_S = mistakes / n
    keys = sorted(law)
    comps = np.array([_mechanism_values(H, mistakes, H.representatives(k), scale) for k in keys])
    w = np.array([law[k] for k in keys])
    return MixturePredictor(w / w.sum(), comps)


def stable_predict_monte_carlo(H, sample, cfg: StableConfig, samples: int, seed: int) -> MixturePredictor:
    """Average of the inner mixture over ``samples`` random subsets."""
    _check(H, sample, cfg)
    rng = np.random.default_rng(seed)
    mistakes = H.mistakes(sample).astype(float)
    comps = []
    for _ in range(samples):
        I = rng.choice(sample.n, size=cfg.n_prime, replace=False)
        reps = H.representatives(sample.xs[I])
        comps.append(_mechanism_values(H, mistakes, reps, cfg.gamma / 2.0))
    return MixturePredictor(np.full(samples, 1.0 / samples), np.array(comps), "monte_carlo", samples, seed)


def stable_predict_sampled(H, sample, cfg: StableConfig, x: int, rng: np.random.Generator) -> int:
    """One randomized prediction: random subset, one mechanism draw, evaluate at ``x``."""
    _check(H, sample, cfg)
    I = rng.choice(sample.n, size=cfg.n_prime, replace=False)
    reps = H.representatives(sample.xs[I])
    p = softmax(-cfg.gamma / 2.0 * H.mistakes(sample)[reps])
    chosen = reps[min(int(np.searchsorted(np.cumsum(p), rng.random(), side="right")), len(reps) - 1)]
    return int(H.table[chosen, x])


@dataclass(frozen=True)
class StableLearner:
    """Picklable callable ``sample -> values`` for grid evaluation."""

    H: HypothesisClass
    cfg: StableConfig

    def __call__(self, sample: LabeledSample) -> np.ndarray:
        return stable_predict_exact(self.H, sample, self.cfg).values


def stability_certificate(cfg: StableConfig, H: HypothesisClass, n: int, grid_mode: str = "multisets") -> dict:
    """Exhaustive stability and empirical-accuracy audit at sample size ``n``.

    The learner is invariant under permuting the sample, so the multiset grid
    is exact and much smaller than the full sequence grid.
    """
    from .verify import NeighborGrid, evaluate_grid, stability_gap

    if H.domain_size > 5 or n > 6:
        raise TooLarge(f"exhaustive certificate needs |X| <= 5 and n <= 6, got {H.domain_size}, {n}")
    report = stable_preconditions(cfg, H, n)
    if not report.all_satisfied:
        warnings.warn(f"stability preconditions violated: {report.violated}", stacklevel=2)
    grid = NeighborGrid.build(H.domain_size, n, grid_mode)
    values = evaluate_grid(StableLearner(H, cfg), grid)
    gap, witness = stability_gap(values, grid.pairs)
    excess = 0.0
    for i, S in enumerate(grid.samples()):
        excess = max(excess, empirical_loss(values[i], S) - float(H.losses(S).min()))
    out = {
        "config": cfg.to_json(),
        "hypothesis_class": H.to_json(),
        "n": n,
        "grid_mode": grid_mode,
        "grid_size": len(grid),
        "stability_gap": gap,
        "stability_bound": 3 * cfg.gamma,
        "stability_holds": gap <= 3 * cfg.gamma + 1e-9,
        "max_excess_empirical_loss": excess,
        "accuracy_bound": 3 * cfg.alpha,
        "accuracy_holds": excess <= 3 * cfg.alpha + 1e-9,
        "preconditions": report.to_json(),
    }
    if witness is not None:
        i, j, x = witness
        out["witness"] = {"sample": list(grid.sample(i).pairs), "neighbor": list(grid.sample(j).pairs), "x": x}
    return out


def all_point_sets(domain_size: int, max_size: int):
    for k in range(1, min(max_size, domain_size) + 1):
        yield from itertools.combinations(range(domain_size), k)

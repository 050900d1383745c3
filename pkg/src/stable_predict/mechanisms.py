"""Exponential mechanism over a finite set of dichotomies, and soft majority.

Weights are kept in log-space: ``log lambda_h = -n * L_S(h) * eps / 2``.  The
temperature form ``lambda_h = exp(-L_S(h) / eta)`` is the same mechanism with
``eps = 2 / (eta * n)``; see :func:`eps_from_temperature`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import expit, logsumexp

from .classes import Dichotomy, LabeledSample
from .errors import EmptyClass


def eps_from_temperature(eta: float, n: int) -> float:
    return 2.0 / (eta * n)


def softmax(logits) -> np.ndarray:
    """Normalized ``exp(logits)`` with the maximum shifted out."""
    z = np.asarray(logits, dtype=float)
    p = np.exp(z - z.max())
    return p / p.sum()


def gibbs_log_probabilities(losses, scale: float) -> np.ndarray:
    """Log-probabilities proportional to ``exp(-scale * losses)``."""
    logits = -scale * np.asarray(losses, dtype=float)
    return logits - logsumexp(logits)


@dataclass(frozen=True, eq=False)
class ExpMechWeights:
    dichotomies: tuple
    losses: np.ndarray
    log_weights: np.ndarray
    log_z: float
    eps: float
    n: int

    @cached_property
    def probabilities(self) -> np.ndarray:
        p = np.exp(self.log_weights - self.log_z)
        p.flags.writeable = False
        return p

    @property
    def temperature(self) -> float:
        return 2.0 / (self.eps * self.n)

    def mixture_values(self) -> np.ndarray:
        """The selected hypothesis seen as a map ``X -> [0, 1]``."""
        rows = np.asarray([d.row for d in self.dichotomies], dtype=float)
        return self.probabilities @ rows


def _losses(dichotomies: Sequence[Dichotomy], sample: LabeledSample) -> np.ndarray:
    rows = np.asarray([d.row for d in dichotomies], dtype=np.int8)
    return (rows[:, sample.xs] != sample.ys[None, :]).mean(axis=1)


def exp_mech_distribution(
    dichotomies: Sequence[Dichotomy], sample: LabeledSample, eps: float
) -> ExpMechWeights:
    """Exact selection law of the exponential mechanism with privacy ``eps``.

    Losses are measured on ``sample`` through each dichotomy's representative.
    """
    dichotomies = tuple(dichotomies)
    if not dichotomies:
        raise EmptyClass("exponential mechanism over an empty set")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    losses = _losses(dichotomies, sample)
    log_w = -sample.n * losses * eps / 2.0
    return ExpMechWeights(dichotomies, losses, log_w, float(logsumexp(log_w)), eps, sample.n)


def exp_mech_sample(w: ExpMechWeights, rng: np.random.Generator) -> Dichotomy:
    cdf = np.cumsum(w.probabilities)
    index = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return w.dichotomies[min(index, len(cdf) - 1)]


def exp_mech_expected_loss(w: ExpMechWeights, sample: LabeledSample) -> float:
    return float(w.probabilities @ _losses(w.dichotomies, sample))


def soft_majority_probability(mean_vote, kappa: float):
    """``exp(k v) / (exp(k v) + exp(k (1 - v)))`` evaluated as a sigmoid."""
    return expit(kappa * (2.0 * np.asarray(mean_vote, dtype=float) - 1.0))


@dataclass(frozen=True)
class SoftMajorityPredictor:
    voters: tuple
    kappa: float

    def __post_init__(self):
        if not self.voters:
            raise EmptyClass("soft majority needs at least one voter")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        object.__setattr__(self, "voters", tuple(self.voters))

    @property
    def r(self) -> int:
        return len(self.voters)

    @cached_property
    def ballots(self) -> np.ndarray:
        return np.asarray([v.row for v in self.voters], dtype=np.int8)

    @cached_property
    def values(self) -> np.ndarray:
        v = soft_majority_probability(self.ballots.mean(axis=0), self.kappa)
        v.flags.writeable = False
        return v

    def __call__(self, x: int) -> float:
        return float(self.values[x])


def soft_majority_value(p: SoftMajorityPredictor, x: int) -> float:
    return p(x)


def vote_change_log_ratio(kappa: float, r: int, ones_before: int, ones_after: int) -> float:
    """Log of the worst multiplicative change of ``Pr[output = y]`` over both labels.

    ``ones_before`` and ``ones_after`` count the 1-ballots among ``r`` voters.
    """
    z0 = kappa * (2.0 * ones_before / r - 1.0)
    z1 = kappa * (2.0 * ones_after / r - 1.0)
    # log Pr[1] = -log(1 + e^-z), log Pr[0] = -log(1 + e^z); finite for any kappa
    d_one = abs(np.logaddexp(0.0, -z0) - np.logaddexp(0.0, -z1))
    d_zero = abs(np.logaddexp(0.0, z0) - np.logaddexp(0.0, z1))
    return float(max(d_one, d_zero))


def vote_change_ratio(kappa: float, r: int, ones_before: int, ones_after: int) -> float:
    log_ratio = vote_change_log_ratio(kappa, r, ones_before, ones_after)
    return math.exp(log_ratio) if log_ratio < 709 else math.inf


def soft_majority_single_vote_ratio(p: SoftMajorityPredictor, x: int) -> float:
    """Largest ratio caused by flipping one voter's ballot at ``x``."""
    ones = int(p.ballots[:, x].sum())
    ratios = []
    if ones > 0:
        ratios.append(vote_change_ratio(p.kappa, p.r, ones, ones - 1))
    if ones < p.r:
        ratios.append(vote_change_ratio(p.kappa, p.r, ones, ones + 1))
    return max(ratios)

"""Source distributions over ``X x {0, 1}`` and sample manipulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classes import HypothesisClass, LabeledSample
from .errors import BadDistribution


@dataclass(frozen=True, eq=False)
class SourceDistribution:
    """Points drawn from ``point_weights``; labels from hypothesis ``target`` of ``H``.

    With ``noise_rate > 0`` each label is flipped independently with that
    probability (the agnostic labeler).
    """

    H: HypothesisClass
    point_weights: np.ndarray
    target: int
    noise_rate: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.point_weights, dtype=float)
        if w.shape != (self.H.domain_size,) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise BadDistribution("point_weights must be a distribution over the domain")
        if not 0.0 <= self.noise_rate <= 0.5:
            raise ValueError("noise_rate must lie in [0, 1/2]")
        if not 0 <= self.target < self.H.size:
            raise ValueError("target is not a hypothesis index")
        w.flags.writeable = False
        object.__setattr__(self, "point_weights", w)

    @classmethod
    def uniform(cls, H, target, noise_rate=0.0):
        return cls(H, np.full(H.domain_size, 1.0 / H.domain_size), target, noise_rate)

    @property
    def realizable(self) -> bool:
        return self.noise_rate == 0.0

    @property
    def label_probs(self) -> np.ndarray:
        """``Pr[y = 1 | x]`` for every domain point."""
        row = self.H.table[self.target].astype(float)
        return row * (1 - self.noise_rate) + (1 - row) * self.noise_rate

    def risk(self, values) -> float:
        """``L_D`` of a randomized predictor given as ``Pr[label 1]`` per point."""
        v = np.asarray(values, dtype=float)
        q = self.label_probs
        return float(self.point_weights @ (q * (1 - v) + (1 - q) * v))

    def true_losses(self, H: HypothesisClass | None = None) -> np.ndarray:
        H = self.H if H is None else H
        return np.array([self.risk(row) for row in H.table.astype(float)])

    def best_risk(self, H: HypothesisClass | None = None) -> float:
        return float(self.true_losses(H).min())

    def sample(self, n: int, rng: np.random.Generator) -> LabeledSample:
        xs = rng.choice(self.H.domain_size, size=n, p=self.point_weights)
        ys = (rng.random(n) < self.label_probs[xs]).astype(int)
        return LabeledSample(tuple(xs.tolist()), tuple(ys.tolist()))


def sample_dataset(D: SourceDistribution, n: int, rng: np.random.Generator) -> LabeledSample:
    return D.sample(n, rng)


def flip_set(sample: LabeledSample, k: int) -> LabeledSample:
    """Flip every label whose point equals ``k``."""
    labels = tuple(1 - y if x == k else y for x, y in zip(sample.points, sample.labels))
    return LabeledSample(sample.points, labels)

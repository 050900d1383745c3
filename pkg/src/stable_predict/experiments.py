"""Reproduction harness: lower-bound family, subsampling amplification, sweeps."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import spearmanr

from .classes import HypothesisClass, LabeledSample
from .data import SourceDistribution, flip_set, sample_dataset
from .mechanisms import softmax
from .stable import StableConfig, StableLearner, stable_predict_exact
from .verify import NeighborGrid, evaluate_grid, privacy_eps, stability_gap

__all__ = [
    "SourceDistribution",
    "sample_dataset",
    "flip_set",
    "LowerBoundFamily",
    "lower_bound_experiment",
    "ExpMechLearner",
    "SubsampledLearner",
    "amplification_demo",
    "SWEEP_HEADER",
    "sample_complexity_sweep",
    "sweep_csv",
    "trial_seeds",
]


def trial_seeds(seed: int, trials: int) -> list:
    """Independent per-trial generators split from one experiment seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


# --------------------------------------------------------------------------
# lower bound


@dataclass(frozen=True)
class LowerBoundFamily:
    """Points ``0..d-2`` carry ``4 alpha / (d - 1)`` each, point ``d - 1`` the rest.

    Targets are every labeling of the ``d`` points, so the class is the full
    cube on ``d`` points.
    """

    d: int
    alpha: float

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("need d >= 2")
        if not 0 < self.alpha <= 0.25:
            raise ValueError("alpha must lie in (0, 1/4]")

    @property
    def exact_weights(self) -> tuple:
        a = Fraction(self.alpha).limit_denominator(10**9)
        light = 4 * a / (self.d - 1)
        return tuple([light] * (self.d - 1) + [1 - 4 * a])

    @property
    def weights(self) -> np.ndarray:
        return np.array([float(w) for w in self.exact_weights])

    @property
    def H(self) -> HypothesisClass:
        return HypothesisClass.all_functions(self.d)

    def threshold(self, gamma: float) -> float:
        """Sample size below which no gamma-stable learner reaches error alpha."""
        return (self.d - 1) / (8 * gamma * self.alpha)

    def error_floor(self, gamma: float, n: int) -> float:
        return 2 * self.alpha * (1 - 4 * gamma * self.alpha * n / (self.d - 1))

    def distribution(self, target: int) -> SourceDistribution:
        return SourceDistribution(self.H, self.weights, target)


def lower_bound_experiment(learner, fam: LowerBoundFamily, n: int, trials: int, rng, gamma: float) -> dict:
    """Monte Carlo estimate of every term in the stability-versus-error chain.

    ``learner`` maps a LabeledSample to ``Pr[label 1]`` per point.  Each trial
    draws a uniform target labeling, a sample of size ``n`` and evaluates the
    learner on the sample and on each single-coordinate label flip.
    """
    H = fam.H
    w = fam.weights
    light = range(fam.d - 1)
    scale = 4 * fam.alpha / (fam.d - 1)
    rows = {k: [] for k in ("error", "light", "measure", "triangle", "sensitivity", "counts", "flip_gap")}
    for _ in range(trials):
        target = int(rng.integers(H.size))
        h = H.table[target]
        S = fam.distribution(target).sample(n, rng)
        out = learner(S)
        v = np.asarray(getattr(out, "values", out), dtype=float)
        flipped = {}
        for k in light:
            out = learner(flip_set(S, k))
            flipped[k] = float(np.asarray(getattr(out, "values", out))[k])
        counts = np.bincount(S.xs, minlength=fam.d)
        rows["error"].append(float(w @ np.abs(h - v)))
        rows["light"].append(scale * sum(abs(h[k] - v[k]) for k in light))
        rows["measure"].append(scale * sum(0.5 * abs(h[k] - v[k]) + 0.5 * abs(1 - h[k] - flipped[k]) for k in light))
        rows["triangle"].append(scale / 2 * sum(abs(2 * h[k] - 1 + flipped[k] - v[k]) for k in light))
        rows["sensitivity"].append(scale / 2 * sum(1 - abs(v[k] - flipped[k]) for k in light))
        rows["counts"].append(float(np.mean(counts[: fam.d - 1])))
        rows["flip_gap"].append(max(abs(v[k] - flipped[k]) - gamma * counts[k] for k in light))
    stats = {k: (float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(trials))) for k, x in rows.items()}
    floor = fam.error_floor(gamma, n)
    mean, se = stats["error"]
    return {
        "d": fam.d,
        "alpha": fam.alpha,
        "gamma": gamma,
        "n": n,
        "trials": trials,
        "threshold": fam.threshold(gamma),
        "below_threshold": n < fam.threshold(gamma),
        "mean_error": mean,
        "se_error": se,
        "error_floor": floor,
        "floor_respected": mean + 3 * se >= floor,
        "chain": {k: {"mean": m, "se": s} for k, (m, s) in stats.items() if k not in ("counts", "flip_gap")},
        "mean_count_light": stats["counts"][0],
        "expected_count_light": fam.weights[0] * n,
        "max_flip_excess": float(np.max(rows["flip_gap"])),
        "within_alpha": mean - 3 * se <= fam.alpha,
    }


# --------------------------------------------------------------------------
# amplification by subsampling


@dataclass(frozen=True)
class ExpMechLearner:
    """Exponential mechanism over all of ``H`` with privacy ``eps``, as a value function."""

    H: HypothesisClass
    eps: float

    def __call__(self, sample: LabeledSample) -> np.ndarray:
        return softmax(-self.eps / 2.0 * self.H.mistakes(sample)) @ self.H.table


@dataclass(frozen=True)
class SubsampledLearner:
    """Run ``base`` on a uniformly random ``n_prime``-subset of the sample (exact average)."""

    base: object
    n_prime: int

    def __call__(self, sample: LabeledSample) -> np.ndarray:
        outs = [self.base(sample.subsample(I)) for I in itertools.combinations(range(sample.n), self.n_prime)]
        return np.mean(outs, axis=0)


def amplification_demo(base_eps: float, eta_frac: float, H: HypothesisClass, n: int, base=None, grid_mode="sequences") -> dict:
    """Measured privacy of an exactly subsampled private learner versus ``2 eps eta``."""
    n_prime = round(eta_frac * n)
    if not 1 <= n_prime <= n or abs(n_prime - eta_frac * n) > 1e-9:
        raise ValueError("eta_frac * n must be an integer in [1, n]")
    base = ExpMechLearner(H, base_eps) if base is None else base
    inner = NeighborGrid.build(H.domain_size, n_prime, grid_mode)
    outer = NeighborGrid.build(H.domain_size, n, grid_mode)
    base_measured = privacy_eps(evaluate_grid(base, inner), inner.pairs)
    wrapped = privacy_eps(evaluate_grid(SubsampledLearner(base, n_prime), outer), outer.pairs)
    bound = 2 * base_eps * eta_frac
    return {
        "base_eps": base_eps,
        "base_eps_measured": base_measured,
        "eta": eta_frac,
        "n": n,
        "n_prime": n_prime,
        "grid_size": len(outer),
        "measured_eps": wrapped,
        "bound": bound,
        "holds": wrapped <= bound + 1e-9,
    }


# --------------------------------------------------------------------------
# sample-complexity sweep

SWEEP_HEADER = ("n", "d", "alpha", "gamma", "eps", "excess_err", "stability_gap", "min_eps", "delta", "seed")

# exact certificates are attempted only on grids up to this size
SWEEP_GRID_LIMIT = 5000


def _sweep_point(H, D, n, gamma, n_prime, alpha, trials, seed):
    cfg = StableConfig(min(n_prime, n), gamma, alpha)
    best = D.best_risk(H)
    excess = []
    for rng in trial_seeds(seed, trials):
        S = D.sample(n, rng)
        excess.append(D.risk(stable_predict_exact(H, S, cfg).values) - best)
    gap = eps = float("nan")
    try:
        grid = NeighborGrid.build(H.domain_size, n, "multisets", limit=SWEEP_GRID_LIMIT)
    except Exception:
        grid = None
    if grid is not None:
        values = evaluate_grid(StableLearner(H, cfg), grid)
        gap = stability_gap(values, grid.pairs)[0]
        eps = privacy_eps(values, grid.pairs, 0.0)
    return float(np.mean(excess)), gap, eps


def sample_complexity_sweep(config: dict) -> tuple:
    """Run the stable learner over a grid of ``(n, gamma)`` values.

    ``config`` keys: ``hypothesis_class`` (JSON class spec), ``ns``, ``gammas``,
    ``alpha``, ``n_prime_frac`` (``n_prime = max(1, round(frac * n))``),
    ``trials``, ``seed``, ``target``, ``noise_rate`` and optional
    ``point_weights``.  Returns ``(rows, summary)``.
    """
    H = HypothesisClass.from_json(config["hypothesis_class"])
    weights = config.get("point_weights")
    weights = np.full(H.domain_size, 1.0 / H.domain_size) if weights is None else np.asarray(weights, dtype=float)
    D = SourceDistribution(H, weights, int(config.get("target", 0)), float(config.get("noise_rate", 0.0)))
    alpha = float(config.get("alpha", 0.25))
    seed = int(config.get("seed", 0))
    trials = int(config.get("trials", 20))
    frac = float(config.get("n_prime_frac", 0.1))
    rows = []
    for j, (gamma, n) in enumerate(itertools.product(config["gammas"], config["ns"])):
        point_seed = seed + j
        n_prime = max(1, round(frac * n))
        excess, gap, eps = _sweep_point(H, D, int(n), float(gamma), n_prime, alpha, trials, point_seed)
        rows.append(
            {
                "n": int(n),
                "d": H.vc_dim,
                "alpha": alpha,
                "gamma": float(gamma),
                "eps": "",
                "excess_err": excess,
                "stability_gap": gap,
                "min_eps": eps,
                "delta": 0.0,
                "seed": point_seed,
            }
        )
    summary = {"points": len(rows), "per_gamma": {}}
    for gamma in config["gammas"]:
        sub = [r for r in rows if r["gamma"] == float(gamma)]
        ns = [r["n"] for r in sub]
        errs = [r["excess_err"] for r in sub]
        rho = float(spearmanr(ns, errs).statistic) if len(set(errs)) > 1 and len(sub) > 2 else float("nan")
        summary["per_gamma"][str(float(gamma))] = {"spearman_n_vs_excess": rho, "excess_err": errs, "ns": ns}
    return rows, summary


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_HEADER, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: ("" if isinstance(r[k], float) and math.isnan(r[k]) else r[k]) for k in SWEEP_HEADER})
    return buf.getvalue()

"""Learners with private predictions.

Three constructions live here:

* ``flip_wrap``: turn a stable predictor into a private one by flipping its
  output label with a fixed probability.
* ``realizable_learn``: contiguous partitions, one ERM per partition and a
  soft majority over the partition winners.
* the main agnostic learner: for a random subset ``I`` draw ``h`` from the
  exponential mechanism over ``H_{S_I}`` (losses on ``S``), relabel ``S`` with
  ``h`` and answer with the realizable learner trained on the relabeled set.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .classes import HypothesisClass, LabeledSample, empirical_weights, erm, growth_function, is_eps_net
from .errors import InsufficientSample, TooLarge
from .mechanisms import SoftMajorityPredictor, softmax
from .sample_size import (
    DEFAULT_CONSTANTS,
    Condition,
    PreconditionReport,
    n_exp,
    n_gen,
    n_net,
    n_realizable,
    realizable_partitions,
)
from .stable import MixturePredictor, StableConfig, stable_preconditions, subset_support_distribution

SWAP_FACTOR = 4 * math.exp(6)


# --------------------------------------------------------------------------
# flip conversion


@dataclass(frozen=True)
class FlipConfig:
    eps: float
    alpha: float

    def __post_init__(self):
        if not (0 < self.eps < 1 or self.eps == 1.0) or not 0 < self.alpha < 1:
            raise ValueError("eps must lie in (0, 1] and alpha in (0, 1)")

    @property
    def gamma(self) -> float:
        """Stability the wrapped learner must have."""
        return self.eps * self.alpha / 2.0


def flip_wrap(values, alpha: float):
    """Flip the predicted label with probability ``alpha``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    p = np.asarray(values, dtype=float)
    return (1 - alpha) * p + alpha * (1 - p)


@dataclass(frozen=True)
class FlippedLearner:
    """``sample -> flip_wrap(base(sample), alpha)``; picklable when ``base`` is."""

    base: object
    alpha: float

    def __call__(self, sample):
        out = self.base(sample)
        return flip_wrap(getattr(out, "values", out), self.alpha)


def flip_converted_stable(H: HypothesisClass, cfg: FlipConfig, n_prime: int = 1, proven: bool = False):
    """Stable learner with parameter ``cfg.gamma`` wrapped with flip probability ``cfg.alpha``.

    With ``proven=True`` the stable learner's parameter is ``cfg.gamma / 3`` so
    that its proven stability ``3 gamma`` itself equals ``cfg.gamma``.
    Returns ``(learner, stable_config, n)`` where ``n`` is the smallest sample
    size with ``n_prime / n <= gamma``.
    """
    from .stable import StableLearner

    if proven:
        scfg = StableConfig.for_target_stability(cfg.gamma, n_prime)
    else:
        scfg = StableConfig(n_prime, cfg.gamma)
    return FlippedLearner(StableLearner(H, scfg), cfg.alpha), scfg, scfg.min_sample_size()


# --------------------------------------------------------------------------
# realizable soft-majority learner


@dataclass(frozen=True)
class RealizableConfig:
    r: int
    partition_size: int
    kappa: float
    eps_target: float

    def __post_init__(self):
        if self.r < 1 or self.partition_size < 1:
            raise ValueError("r and partition_size must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if 2 * self.kappa / self.r > self.eps_target * (1 + 1e-12):
            raise ValueError("2 kappa / r exceeds the privacy target")

    @property
    def required_size(self) -> int:
        return self.r * self.partition_size

    @property
    def ballot_eps(self) -> float:
        """Exact log-ratio bound for a one-ballot change."""
        return 2 * self.kappa / self.r

    @classmethod
    def for_temperature(cls, eta, n, alpha, beta, d, constants=DEFAULT_CONSTANTS):
        """Privacy ``1 / (eta n)``: ``r = ceil(6 ln(1/alpha) eta n)`` partitions, scale ``r / (2 eta n)``."""
        eps = 1.0 / (eta * n)
        r = realizable_partitions(eps, alpha, constants)
        return cls(r, n_net(alpha, beta / r, max(d, 1), constants), r * eps / 2.0, eps)

    @classmethod
    def log_preset(cls, eps, alpha, d, constants=DEFAULT_CONSTANTS):
        """``r = ceil(3 ln(1/eps) / eps)`` partitions with scale ``3 ln(1/eps)``; ballot privacy ``<= 2 eps``."""
        if not 0 < eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        r = math.ceil(3 * math.log(1 / eps) / eps)
        kappa = 3 * math.log(1 / eps)
        return cls(r, n_net(alpha, alpha, max(d, 1), constants), kappa, 2 * kappa / r)


def realizable_learn(H: HypothesisClass, sample_h: LabeledSample, cfg: RealizableConfig) -> SoftMajorityPredictor:
    """Soft majority of per-partition ERMs over ``r`` contiguous blocks."""
    if cfg.required_size > sample_h.n:
        raise InsufficientSample(
            f"{cfg.r} partitions of {cfg.partition_size} need {cfg.required_size} examples, have {sample_h.n}",
            condition="n >= N_R(1/(eta n), alpha, d)",
        )
    voters = []
    for j in range(cfg.r):
        block = sample_h.subsample(range(j * cfg.partition_size, (j + 1) * cfg.partition_size))
        voters.append(erm(H, block))
    return SoftMajorityPredictor(tuple(voters), cfg.kappa)


def _block_counts(xs: np.ndarray, labels: np.ndarray, cfg: RealizableConfig, domain_size: int) -> np.ndarray:
    """``(r, |X|, 2)`` counts of each labeled point in each block."""
    used = cfg.required_size
    block = np.repeat(np.arange(cfg.r), cfg.partition_size)
    flat = (block * domain_size + xs[:used]) * 2 + labels[:used]
    return np.bincount(flat, minlength=cfg.r * domain_size * 2).reshape(cfg.r, domain_size, 2)


def realizable_values(H: HypothesisClass, xs, labels, cfg: RealizableConfig) -> np.ndarray:
    """Vectorized values of ``realizable_learn`` on the sample ``(xs, labels)``."""
    xs = np.asarray(xs)
    labels = np.asarray(labels, dtype=np.int64)
    if cfg.required_size > len(xs):
        raise InsufficientSample(
            f"{cfg.r} partitions of {cfg.partition_size} need {cfg.required_size} examples, have {len(xs)}",
            condition="n >= N_R(1/(eta n), alpha, d)",
        )
    counts = _block_counts(xs, labels, cfg, H.domain_size)
    table = H.table.astype(np.int64)
    mistakes = counts[:, :, 0] @ table.T + counts[:, :, 1] @ (1 - table).T
    winners = np.argmin(mistakes, axis=1)
    mean_vote = table[winners].mean(axis=0)
    return expit(cfg.kappa * (2.0 * mean_vote - 1.0))


def realizability_violations(H: HypothesisClass, sample_h: LabeledSample, cfg: RealizableConfig) -> list:
    """Indices of partitions on which no hypothesis has zero training loss."""
    counts = _block_counts(sample_h.xs, sample_h.ys.astype(np.int64), cfg, H.domain_size)
    table = H.table.astype(np.int64)
    mistakes = counts[:, :, 0] @ table.T + counts[:, :, 1] @ (1 - table).T
    return [int(j) for j in np.flatnonzero(mistakes.min(axis=1) > 0)]


# --------------------------------------------------------------------------
# main agnostic learner


@dataclass(frozen=True)
class MainConfig:
    n_prime: int
    eta: float
    alpha: float
    beta: float
    eps: float
    r: int | None = None
    partition_size: int | None = None
    kappa: float | None = None

    def __post_init__(self):
        if self.n_prime < 1 or self.eta <= 0:
            raise ValueError("n_prime and eta must be positive")
        for name in ("alpha", "beta", "eps"):
            if not 0 < getattr(self, name) < 1 and not (name == "eps" and self.eps == 1.0):
                raise ValueError(f"{name} must lie in (0, 1)")

    def mechanism_eps(self, n: int) -> float:
        return 2.0 / (self.eta * n)

    def realizable_config(self, n: int, d: int, constants=DEFAULT_CONSTANTS) -> RealizableConfig:
        if self.r is None:
            base = RealizableConfig.for_temperature(self.eta, n, self.alpha, self.beta, d, constants)
            if self.partition_size is not None:
                base = replace(base, partition_size=self.partition_size)
            return base
        eps = 1.0 / (self.eta * n)
        size = self.partition_size if self.partition_size is not None else n // self.r
        kappa = self.kappa if self.kappa is not None else self.r * eps / 2.0
        return RealizableConfig(self.r, size, kappa, max(eps, 2 * kappa / self.r))

    def to_json(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def main_preconditions(cfg: MainConfig, H: HypothesisClass, n: int, constants=DEFAULT_CONSTANTS) -> PreconditionReport:
    d = max(H.vc_dim, 1)
    a, b = cfg.alpha, cfg.beta
    inv = 1.0 / (cfg.eta * n)
    conds = [
        Condition("n >= N_G(alpha, beta, d)", n, n_gen(a, b, d, constants)),
        Condition("n_prime >= N_net(alpha, alpha, d)", cfg.n_prime, n_net(a, a, d, constants)),
    ]
    if cfg.eta < 1:
        conds.append(Condition("n_prime >= N_net(eta, alpha, d) + 1", cfg.n_prime, n_net(cfg.eta, a, d, constants) + 1))
    else:
        conds.append(Condition("n_prime >= N_net(eta, alpha, d) + 1", cfg.n_prime, 1))
    conds.append(
        Condition("n >= N_exp(2/(eta n), alpha, tau_n(H))", n, n_exp(growth_function(H, n), 2 * inv, a, constants))
    )
    if inv < 1:
        need = n_realizable(inv, a, b, d, constants)
    else:
        need = math.inf
    conds.append(Condition("n >= N_R(1/(eta n), alpha, d)", n, need))
    conds.append(Condition("n_prime <= eps n", cfg.n_prime, cfg.eps * n, "<="))
    conds.append(Condition("eps >= 1/(eta n)", cfg.eps, inv))
    return PreconditionReport(tuple(conds))


def precondition_report(cfg, H: HypothesisClass, n: int, constants=DEFAULT_CONSTANTS) -> PreconditionReport:
    if isinstance(cfg, StableConfig):
        return stable_preconditions(cfg, H, n, constants)
    return main_preconditions(cfg, H, n, constants)


class _Phi:
    """Memo of the realizable learner's values on ``S_h``, keyed by ``h`` on the points of ``S``."""

    def __init__(self, H: HypothesisClass, sample: LabeledSample, rcfg: RealizableConfig):
        self.H, self.xs, self.rcfg = H, sample.xs, rcfg
        self.distinct = np.unique(sample.xs)
        self.cache = {}

    def __call__(self, index: int) -> np.ndarray:
        row = self.H.table[index]
        key = row[self.distinct].tobytes()
        out = self.cache.get(key)
        if out is None:
            out = realizable_values(self.H, self.xs, row[self.xs], self.rcfg)
            self.cache[key] = out
        return out


def _main_setup(H, sample, cfg, constants):
    sample.check_domain(H.domain_size)
    if cfg.n_prime > sample.n:
        raise ValueError(f"n_prime={cfg.n_prime} exceeds sample size {sample.n}")
    rcfg = cfg.realizable_config(sample.n, H.vc_dim, constants)
    if rcfg.required_size > sample.n:
        raise InsufficientSample(
            f"realizable learner needs {rcfg.required_size} examples, sample has {sample.n}",
            condition="n >= N_R(1/(eta n), alpha, d)",
        )
    return rcfg, _Phi(H, sample, rcfg), H.mistakes(sample).astype(float) / (cfg.eta * sample.n)


def _main_component(H, reps, scaled_loss, phi) -> np.ndarray:
    p = softmax(-scaled_loss[reps])
    return p @ np.array([phi(int(i)) for i in reps])


def main_h_ST(H, sample: LabeledSample, T, cfg: MainConfig, constants=DEFAULT_CONSTANTS) -> np.ndarray:
    """``sum_h lambda_h phi_S(h) / Z`` over the dichotomies of ``H`` on ``T``."""
    _, phi, scaled = _main_setup(H, sample, cfg, constants)
    points = T.points if isinstance(T, LabeledSample) else tuple(T)
    return _main_component(H, H.representatives(points), scaled, phi)


def main_private_predict_exact(H, sample: LabeledSample, cfg: MainConfig, constants=DEFAULT_CONSTANTS) -> MixturePredictor:
    _, phi, scaled = _main_setup(H, sample, cfg, constants)
    law = subset_support_distribution(sample.points, cfg.n_prime, exact=False)
    keys = sorted(law)
    comps = np.array([_main_component(H, H.representatives(k), scaled, phi) for k in keys])
    w = np.array([law[k] for k in keys])
    return MixturePredictor(w / w.sum(), comps)


def main_private_predict_sampled(H, sample, cfg: MainConfig, x: int, rng, constants=DEFAULT_CONSTANTS) -> int:
    """Random subset, one exponential-mechanism draw, then a Bernoulli from ``phi_S(h)(x)``."""
    _, phi, scaled = _main_setup(H, sample, cfg, constants)
    I = rng.choice(sample.n, size=cfg.n_prime, replace=False)
    reps = H.representatives(sample.xs[I])
    p = softmax(-scaled[reps])
    pick = min(int(np.searchsorted(np.cumsum(p), rng.random(), side="right")), len(reps) - 1)
    return int(rng.random() < phi(int(reps[pick]))[x])


@dataclass(frozen=True)
class MainLearner:
    H: HypothesisClass
    cfg: MainConfig

    def __call__(self, sample: LabeledSample) -> np.ndarray:
        return main_private_predict_exact(self.H, sample, self.cfg).values


# --------------------------------------------------------------------------
# feasible parameters


def feasible_main_config(H: HypothesisClass, alpha, beta, eps, constants=DEFAULT_CONSTANTS, shrink: float = 0.8):
    """Search ``eta``, ``n_prime`` and ``n`` satisfying every main-learner condition.

    Starts from ``eta = alpha`` and shrinks it geometrically; for each ``eta``
    takes the smallest admissible ``n_prime`` and then the smallest ``n``
    meeting the explicit lower bounds.  Returns ``(MainConfig, n)``.
    """
    d = max(H.vc_dim, 1)
    eta = alpha
    for _ in range(200):
        n_prime = max(n_net(alpha, alpha, d, constants), n_net(eta, alpha, d, constants) + 1)
        n = max(n_gen(alpha, beta, d, constants), math.ceil(n_prime / eps), math.ceil(1 / (eps * eta)))
        cfg = MainConfig(n_prime, eta, alpha, beta, eps)
        for _ in range(60):
            report = main_preconditions(cfg, H, n, constants)
            if report.all_satisfied:
                return cfg, n
            if report.violated != ["n >= N_R(1/(eta n), alpha, d)"]:
                break
            n = math.ceil(n * 1.05)
        eta *= shrink
    raise ValueError("no feasible configuration found")


# --------------------------------------------------------------------------
# privacy certificate


def _point_sets(domain_size, max_size):
    for k in range(1, min(max_size, domain_size) + 1):
        yield from itertools.combinations(range(domain_size), k)


def privacy_certificate(cfg: MainConfig, H: HypothesisClass, n: int, resolution: float = 1e-4, alpha_delta=None) -> dict:
    """Exhaustive privacy audit of the main learner at sample size ``n``.

    Reports the achieved (eps, delta) frontier over the full sequence grid,
    the fixed-``T`` relation between neighbors with factor ``e^{3/(eta n)}``,
    and the subset-swap relation with factor ``4 e^6`` on every instance whose
    net precondition holds.
    """
    from .verify import NeighborGrid, dominance_over_grid, evaluate_grid, privacy_eps, privacy_frontier

    if H.domain_size > 4 or n > 5:
        raise TooLarge(f"exhaustive certificate needs |X| <= 4 and n <= 5, got {H.domain_size}, {n}")
    report = main_preconditions(cfg, H, n)
    if not report.all_satisfied:
        warnings.warn(f"main-learner preconditions violated: {report.violated}", stacklevel=2)
    grid = NeighborGrid.build(H.domain_size, n, "sequences")
    values = evaluate_grid(MainLearner(H, cfg), grid)
    deltas, eps_curve = privacy_frontier(values, grid.pairs, resolution)
    inv = 1.0 / (cfg.eta * n)
    delta_ref = cfg.eps * cfg.alpha if alpha_delta is None else alpha_delta

    # fixed T, neighboring samples
    sets = list(_point_sets(H.domain_size, cfg.n_prime))
    samples = list(grid.samples())
    per_T = {T: np.array([main_h_ST(H, S, T, cfg) for S in samples]) for T in sets}
    fixed_eps = max(privacy_eps(v, grid.pairs) for v in per_T.values())
    fixed_ok = all(dominance_over_grid(v, grid.pairs, math.exp(3 * inv))[0] for v in per_T.values())

    # subset swap within one sample, changed index 0
    checked, worst, swap_ok = _swap_check(H, samples, per_T, cfg, n)

    return {
        "config": cfg.to_json(),
        "hypothesis_class": H.to_json(),
        "n": n,
        "grid_size": len(grid),
        "eps_at_delta_0": float(eps_curve[0]),
        "delta_ref": delta_ref,
        "eps_at_delta_ref": privacy_eps(values, grid.pairs, delta_ref),
        "frontier": {"resolution": resolution, "delta": deltas.tolist(), "eps": eps_curve.tolist()},
        "fixed_T": {"factor_log": 3 * inv, "achieved_log": fixed_eps, "holds": bool(fixed_ok)},
        "swap": {"factor": SWAP_FACTOR, "instances": checked, "worst_log": worst, "holds": bool(swap_ok)},
        "preconditions": report.to_json(),
    }


def _swap_check(H, samples, per_T, cfg: MainConfig, n: int):
    from .verify import DominanceClaim, check_dominance

    checked, worst, ok = 0, 0.0, True
    for s, S in enumerate(samples):
        weights = empirical_weights(S.subsample(range(1, n)), H.domain_size)
        for J in itertools.combinations(range(1, n), cfg.n_prime - 1):
            if J and not is_eps_net([S.points[j] for j in J], H, weights, cfg.eta):
                continue
            lhs = per_T[tuple(sorted({S.points[j] for j in (0,) + J}))][s]
            for i in sorted(set(range(1, n)) - set(J)):
                rhs = per_T[tuple(sorted({S.points[j] for j in J + (i,)}))][s]
                holds, _ = check_dominance(DominanceClaim(lhs, rhs, SWAP_FACTOR))
                ok &= holds
                checked += 1
                with np.errstate(divide="ignore"):
                    ratio = np.max(np.concatenate([lhs / rhs, (1 - lhs) / (1 - rhs)]))
                worst = max(worst, float(np.log(ratio)))
    return checked, worst, ok

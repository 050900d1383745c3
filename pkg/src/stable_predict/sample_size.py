"""Explicit-constant sample-size calculators and precondition reports.

Only the exponential-mechanism size ``2 ln k / (eps alpha)`` has a constant
fixed by theory.  The net, generalization and realizable-learner sizes use
conventional textbook constants, collected in :class:`SampleSizeConstants` so
they can be overridden.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class SampleSizeConstants:
    # N_net(a, b, d) = ceil((net_vc * d * ln(net_log / a) + net_conf * ln(2 / b)) / a)
    net_vc: float = 4.0
    net_log: float = 8.0
    net_conf: float = 2.0
    # N_G(a, b, d) = ceil((gen_vc * d + gen_conf * ln(2 / b)) / a^2)
    gen_vc: float = 8.0
    gen_conf: float = 4.0
    # N_exp(k, eps, a) = ceil(exp_const * ln k / (eps * a))
    exp_const: float = 2.0
    # realizable learner: r = ceil(parts * ln(1 / a) / eps) partitions
    parts: float = 6.0


DEFAULT_CONSTANTS = SampleSizeConstants()


def _check_unit(**params):
    for name, value in params.items():
        if not 0 < value < 1:
            raise ValueError(f"{name} must lie in (0, 1), got {value!r}")


def n_net(alpha, beta, d, c: SampleSizeConstants = DEFAULT_CONSTANTS) -> int:
    """Size of a random sample that is an alpha-net with probability 1 - beta."""
    _check_unit(alpha=alpha, beta=beta)
    return math.ceil(
        (c.net_vc * d * math.log(c.net_log / alpha) + c.net_conf * math.log(2 / beta)) / alpha
    )


def n_gen(alpha, beta, d, c: SampleSizeConstants = DEFAULT_CONSTANTS) -> int:
    """Uniform convergence: every ``|L_D(h) - L_S(h)| <= alpha`` w.p. 1 - beta."""
    _check_unit(alpha=alpha, beta=beta)
    return math.ceil((c.gen_vc * d + c.gen_conf * math.log(2 / beta)) / alpha**2)


def n_exp(k, eps, alpha, c: SampleSizeConstants = DEFAULT_CONSTANTS) -> int:
    """Sample size making the eps-exponential mechanism over k items alpha-accurate."""
    if k < 1:
        raise ValueError("k must be positive")
    if eps <= 0 or alpha <= 0:
        raise ValueError("eps and alpha must be positive")
    return math.ceil(c.exp_const * math.log(k) / (eps * alpha))


def realizable_partitions(eps, alpha, c: SampleSizeConstants = DEFAULT_CONSTANTS) -> int:
    _check_unit(alpha=alpha)
    if eps <= 0:
        raise ValueError("eps must be positive")
    return max(1, math.ceil(c.parts * math.log(1 / alpha) / eps))


def n_realizable(eps, alpha, beta, d, c: SampleSizeConstants = DEFAULT_CONSTANTS) -> int:
    """Sample size of the soft-majority realizable learner with privacy ``eps``.

    ``r`` partitions, each an alpha-net with confidence ``beta / r``.
    """
    r = realizable_partitions(eps, alpha, c)
    return r * n_net(alpha, beta / r, d, c)


@dataclass(frozen=True)
class Condition:
    name: str
    lhs: float
    rhs: float
    relation: str = ">="

    @property
    def satisfied(self) -> bool:
        if self.relation == ">=":
            return self.lhs >= self.rhs
        return self.lhs <= self.rhs

    def to_json(self) -> dict:
        out = asdict(self)
        out["satisfied"] = self.satisfied
        return out


@dataclass(frozen=True)
class PreconditionReport:
    conditions: tuple

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied for c in self.conditions)

    @property
    def violated(self) -> list:
        return [c.name for c in self.conditions if not c.satisfied]

    def to_json(self) -> dict:
        return {
            "all_satisfied": self.all_satisfied,
            "violated": self.violated,
            "conditions": [c.to_json() for c in self.conditions],
        }

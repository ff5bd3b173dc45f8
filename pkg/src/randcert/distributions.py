"""
Finite-support label distributions and the probability metrics between them.

All divergences use the natural logarithm. Zero-mass conventions:

* ``0 * log(0 / q) = 0`` for every ``q``;
* Renyi / KL divergences are ``+inf`` as soon as ``p`` charges a label that
  ``q`` does not;
* for the separation distance, labels with ``q(y) = 0`` are skipped (they
  contribute ``1 - p/0 = -inf`` or the indeterminate ``0/0``, counted as 0).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionError, ValidationError

__all__ = [
    "CategoricalDistribution",
    "DivergenceKind",
    "GroundDistance",
    "tv_distance",
    "renyi_divergence",
    "kl_divergence",
    "hellinger_distance",
    "separation_distance",
    "wasserstein_distance",
    "divergence",
    "probability_preservation_bound",
    "tv_bound_from_renyi",
    "shannon_entropy",
]

_SUM_TOL = 1e-6
_NEG_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CategoricalDistribution:
    """Probability vector over ``K >= 2`` labels.

    Sums within ``1e-6`` of one are renormalized; anything further away is
    rejected. The stored array is read-only.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).reshape(-1)
        if p.size < 2:
            raise ValidationError(f"need at least 2 labels, got {p.size}")
        if not np.all(np.isfinite(p)):
            raise ValidationError("probabilities must be finite")
        if np.any(p < -_NEG_TOL):
            raise ValidationError(f"negative probability: {p.min()!r}")
        p = np.clip(p, 0.0, None)
        total = p.sum()
        if abs(total - 1.0) > _SUM_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")
        p = p / total
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, k: int) -> "CategoricalDistribution":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point_mass(cls, label: int, k: int) -> "CategoricalDistribution":
        p = np.zeros(k)
        p[label] = 1.0
        return cls(p)

    @property
    def k(self) -> int:
        return self.probs.size

    def __len__(self):
        return self.probs.size

    def __getitem__(self, idx):
        return self.probs[idx]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, CategoricalDistribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return f"CategoricalDistribution({np.array2string(self.probs, precision=6)})"

    def top_two(self) -> tuple[float, float]:
        """Largest and second-largest probabilities ``(p_(1), p_(2))``."""
        s = np.sort(self.probs)
        return float(s[-1]), float(s[-2])


ProbLike = Union[CategoricalDistribution, np.ndarray, list, tuple]


class GroundDistance(enum.Enum):
    """Ground metric on labels for the Wasserstein distance."""

    TRIVIAL = "trivial"  # d(y, y') = 1{y != y'}
    ORDERED_LINE = "ordered_line"  # label k sits at coordinate k

    def diameter(self, k: int) -> float:
        return 1.0 if self is GroundDistance.TRIVIAL else float(k - 1)


@dataclass(frozen=True)
class DivergenceKind:
    """Tag selecting a metric/divergence, with its parameter when it has one."""

    name: str
    beta: float | None = None
    ground: GroundDistance | None = None

    _NAMES = ("tv", "renyi", "hellinger", "separation", "wasserstein")

    def __post_init__(self):
        if self.name not in self._NAMES:
            raise ValidationError(f"unknown divergence {self.name!r}")
        if self.name == "renyi":
            if self.beta is None or not (self.beta >= 1.0):
                raise ValidationError(f"Renyi order must be in [1, inf], got {self.beta!r}")
            object.__setattr__(self, "beta", float(self.beta))
        elif self.beta is not None:
            raise ValidationError(f"{self.name} takes no order parameter")
        if self.name == "wasserstein":
            if self.ground is None:
                object.__setattr__(self, "ground", GroundDistance.TRIVIAL)
        elif self.ground is not None:
            raise ValidationError(f"{self.name} takes no ground distance")

    @classmethod
    def tv(cls):
        return cls("tv")

    @classmethod
    def renyi(cls, beta: float):
        return cls("renyi", beta=beta)

    @classmethod
    def kl(cls):
        return cls("renyi", beta=1.0)

    @classmethod
    def max_divergence(cls):
        return cls("renyi", beta=math.inf)

    @classmethod
    def hellinger(cls):
        return cls("hellinger")

    @classmethod
    def separation(cls):
        return cls("separation")

    @classmethod
    def wasserstein(cls, ground: GroundDistance = GroundDistance.TRIVIAL):
        return cls("wasserstein", ground=ground)

    def __str__(self):
        if self.name == "renyi":
            return f"renyi(beta={self.beta:g})"
        if self.name == "wasserstein":
            return f"wasserstein({self.ground.value})"
        return self.name


def _pair(p: ProbLike, q: ProbLike) -> tuple[np.ndarray, np.ndarray]:
    p = p.probs if isinstance(p, CategoricalDistribution) else CategoricalDistribution(p).probs
    q = q.probs if isinstance(q, CategoricalDistribution) else CategoricalDistribution(q).probs
    if p.shape != q.shape:
        raise DimensionError(f"label counts differ: {p.size} vs {q.size}")
    return p, q


def tv_distance(p: ProbLike, q: ProbLike) -> float:
    """Total variation distance, ``0.5 * sum |p - q|``."""
    p, q = _pair(p, q)
    return float(min(1.0, 0.5 * np.abs(p - q).sum()))


def renyi_divergence(p: ProbLike, q: ProbLike, beta: float) -> float:
    """Renyi divergence ``D_beta(p || q)`` for ``beta`` in ``[1, inf]``.

    ``beta == 1`` is the Kullback-Leibler divergence and ``beta == inf`` the
    max-divergence ``max_y log(p(y) / q(y))``; both are evaluated with their
    own closed forms rather than as limits.
    """
    if not (beta >= 1.0):
        raise ValidationError(f"Renyi order must be >= 1, got {beta!r}")
    p, q = _pair(p, q)
    support = p > 0
    if np.any(q[support] == 0):
        return math.inf
    ps, qs = p[support], q[support]
    log_ratio = np.log(ps) - np.log(qs)
    if beta == 1.0:
        value = float(np.dot(ps, log_ratio))
    elif math.isinf(beta):
        value = float(log_ratio.max())
    else:
        # log sum q (p/q)^beta = logsumexp(log q + beta * log(p/q))
        value = float(logsumexp(np.log(qs) + beta * log_ratio)) / (beta - 1.0)
    return max(value, 0.0)


def kl_divergence(p: ProbLike, q: ProbLike) -> float:
    return renyi_divergence(p, q, 1.0)


def hellinger_distance(p: ProbLike, q: ProbLike) -> float:
    """``sqrt(sum (sqrt p - sqrt q)^2)``; ranges over ``[0, sqrt 2]``."""
    p, q = _pair(p, q)
    return float(np.sqrt(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2)))


def separation_distance(p: ProbLike, q: ProbLike) -> float:
    """``sup_y (1 - p(y) / q(y))`` over labels charged by ``q``.

    The raw supremum is returned; it is never clamped at zero.
    """
    p, q = _pair(p, q)
    charged = q > 0
    return float(np.max(1.0 - p[charged] / q[charged]))


def wasserstein_distance(
    p: ProbLike, q: ProbLike, ground: GroundDistance = GroundDistance.TRIVIAL
) -> float:
    """Optimal-transport distance under a trivial or ordered-line ground cost.

    With the indicator cost the optimal coupling keeps ``min(p, q)`` in place,
    which gives the total variation distance. On the line the 1-D closed form
    ``sum_k |F_p(k) - F_q(k)|`` applies (unit spacing between labels).
    """
    p, q = _pair(p, q)
    if ground is GroundDistance.TRIVIAL:
        return float(min(1.0, 1.0 - np.minimum(p, q).sum()))
    if ground is GroundDistance.ORDERED_LINE:
        return float(np.abs(np.cumsum(p - q)[:-1]).sum())
    raise ValidationError(f"unsupported ground distance {ground!r}")


def divergence(kind: DivergenceKind, p: ProbLike, q: ProbLike) -> float:
    """Dispatch on ``kind``."""
    if kind.name == "tv":
        return tv_distance(p, q)
    if kind.name == "renyi":
        return renyi_divergence(p, q, kind.beta)
    if kind.name == "hellinger":
        return hellinger_distance(p, q)
    if kind.name == "separation":
        return separation_distance(p, q)
    return wasserstein_distance(p, q, kind.ground)


def probability_preservation_bound(q: float, eps: float, beta: float) -> float:
    """Upper bound ``(e^eps * q)^((beta-1)/beta)`` on ``p(Z)``.

    Valid whenever ``q(Z) = q`` and ``D_beta(p || q) <= eps``. ``beta = inf``
    uses exponent 1. The value is not clamped to 1.
    """
    if not (beta > 1.0):
        raise ValidationError(f"beta must be > 1, got {beta!r}")
    if not (-_NEG_TOL <= q <= 1.0 + _NEG_TOL):
        raise ValidationError(f"q must be a probability, got {q!r}")
    if not (eps >= 0.0):
        raise ValidationError(f"eps must be >= 0, got {eps!r}")
    q = min(max(float(q), 0.0), 1.0)  # event sums may overshoot by rounding
    if math.isinf(eps):
        return math.inf
    expo = 1.0 if math.isinf(beta) else (beta - 1.0) / beta
    if q == 0.0:
        return 0.0
    z = expo * (eps + math.log(q))
    return math.inf if z > 700.0 else math.exp(z)


def tv_bound_from_renyi(eps: float) -> float:
    """Largest total variation compatible with a Renyi divergence of ``eps``.

    Minimum of the refined Pinsker branch ``1.5 * sqrt(sqrt(1 + 4 eps / 9) - 1)``
    and the Vajda branch ``tanh((eps + 1) / 2)``.
    """
    if not (eps >= 0.0):
        raise ValidationError(f"eps must be >= 0, got {eps!r}")
    if math.isinf(eps):
        return 1.0
    u = 4.0 * eps / 9.0
    # sqrt(1 + u) - 1 without cancellation for small u
    pinsker = 1.5 * math.sqrt(u / (math.sqrt(1.0 + u) + 1.0))
    vajda = math.tanh(0.5 * (eps + 1.0))
    return min(pinsker, vajda)


def shannon_entropy(p: ProbLike) -> float:
    """Entropy in nats with ``0 log 0 = 0``."""
    p = p.probs if isinstance(p, CategoricalDistribution) else CategoricalDistribution(p).probs
    nz = p[p > 0]
    return float(max(0.0, -np.dot(nz, np.log(nz))))

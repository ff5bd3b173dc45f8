"""
Risk-gap bounds for robust randomized classifiers and mode-preservation tests.

Every adversarial-risk bound here is an upper bound on ``R_adv(p; alpha)``
for ``p`` in the certified class, and is clamped to ``[clean_risk, 1]``
when combined in a :class:`RiskGapReport` (``tau = 0`` is always feasible).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .classifiers import (
    DistributionEstimate,
    RandomizedClassifier,
    mode_classifier,
    predict_distributions,
)
from .distributions import CategoricalDistribution, shannon_entropy
from .errors import ValidationError
from .smoothing import RobustnessCertificate

__all__ = [
    "RiskGapReport",
    "tv_risk_gap_bound",
    "renyi_multiplicative_bound",
    "renyi_additive_gap_bound",
    "estimate_exp_neg_entropy",
    "mode_preservation_tv",
    "mode_preservation_renyi",
    "low_confidence_mass_bound",
    "build_risk_gap_report",
]

# keeps the inclusive boundary inclusive under rounding (0.6 - 0.4 < 0.2 in binary)
_BOUNDARY_SLACK = 1e-12

MARGINAL_NOTE = "entropy term averaged over the empirical sample in place of D|X"


def _unit(name, v):
    if not (0.0 <= v <= 1.0):
        raise ValidationError(f"{name} must lie in [0, 1], got {v!r}")


def _nonneg(name, v):
    if not (v >= 0.0):
        raise ValidationError(f"{name} must be >= 0, got {v!r}")


def tv_risk_gap_bound(clean_risk: float, eps_tv: float) -> float:
    """``min(1, R + eps)`` for a TV-robust classifier."""
    _unit("clean_risk", clean_risk)
    _unit("eps_tv", eps_tv)
    return min(1.0, clean_risk + eps_tv)


def renyi_multiplicative_bound(clean_risk: float, eps: float, beta: float) -> float:
    """``min(1, (e^eps R)^((beta-1)/beta))`` for a Renyi-robust classifier, ``beta > 1``."""
    _unit("clean_risk", clean_risk)
    _nonneg("eps", eps)
    if not (beta > 1.0):
        raise ValidationError(f"the multiplicative bound needs beta > 1, got {beta!r}")
    if math.isinf(eps):
        return 1.0
    if clean_risk == 0.0:
        return 0.0
    expo = 1.0 if math.isinf(beta) else (beta - 1.0) / beta
    z = expo * (eps + math.log(clean_risk))
    return 1.0 if z >= 0.0 else math.exp(z)


def renyi_additive_gap_bound(eps: float, exp_neg_entropy: float) -> float:
    """Additive gap ``1 - e^{-eps} E[e^{-H(p(x))}]``; holds for every ``beta >= 1``."""
    _nonneg("eps", eps)
    _unit("exp_neg_entropy", exp_neg_entropy)
    return 1.0 - math.exp(-eps) * exp_neg_entropy


def estimate_exp_neg_entropy(
    clf: RandomizedClassifier, xs, m: int | None = None, threads: int = 1
) -> float:
    """Sample mean of ``exp(-H(p(x)))`` over ``xs``.

    ``m`` overrides the classifier's Monte-Carlo sample count; with ``m=None``
    the classifier's own evaluation mode (possibly exact) is used.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[0] == 0:
        raise ValidationError("need at least one point")
    probs, _ = predict_distributions(clf.with_samples(m), xs, threads=threads)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(probs > 0, probs * np.log(probs), 0.0)
    ent = np.clip(-plogp.sum(axis=1), 0.0, None)
    return float(np.mean(np.exp(-ent)))


def _probs_and_radius(dist, confidence_radius):
    if isinstance(dist, DistributionEstimate):
        return dist.dist.probs, max(confidence_radius, dist.confidence_radius)
    if isinstance(dist, CategoricalDistribution):
        return dist.probs, confidence_radius
    return CategoricalDistribution(dist).probs, confidence_radius


def _top_two(p):
    s = np.sort(p)
    return float(s[-1]), float(s[-2])


def mode_preservation_tv(dist, eps_tv: float, confidence_radius: float = 0.0) -> bool:
    """Whether ``p_(1) >= p_(2) + 2 eps`` (inclusive).

    For a Monte-Carlo estimate the observed margin is first reduced by twice
    its confidence radius.
    """
    _unit("eps_tv", eps_tv)
    p, r = _probs_and_radius(dist, confidence_radius)
    p1, p2 = _top_two(p)
    return p1 - p2 - 2.0 * r >= 2.0 * eps_tv - _BOUNDARY_SLACK


def mode_preservation_renyi(
    dist, eps: float, beta: float, confidence_radius: float = 0.0
) -> bool:
    """Whether ``p_(1)^(b/(b-1)) >= exp((2 - 1/b) eps) * p_(2)^((b-1)/b)``.

    ``beta = inf`` uses the limiting exponents (``p_(1) >= e^{2 eps} p_(2)``).
    Monte-Carlo estimates use ``p_(1) - r`` and ``p_(2) + r``.
    """
    _nonneg("eps", eps)
    if not (beta > 1.0):
        raise ValidationError(f"beta must be > 1, got {beta!r}")
    p, r = _probs_and_radius(dist, confidence_radius)
    p1, p2 = _top_two(p)
    p1, p2 = max(p1 - r, 0.0), min(p2 + r, 1.0)
    if math.isinf(eps):
        return False
    if math.isinf(beta):
        a, b, c = 1.0, 1.0, 2.0
    else:
        a, b, c = beta / (beta - 1.0), (beta - 1.0) / beta, 2.0 - 1.0 / beta
    return p1**a >= math.exp(c * eps) * p2**b - _BOUNDARY_SLACK


def low_confidence_mass_bound(
    clf: RandomizedClassifier, dataset, eps_tv: float, threads: int = 1
) -> float:
    """Fraction of points the mode gets right without a ``2 eps`` margin.

    These are the only points an adversary within the certified radius can
    flip, so the fraction bounds the extra risk of the mode classifier.
    """
    _unit("eps_tv", eps_tv)
    if len(dataset) == 0:
        raise ValidationError("dataset is empty")
    probs, radius = predict_distributions(clf, dataset.points, threads=threads)
    hits = 0
    for p, y in zip(probs, dataset.labels):
        if mode_classifier(p) == y and not mode_preservation_tv(p, eps_tv, radius):
            hits += 1
    return hits / len(dataset)


@dataclass(frozen=True)
class RiskGapReport:
    """Upper bounds on the adversarial risk at one certified radius."""

    clean_risk: float
    best_adv_risk_bound: float
    tv_gap: float | None = None
    renyi_mult_bound: float | None = None
    renyi_add_gap: float | None = None
    exp_neg_entropy: float | None = None
    radius: float | None = None
    note: str = MARGINAL_NOTE

    def to_dict(self) -> dict:
        return asdict(self)


def build_risk_gap_report(
    clean_risk: float,
    cert_tv: RobustnessCertificate | None = None,
    cert_renyi: RobustnessCertificate | None = None,
    exp_neg_entropy: float | None = None,
) -> RiskGapReport:
    """Combine every applicable bound and keep the smallest.

    The TV bound needs ``cert_tv``; the multiplicative bound needs a Renyi
    certificate of order ``> 1``; the additive bound needs a Renyi certificate
    (any order) and ``exp_neg_entropy``.
    """
    _unit("clean_risk", clean_risk)
    if cert_tv is not None and cert_tv.divergence.name != "tv":
        raise ValidationError(f"expected a TV certificate, got {cert_tv.divergence}")
    if cert_renyi is not None and cert_renyi.divergence.name != "renyi":
        raise ValidationError(f"expected a Renyi certificate, got {cert_renyi.divergence}")
    if cert_tv is not None and cert_renyi is not None:
        if not math.isclose(cert_tv.radius, cert_renyi.radius, rel_tol=1e-12, abs_tol=1e-15):
            raise ValidationError(
                f"certificates disagree on the radius: {cert_tv.radius} vs {cert_renyi.radius}"
            )
    candidates = []
    tv_gap = mult = add = None
    if cert_tv is not None:
        tv_gap = cert_tv.epsilon
        candidates.append(tv_risk_gap_bound(clean_risk, tv_gap))
    if cert_renyi is not None:
        beta = cert_renyi.divergence.beta
        if beta > 1.0:
            mult = renyi_multiplicative_bound(clean_risk, cert_renyi.epsilon, beta)
            candidates.append(mult)
        if exp_neg_entropy is not None:
            add = renyi_additive_gap_bound(cert_renyi.epsilon, exp_neg_entropy)
            candidates.append(clean_risk + add)
    best = min(candidates) if candidates else 1.0
    best = min(1.0, max(clean_risk, best))
    radius = cert_tv.radius if cert_tv is not None else (cert_renyi.radius if cert_renyi else None)
    return RiskGapReport(
        clean_risk=clean_risk,
        best_adv_risk_bound=best,
        tv_gap=tv_gap,
        renyi_mult_bound=mult,
        renyi_add_gap=add,
        exp_neg_entropy=exp_neg_entropy,
        radius=radius,
    )

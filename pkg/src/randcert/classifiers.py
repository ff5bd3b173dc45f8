"""
Randomized classifiers ``x -> h # N(x, Sigma)`` built from deterministic bases.

Output distributions are computed either exactly (closed forms for binary
linear models under isotropic noise, Gaussian cell masses for label grids in
one or two dimensions) or by Monte Carlo with Hoeffding confidence radii.

Monte-Carlo noise is drawn from a counter-based Philox stream keyed by
``(seed, point_index)``; sample ``j`` is the ``j``-th draw of that stream, so
results never depend on evaluation order or thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Union

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import ndtr

from .distributions import CategoricalDistribution
from .errors import CapabilityError, DimensionError, ValidationError
from .smoothing import GaussianNoiseSpec

__all__ = [
    "LinearClassifier",
    "GridTableClassifier",
    "Exact",
    "MonteCarlo",
    "RandomizedClassifier",
    "DistributionEstimate",
    "HOEFFDING_DELTA",
    "hoeffding_radius",
    "noise_rng",
    "predict_distribution",
    "predict_distributions",
    "mode_classifier",
    "sample_prediction",
    "expected_01_loss",
    "model_from_dict",
    "model_to_dict",
]

HOEFFDING_DELTA = 1e-3


# --------------------------------------------------------------------------
# deterministic bases


@dataclass(frozen=True, eq=False)
class LinearClassifier:
    """``h(x) = argmax_k (W x + b)_k``, ties to the smallest index.

    A binary model may be given by a single weight vector ``w`` (shape ``(d,)``
    or ``(1, d)``) and scalar bias: class 1 iff ``w.x + b > 0``.
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        b = np.array(self.bias, dtype=float).reshape(-1)
        if w.ndim == 1:
            w = w[None, :]
        if w.ndim != 2 or w.shape[1] == 0:
            raise ValidationError(f"weights must be (K, d), got shape {w.shape}")
        if w.shape[0] == 1:
            w = np.vstack([np.zeros_like(w), w])
            b = np.concatenate([[0.0], b if b.size else [0.0]])
        if b.size != w.shape[0]:
            raise DimensionError(f"bias has {b.size} entries for {w.shape[0]} classes")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValidationError("weights and bias must be finite")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def scores(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.weights.T + self.bias

    def predict(self, x) -> np.ndarray:
        """Labels for points stacked along the last axis."""
        return np.argmax(self.scores(x), axis=-1)

    def binary_direction(self) -> tuple[np.ndarray, float]:
        """``(w, b)`` such that class 1 wins iff ``w.x + b > 0`` (K = 2 only)."""
        if self.n_classes != 2:
            raise CapabilityError("binary direction needs exactly two classes")
        return self.weights[1] - self.weights[0], float(self.bias[1] - self.bias[0])

    def to_dict(self) -> dict:
        return {"variant": "linear", "weights": self.weights.tolist(), "bias": self.bias.tolist()}


@dataclass(frozen=True, eq=False)
class GridTableClassifier:
    """Piecewise-constant classifier on an axis-aligned lattice (d = 1 or 2).

    ``labels[i0, i1]`` is the label of the cell
    ``[lower + i * cell_size, lower + (i + 1) * cell_size)``. Points outside
    the lattice take the label of the nearest boundary cell, so the grid
    extends to all of ``R^d`` (needed under unbounded noise).
    """

    labels: np.ndarray
    lower: np.ndarray
    cell_size: np.ndarray
    n_classes: int = 0

    def __post_init__(self):
        lab = np.array(self.labels)
        if lab.ndim not in (1, 2) or lab.size == 0:
            raise ValidationError("labels must be a non-empty 1-D or 2-D lattice")
        if not np.issubdtype(lab.dtype, np.integer):
            if not np.all(lab == np.round(lab)):
                raise ValidationError("grid labels must be integers")
            lab = lab.astype(int)
        d = lab.ndim
        lo = np.broadcast_to(np.array(self.lower, dtype=float), (d,)).copy()
        cs = np.broadcast_to(np.array(self.cell_size, dtype=float), (d,)).copy()
        if np.any(cs <= 0) or not np.all(np.isfinite(cs)) or not np.all(np.isfinite(lo)):
            raise ValidationError("cell sizes must be positive and bounds finite")
        k = int(self.n_classes) or int(lab.max()) + 1
        if lab.min() < 0 or lab.max() >= k:
            raise ValidationError(f"grid labels must lie in [0, {k})")
        k = max(k, 2)
        for a in (lab, lo, cs):
            a.setflags(write=False)
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "cell_size", cs)
        object.__setattr__(self, "n_classes", k)

    @property
    def dim(self) -> int:
        return self.labels.ndim

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.cell_size * np.array(self.labels.shape)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionError(f"grid is {self.dim}-D, input is {x.shape[-1]}-D")
        idx = np.floor((x - self.lower) / self.cell_size).astype(int)
        idx = np.clip(idx, 0, np.array(self.labels.shape) - 1)
        return self.labels[tuple(np.moveaxis(idx, -1, 0))]

    def edges(self, axis: int) -> np.ndarray:
        n = self.labels.shape[axis]
        return self.lower[axis] + self.cell_size[axis] * np.arange(n + 1)

    def to_dict(self) -> dict:
        return {
            "variant": "grid",
            "labels": self.labels.tolist(),
            "lower": self.lower.tolist(),
            "cell_size": self.cell_size.tolist(),
            "n_classes": self.n_classes,
        }


DeterministicClassifier = Union[LinearClassifier, GridTableClassifier]


# --------------------------------------------------------------------------
# randomized wrapper


@dataclass(frozen=True)
class Exact:
    """Closed-form / quadrature evaluation of the output distribution."""


@dataclass(frozen=True)
class MonteCarlo:
    m: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if int(self.m) < 1:
            raise ValidationError(f"Monte-Carlo sample count must be >= 1, got {self.m!r}")


@dataclass(frozen=True)
class RandomizedClassifier:
    """``x -> base # N(x, noise)``; a Dirac on ``base(x)`` when ``noise`` is None."""

    base: DeterministicClassifier
    noise: GaussianNoiseSpec | None = None
    eval_mode: Exact | MonteCarlo = MonteCarlo()

    def __post_init__(self):
        if isinstance(self.eval_mode, Exact) and not self.supports_exact():
            raise CapabilityError(
                "exact evaluation needs no noise, a binary linear base with isotropic "
                "noise, or a grid base in at most two dimensions"
            )

    @property
    def n_classes(self) -> int:
        return self.base.n_classes

    @property
    def is_exact(self) -> bool:
        return self.noise is None or isinstance(self.eval_mode, Exact)

    def supports_exact(self) -> bool:
        if self.noise is None:
            return True
        if isinstance(self.base, LinearClassifier):
            return self.base.n_classes == 2 and self.noise.is_isotropic
        return isinstance(self.base, GridTableClassifier) and self.base.dim <= 2

    def with_samples(self, m: int | None) -> "RandomizedClassifier":
        """Same classifier evaluated by Monte Carlo with ``m`` samples (``None``: unchanged)."""
        if m is None:
            return self
        seed = self.eval_mode.seed if isinstance(self.eval_mode, MonteCarlo) else 0
        return replace(self, eval_mode=MonteCarlo(int(m), seed))


@dataclass(frozen=True)
class DistributionEstimate:
    """Output distribution with a simultaneous per-coordinate confidence radius."""

    dist: CategoricalDistribution
    confidence_radius: float = 0.0
    m: int = 0

    @property
    def is_exact(self) -> bool:
        return self.confidence_radius == 0.0


def hoeffding_radius(m: int, k: int, delta: float = HOEFFDING_DELTA) -> float:
    """Two-sided Hoeffding radius, union bound over ``k`` classes."""
    return math.sqrt(math.log(2.0 * k / delta) / (2.0 * m))


def noise_rng(seed: int, point_index: int) -> np.random.Generator:
    """Counter-based stream for the noise draws of one point."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(point_index),))
    return np.random.Generator(np.random.Philox(ss))


def _check_point(clf: RandomizedClassifier, x: np.ndarray):
    base = clf.base
    if x.ndim != 1:
        raise DimensionError(f"expected a single d-vector, got shape {x.shape}")
    if x.size != base.dim:
        raise DimensionError(f"classifier is {base.dim}-D, input is {x.size}-D")
    if not np.all(np.isfinite(x)):
        raise ValidationError("input must be finite")


def _exact_linear_probs(base: LinearClassifier, sigma: float, xs: np.ndarray) -> np.ndarray:
    w, b = base.binary_direction()
    wn = float(np.linalg.norm(w))
    s = xs @ w + b
    if wn == 0.0:
        p1 = (s > 0).astype(float)
    else:
        p1 = ndtr(s / (sigma * wn))
    return np.stack([1.0 - p1, p1], axis=-1)


def _axis_masses(edges: np.ndarray, center: float, scale: float) -> np.ndarray:
    cdf = ndtr((edges[1:-1] - center) / scale)
    cdf = np.concatenate([[0.0], cdf, [1.0]])
    return np.diff(cdf)


def _exact_grid_probs(base: GridTableClassifier, noise: GaussianNoiseSpec, x: np.ndarray) -> np.ndarray:
    k = base.n_classes
    if noise.is_isotropic:
        scales = np.full(base.dim, noise.iso_sigma)
        diagonal = True
    else:
        noise.check_dim(base.dim)
        cov = noise.covariance
        scales = np.sqrt(np.diag(cov))
        diagonal = base.dim == 1 or cov[0, 1] == 0.0
    if diagonal:
        masses = _axis_masses(base.edges(0), x[0], scales[0])
        for ax in range(1, base.dim):
            masses = np.multiply.outer(masses, _axis_masses(base.edges(ax), x[ax], scales[ax]))
    else:
        # integrate the first coordinate; the second is conditionally Gaussian
        cov = noise.covariance
        s0, s1 = scales
        rho = cov[0, 1] / (s0 * s1)
        cond_sd = s1 * math.sqrt(1.0 - rho * rho)
        e0, e1 = base.edges(0), base.edges(1)
        inner = e1[1:-1]

        def column(u):
            mu = x[1] + rho * s1 * u
            c = ndtr((inner - mu) / cond_sd)
            return np.diff(np.concatenate([[0.0], c, [1.0]])) * math.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)

        lims = np.concatenate([[-np.inf], (e0[1:-1] - x[0]) / s0, [np.inf]])
        masses = np.empty(base.labels.shape)
        for i in range(base.labels.shape[0]):
            lo, hi = lims[i], lims[i + 1]
            masses[i] = quad_vec(column, lo, hi, epsabs=1e-13, epsrel=1e-10)[0]
    probs = np.bincount(base.labels.ravel(), weights=masses.ravel(), minlength=k)
    return np.clip(probs, 0.0, None) / probs.sum()


def _point_estimate(clf: RandomizedClassifier, x: np.ndarray, point_index: int) -> tuple[np.ndarray, float, int]:
    base, k = clf.base, clf.n_classes
    if clf.noise is None:
        p = np.zeros(k)
        p[int(base.predict(x))] = 1.0
        return p, 0.0, 0
    if isinstance(clf.eval_mode, Exact):
        if isinstance(base, LinearClassifier):
            return _exact_linear_probs(base, clf.noise.iso_sigma, x[None, :])[0], 0.0, 0
        return _exact_grid_probs(base, clf.noise, x), 0.0, 0
    m, seed = int(clf.eval_mode.m), clf.eval_mode.seed
    z = clf.noise.sample(noise_rng(seed, point_index), m, x.size)
    counts = np.bincount(base.predict(x + z), minlength=k)
    return counts / m, hoeffding_radius(m, k), m


def predict_distribution(clf: RandomizedClassifier, x, point_index: int = 0) -> DistributionEstimate:
    """Output distribution of ``clf`` at ``x``.

    ``point_index`` selects the Monte-Carlo noise stream; datasets use the row
    index so that every point gets its own reproducible draws.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_point(clf, x)
    p, radius, m = _point_estimate(clf, x, point_index)
    return DistributionEstimate(CategoricalDistribution(p), radius, m)


def predict_distributions(
    clf: RandomizedClassifier, xs, threads: int = 1, offset: int = 0
) -> tuple[np.ndarray, float]:
    """Batch version returning ``(probs, confidence_radius)`` with ``probs`` of shape ``(n, K)``.

    Row ``i`` uses noise stream ``offset + i``. Results are identical for any
    ``threads``.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2:
        raise DimensionError(f"expected an (n, d) array, got shape {xs.shape}")
    if xs.shape[1] != clf.base.dim:
        raise DimensionError(f"classifier is {clf.base.dim}-D, inputs are {xs.shape[1]}-D")
    if (
        clf.noise is not None
        and isinstance(clf.eval_mode, Exact)
        and isinstance(clf.base, LinearClassifier)
    ):
        return _exact_linear_probs(clf.base, clf.noise.iso_sigma, xs), 0.0
    if clf.noise is None:
        k = clf.n_classes
        return np.eye(k)[clf.base.predict(xs)], 0.0

    def one(i):
        return _point_estimate(clf, xs[i], offset + i)

    idx = range(xs.shape[0])
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            out = list(ex.map(one, idx))
    else:
        out = [one(i) for i in idx]
    probs = np.array([o[0] for o in out]).reshape(xs.shape[0], clf.n_classes)
    radius = out[0][1] if out else 0.0
    return probs, radius


def mode_classifier(est) -> int:
    """Most probable label; ties go to the smallest index."""
    if isinstance(est, DistributionEstimate):
        est = est.dist
    p = est.probs if isinstance(est, CategoricalDistribution) else np.asarray(est, dtype=float)
    return int(np.argmax(p))


def sample_prediction(clf: RandomizedClassifier, x, seed: int) -> int:
    """One label drawn from ``clf``'s output distribution at ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_point(clf, x)
    if clf.noise is None:
        return int(clf.base.predict(x))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    z = clf.noise.sample(rng, 1, x.size)[0]
    return int(clf.base.predict(x + z))


def expected_01_loss(est, y: int) -> float:
    """Probability of predicting anything but ``y``."""
    if isinstance(est, DistributionEstimate):
        est = est.dist
    p = est.probs if isinstance(est, CategoricalDistribution) else np.asarray(est, dtype=float)
    if not (0 <= int(y) < p.size) or int(y) != y:
        raise ValidationError(f"label {y!r} out of range for {p.size} classes")
    return float(min(1.0, max(0.0, 1.0 - p[int(y)])))


# --------------------------------------------------------------------------
# model files


def model_to_dict(clf) -> dict:
    """JSON-ready description of a base or randomized classifier."""
    if isinstance(clf, RandomizedClassifier):
        d = clf.base.to_dict()
        if clf.noise is not None:
            d["noise"] = clf.noise.to_dict()
        return d
    return clf.to_dict()


def model_from_dict(d: dict, eval_mode: Exact | MonteCarlo | None = None) -> RandomizedClassifier:
    """Inverse of :func:`model_to_dict`.

    Without an explicit ``eval_mode`` the classifier is exact when that is
    supported and Monte Carlo with default settings otherwise.
    """
    variant = d.get("variant")
    if variant == "linear":
        base = LinearClassifier(d["weights"], d.get("bias", [0.0]))
    elif variant == "grid":
        base = GridTableClassifier(
            d["labels"], d["lower"], d["cell_size"], int(d.get("n_classes", 0))
        )
    else:
        raise ValidationError(f"unknown model variant {variant!r}")
    if d.get("noise"):
        noise = GaussianNoiseSpec.from_dict(d["noise"])
    elif "sigma" in d or "covariance" in d:
        noise = GaussianNoiseSpec.from_dict(d)  # noise keys given inline
    else:
        noise = None
    if eval_mode is None:
        probe = RandomizedClassifier(base, noise, MonteCarlo())
        eval_mode = Exact() if probe.supports_exact() else MonteCarlo()
    return RandomizedClassifier(base, noise, eval_mode)

"""
Synthetic benchmarks and empirical checks of the certificates.

The attack here is a random-restart local search: it produces a *lower*
bound on the adversarial risk, to be compared against the certified *upper*
bounds from :mod:`randcert.bounds`.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import build_risk_gap_report, estimate_exp_neg_entropy
from .classifiers import (
    Exact,
    LinearClassifier,
    MonteCarlo,
    RandomizedClassifier,
    noise_rng,
    predict_distributions,
)
from .errors import DimensionError, ValidationError
from .generalization import parse_norm_order
from .smoothing import GaussianNoiseSpec, certify_gaussian_preprocessing

__all__ = [
    "LabeledDataset",
    "AttackBudget",
    "CurveRow",
    "BenchmarkConfig",
    "generate_mixture_dataset",
    "fit_least_squares_linear",
    "benchmark_problem",
    "empirical_risk",
    "attack_point",
    "empirical_adversarial_risk",
    "guaranteed_accuracy_curve",
    "curve_crossover",
    "noise_accuracy_sweep",
    "CURVE_HEADER",
    "curve_to_csv",
]


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """``n`` points in ``[-1, 1]^d`` with labels in ``[0, K)``."""

    points: np.ndarray
    labels: np.ndarray
    n_classes: int = 0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        lab = np.array(self.labels).reshape(-1)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValidationError("dataset needs at least one point")
        if lab.size != pts.shape[0]:
            raise DimensionError(f"{pts.shape[0]} points but {lab.size} labels")
        if not np.all(np.isfinite(pts)) or np.any(np.abs(pts) > 1.0):
            raise ValidationError("coordinates must lie in [-1, 1]")
        if not np.all(lab == np.round(lab)):
            raise ValidationError("labels must be integers")
        lab = lab.astype(int)
        k = int(self.n_classes) or max(2, int(lab.max()) + 1)
        if lab.min() < 0 or lab.max() >= k:
            raise ValidationError(f"labels must lie in [0, {k})")
        pts.setflags(write=False)
        lab.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "n_classes", k)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class AttackBudget:
    random_restarts: int = 8
    refinement_steps: int = 10
    mc_samples_per_query: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.random_restarts < 1 or self.mc_samples_per_query < 1 or self.refinement_steps < 0:
            raise ValidationError(f"invalid attack budget {self!r}")


@dataclass(frozen=True)
class CurveRow:
    alpha2: float
    eps_tv: float
    eps_renyi: float
    clean_acc: float
    guaranteed_acc: float
    empirical_attacked_acc: float | None = None


@dataclass(frozen=True)
class BenchmarkConfig:
    """Two Gaussian blobs in the plane and a least-squares linear base."""

    n: int = 1000
    d: int = 2
    centers: tuple = ((-0.5, 0.0), (0.5, 0.0))
    sigma_data: float = 0.2
    seed: int = 0


# --------------------------------------------------------------------------
# data


def generate_mixture_dataset(n: int, d: int, centers, sigma_data: float, seed: int) -> LabeledDataset:
    """Balanced Gaussian blobs clipped to ``[-1, 1]^d``; label = blob index.

    When ``n`` is not a multiple of the number of blobs the first blobs get
    one extra point.
    """
    c = np.asarray(centers, dtype=float)
    if c.ndim != 2 or c.shape[1] != d:
        raise ValidationError(f"centers must have shape (k, {d})")
    k = c.shape[0]
    if k < 2 or n < k:
        raise ValidationError(f"need >= 2 centers and n >= {k}")
    if len({tuple(row) for row in c}) != k:
        raise ValidationError("centers must be distinct")
    if not (sigma_data >= 0.0):
        raise ValidationError(f"sigma_data must be >= 0, got {sigma_data!r}")
    counts = np.full(k, n // k)
    counts[: n % k] += 1
    labels = np.repeat(np.arange(k), counts)
    rng = np.random.default_rng(seed)
    pts = c[labels] + sigma_data * rng.standard_normal((n, d))
    pts = np.clip(pts, -1.0, 1.0)
    prov = {
        "generator": "gaussian_mixture",
        "n": n,
        "d": d,
        "centers": c.tolist(),
        "sigma_data": sigma_data,
        "seed": seed,
    }
    return LabeledDataset(pts, labels, k, prov)


def fit_least_squares_linear(dataset: LabeledDataset) -> LinearClassifier:
    """Closed-form least-squares linear base.

    Binary problems regress ``+-1`` targets; ``K > 2`` regresses one-hot
    targets, one column per class.
    """
    x = np.hstack([dataset.points, np.ones((len(dataset), 1))])
    k = dataset.n_classes
    if k == 2:
        t = np.where(dataset.labels == 1, 1.0, -1.0)
        coef = np.linalg.lstsq(x, t, rcond=None)[0]
        return LinearClassifier(coef[:-1], [coef[-1]])
    t = np.eye(k)[dataset.labels]
    coef = np.linalg.lstsq(x, t, rcond=None)[0]
    return LinearClassifier(coef[:-1].T, coef[-1])


def benchmark_problem(config: BenchmarkConfig = BenchmarkConfig()) -> tuple[LabeledDataset, LinearClassifier]:
    data = generate_mixture_dataset(config.n, config.d, config.centers, config.sigma_data, config.seed)
    return data, fit_least_squares_linear(data)


# --------------------------------------------------------------------------
# risks


def _mean_se(losses: np.ndarray) -> tuple[float, float]:
    n = losses.size
    se = float(np.std(losses, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(np.mean(losses)), se


def empirical_risk(
    clf: RandomizedClassifier, dataset: LabeledDataset, m: int | None = None, threads: int = 1
) -> tuple[float, float]:
    """Mean expected 0/1 loss and its standard error across points.

    ``m`` overrides the Monte-Carlo sample count; ``None`` keeps the
    classifier's evaluation mode.
    """
    if len(dataset) == 0:
        raise ValidationError("dataset is empty")
    probs, _ = predict_distributions(clf.with_samples(m), dataset.points, threads=threads)
    losses = 1.0 - probs[np.arange(len(dataset)), dataset.labels]
    return _mean_se(np.clip(losses, 0.0, 1.0))


def _ball_samples(rng, count, d, alpha, p) -> np.ndarray:
    """Uniform draws from the ``l_p`` ball of radius ``alpha`` (p in {1, 2, inf})."""
    if math.isinf(p):
        return rng.uniform(-alpha, alpha, size=(count, d))
    if p == 2.0:
        g = rng.standard_normal((count, d))
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        r = alpha * rng.random(count) ** (1.0 / d)
        return g * r[:, None]
    # l1: uniform on the simplex of dimension d (one slack coordinate), random signs
    e = rng.exponential(size=(count, d + 1))
    e /= e.sum(axis=1, keepdims=True)
    signs = rng.choice([-1.0, 1.0], size=(count, d))
    return alpha * e[:, :d] * signs


def _project(tau: np.ndarray, x: np.ndarray, alpha: float, p: float) -> np.ndarray:
    """Map candidates into the ball, then into the box (the box step only shrinks |tau_i|)."""
    if math.isinf(p):
        tau = np.clip(tau, -alpha, alpha)
    else:
        norms = np.linalg.norm(tau, ord=p, axis=-1, keepdims=True)
        scale = np.where(norms > alpha, alpha / np.maximum(norms, 1e-300), 1.0)
        tau = tau * scale
    return np.clip(x + tau, -1.0, 1.0) - x


def _to_surface(tau: np.ndarray, alpha: float, p: float) -> np.ndarray:
    norms = np.linalg.norm(tau, ord=p, axis=-1, keepdims=True)
    return np.where(norms > 0, tau * (alpha / np.maximum(norms, 1e-300)), tau)


class _LossOracle:
    """Expected 0/1 loss at ``x + tau`` for batches of ``tau``.

    Monte-Carlo classifiers reuse one fixed noise sample for every query
    (common random numbers), so candidate comparisons are not swamped by
    sampling noise.
    """

    def __init__(self, clf: RandomizedClassifier, x, y, budget: AttackBudget, point_index: int):
        self.clf, self.x, self.y = clf, x, int(y)
        self.noise = self.noise_scores = self.margins = None
        if clf.noise is not None and not isinstance(clf.eval_mode, Exact):
            m = budget.mc_samples_per_query
            self.noise = clf.noise.sample(noise_rng(budget.seed, point_index), m, x.size)
            if isinstance(clf.base, LinearClassifier):
                # scores are affine, so the noise contribution is computed once
                self.noise_scores = self.noise @ clf.base.weights.T
                if clf.n_classes == 2:
                    self.margins = np.sort(self.noise_scores[:, 1] - self.noise_scores[:, 0])

    def __call__(self, taus: np.ndarray) -> np.ndarray:
        pts = self.x + taus
        if self.margins is not None:
            # class 1 iff noise margin > -(clean margin); ties go to class 0
            s = self.clf.base.scores(pts)
            m = self.margins.size
            frac1 = (m - np.searchsorted(self.margins, s[:, 0] - s[:, 1], side="right")) / m
            return frac1 if self.y == 0 else 1.0 - frac1
        if self.noise_scores is not None:
            s = self.clf.base.scores(pts)
            labels = np.argmax(s[:, None, :] + self.noise_scores[None, :, :], axis=-1)
            return np.mean(labels != self.y, axis=1)
        if self.noise is not None:
            labels = self.clf.base.predict(pts[:, None, :] + self.noise[None, :, :])
            return np.mean(labels != self.y, axis=1)
        probs, _ = predict_distributions(self.clf, pts)
        return np.clip(1.0 - probs[:, self.y], 0.0, 1.0)


def _search_rng(seed: int, point_index: int, restart: int) -> np.random.Generator:
    # one stream per restart, so a larger budget replays the smaller one's starts
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(point_index), 1, int(restart)))
    return np.random.Generator(np.random.Philox(ss))


def attack_point(
    clf: RandomizedClassifier,
    x,
    y: int,
    alpha: float,
    p=2,
    budget: AttackBudget = AttackBudget(),
    point_index: int = 0,
) -> tuple[np.ndarray, float]:
    """Search the ``l_p`` ball for a perturbation maximizing the expected loss.

    Each restart starts from a uniform draw in the ball and runs
    ``refinement_steps`` rounds of coordinate moves plus a radial push to the
    sphere, halving the step whenever no candidate improves. Every candidate
    stays inside the ball and keeps ``x + tau`` inside ``[-1, 1]^d``.

    Returns ``(tau, loss)``; ``loss`` is a lower bound on the worst case.
    """
    p = parse_norm_order(p)
    if p not in (1.0, 2.0, math.inf):
        raise ValidationError(f"attack supports l1, l2 and linf only, got p={p!r}")
    if not (alpha >= 0.0 and math.isfinite(alpha)):
        raise ValidationError(f"alpha must be >= 0, got {alpha!r}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != clf.base.dim:
        raise DimensionError(f"classifier is {clf.base.dim}-D, input is {x.size}-D")
    if not (0 <= y < clf.n_classes):
        raise ValidationError(f"label {y!r} out of range")
    d = x.size
    if alpha == 0.0:
        # singleton ball: the clean loss under the classifier's own evaluation
        probs, _ = predict_distributions(clf, x[None, :], offset=point_index)
        return np.zeros(d), float(np.clip(1.0 - probs[0, int(y)], 0.0, 1.0))
    oracle = _LossOracle(clf, x, y, budget, point_index)
    best_tau = np.zeros(d)
    best_loss = float(oracle(best_tau[None, :])[0])

    starts = np.vstack(
        [_ball_samples(_search_rng(budget.seed, point_index, r), 1, d, alpha, p) for r in range(budget.random_restarts)]
    )
    starts = _project(starts, x, alpha, p)
    start_loss = oracle(starts)
    basis = np.vstack([np.eye(d), -np.eye(d)])
    for tau, loss in zip(starts, start_loss):
        step = alpha / 2.0
        for _ in range(budget.refinement_steps):
            cands = np.vstack([tau + step * basis, _to_surface(tau[None, :], alpha, p)])
            cands = _project(cands, x, alpha, p)
            losses = oracle(cands)
            j = int(np.argmax(losses))
            if losses[j] > loss:
                tau, loss = cands[j], float(losses[j])
            else:
                step *= 0.5
        if loss > best_loss:
            best_tau, best_loss = tau, float(loss)
    return best_tau, best_loss


def _map_points(fn, n: int, threads: int) -> list:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, range(n)))
    return [fn(i) for i in range(n)]


def empirical_adversarial_risk(
    clf: RandomizedClassifier,
    dataset: LabeledDataset,
    alpha: float,
    p=2,
    budget: AttackBudget = AttackBudget(),
    threads: int = 1,
) -> tuple[float, float]:
    """Mean attacked loss and its standard error (a lower bound on ``R_adv``)."""
    if len(dataset) == 0:
        raise ValidationError("dataset is empty")

    def one(i):
        return attack_point(clf, dataset.points[i], dataset.labels[i], alpha, p, budget, i)[1]

    return _mean_se(np.array(_map_points(one, len(dataset), threads)))


# --------------------------------------------------------------------------
# curves


def _randomize(base, sigma: float, m: int | None, seed: int) -> RandomizedClassifier:
    noise = GaussianNoiseSpec.isotropic(sigma) if sigma > 0 else None
    if m is None:
        return RandomizedClassifier(base, noise, Exact())
    return RandomizedClassifier(base, noise, MonteCarlo(int(m), seed))


def guaranteed_accuracy_curve(
    base,
    dataset: LabeledDataset,
    sigma: float,
    beta: float,
    alpha_grid,
    m: int | None = 10_000,
    seed: int = 0,
    attack_budget: AttackBudget | None = None,
    threads: int = 1,
) -> list[CurveRow]:
    """Certified accuracy lower bound of ``base # N(x, sigma^2 I)`` along ``alpha_grid``.

    ``m=None`` evaluates the output distributions exactly (when supported).
    With an ``attack_budget`` each row also carries the accuracy under the
    empirical attack, which must never fall below ``guaranteed_acc`` beyond
    sampling error.
    """
    grid = np.asarray(alpha_grid, dtype=float).reshape(-1)
    if grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) < 0) or not np.all(np.isfinite(grid)):
        raise ValidationError("alpha grid must be non-empty, finite, non-negative and sorted")
    if not (sigma > 0.0):
        raise ValidationError(f"sigma must be > 0, got {sigma!r}")
    clf = _randomize(base, sigma, m, seed)
    clean_risk, _ = empirical_risk(clf, dataset, threads=threads)
    ent = estimate_exp_neg_entropy(clf, dataset.points, threads=threads)
    rows = []
    for a in grid:
        cert_renyi, cert_tv = certify_gaussian_preprocessing(sigma, float(a), beta)
        report = build_risk_gap_report(clean_risk, cert_tv, cert_renyi, ent)
        attacked = None
        if attack_budget is not None:
            adv, _ = empirical_adversarial_risk(clf, dataset, float(a), 2, attack_budget, threads)
            attacked = 1.0 - adv
        rows.append(
            CurveRow(
                alpha2=float(a),
                eps_tv=cert_tv.epsilon,
                eps_renyi=cert_renyi.epsilon,
                clean_acc=1.0 - clean_risk,
                guaranteed_acc=max(0.0, 1.0 - report.best_adv_risk_bound),
                empirical_attacked_acc=attacked,
            )
        )
    return rows


def curve_crossover(rows_low_sigma: list[CurveRow], rows_high_sigma: list[CurveRow]) -> float | None:
    """First ``alpha2`` where the low-noise curve drops strictly below the high-noise one."""
    for a, b in zip(rows_low_sigma, rows_high_sigma):
        if a.alpha2 != b.alpha2:
            raise ValidationError("curves must share the alpha grid")
        if a.guaranteed_acc < b.guaranteed_acc:
            return a.alpha2
    return None


CURVE_HEADER = "alpha2,eps_tv,eps_renyi,clean_acc,guaranteed_acc,attacked_acc"


def curve_to_csv(rows: list[CurveRow]) -> str:
    lines = [CURVE_HEADER]
    for r in rows:
        att = "" if r.empirical_attacked_acc is None else repr(r.empirical_attacked_acc)
        lines.append(
            ",".join(
                [repr(r.alpha2), repr(r.eps_tv), repr(r.eps_renyi), repr(r.clean_acc), repr(r.guaranteed_acc), att]
            )
        )
    return "\n".join(lines) + "\n"


def noise_accuracy_sweep(
    base, dataset: LabeledDataset, sigma_grid, m: int | None = 10_000, seed: int = 0, threads: int = 1
) -> list[tuple[float, float]]:
    """Clean accuracy of ``base # N(x, sigma^2 I)`` for each sigma (``0`` = no noise)."""
    sig = np.asarray(sigma_grid, dtype=float).reshape(-1)
    if sig.size == 0 or np.any(sig < 0) or np.any(np.diff(sig) < 0):
        raise ValidationError("sigma grid must be non-empty, non-negative and sorted")
    out = []
    for s in sig:
        risk, _ = empirical_risk(_randomize(base, float(s), m, seed), dataset, threads=threads)
        out.append((float(s), 1.0 - risk))
    return out

"""
Covering numbers of finite point sets and Rademacher-based generalization bounds.

Covers are point-centered: centers are drawn from the input points. A
point-centered cover is also an external cover, so its size upper-bounds the
external covering number and can be plugged into the Rademacher bound, which
is increasing in that number.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .distributions import tv_bound_from_renyi
from .errors import CapabilityError, ValidationError

__all__ = [
    "CoveringResult",
    "EXACT_COVER_MAX_POINTS",
    "parse_norm_order",
    "pairwise_distances",
    "is_valid_cover",
    "covering_greedy",
    "covering_exact",
    "rademacher_bound_tv",
    "rademacher_bound_renyi",
    "generalization_gap_bound",
    "adversarial_generalization_bound",
]

EXACT_COVER_MAX_POINTS = 12

# absorbs rounding when a neighbour sits exactly on the sphere (closed balls)
_COVER_SLACK = 1e-12


@dataclass(frozen=True)
class CoveringResult:
    n_balls: int
    centers: np.ndarray
    radius: float
    norm_order: float
    exact: bool
    center_indices: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "n_balls": self.n_balls,
            "centers": np.asarray(self.centers).tolist(),
            "radius": self.radius,
            "norm": "inf" if math.isinf(self.norm_order) else self.norm_order,
            "exact": self.exact,
        }


def parse_norm_order(p) -> float:
    """Accept ``1``, ``2``, ``inf``/``"inf"`` or any real ``p >= 1``."""
    if isinstance(p, str):
        p = p.strip().lower()
        p = math.inf if p in ("inf", "infinity", "max") else float(p)
    p = float(p)
    if not (p >= 1.0):
        raise ValidationError(f"norm order must be >= 1, got {p!r}")
    return p


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValidationError("need a non-empty (n, d) set of points")
    if not np.all(np.isfinite(pts)):
        raise ValidationError("points must be finite")
    return pts


def pairwise_distances(points, p=2) -> np.ndarray:
    pts = _as_points(points)
    return np.linalg.norm(pts[:, None, :] - pts[None, :, :], ord=parse_norm_order(p), axis=-1)


def _within(points, centers, alpha, p) -> np.ndarray:
    """Boolean ``(n_points, n_centers)`` coverage matrix."""
    dist = np.linalg.norm(points[:, None, :] - centers[None, :, :], ord=p, axis=-1)
    return dist <= alpha * (1.0 + _COVER_SLACK) + _COVER_SLACK


def is_valid_cover(points, result: CoveringResult) -> bool:
    """Post-hoc check that every point lies within ``radius`` of some center."""
    pts = _as_points(points)
    centers = np.asarray(result.centers, dtype=float).reshape(-1, pts.shape[1])
    if centers.shape[0] == 0:
        return False
    return bool(np.all(_within(pts, centers, result.radius, result.norm_order).any(axis=1)))


def _check(points, alpha, p):
    pts = _as_points(points)
    if not (alpha > 0.0 and math.isfinite(alpha)):
        raise ValidationError(f"alpha must be positive, got {alpha!r}")
    return pts, parse_norm_order(p)


def covering_greedy(points, alpha: float, p=2) -> CoveringResult:
    """Greedy max-coverage cover with point centers; ties to the smallest index."""
    pts, p = _check(points, alpha, p)
    cover = _within(pts, pts, alpha, p)  # cover[i, j]: center j covers point i
    uncovered = np.ones(pts.shape[0], dtype=bool)
    chosen = []
    while uncovered.any():
        gains = cover[uncovered].sum(axis=0)
        j = int(np.argmax(gains))
        chosen.append(j)
        uncovered &= ~cover[:, j]
    result = CoveringResult(len(chosen), pts[chosen], float(alpha), p, False, tuple(chosen))
    assert is_valid_cover(pts, result)
    return result


def covering_exact(points, alpha: float, p=2) -> CoveringResult:
    """Minimum point-centered cover by exhaustive search (``n <= 12``).

    Subsets are scanned by size and then lexicographically, so the returned
    optimum is the lexicographically smallest one.
    """
    pts, p = _check(points, alpha, p)
    n = pts.shape[0]
    if n > EXACT_COVER_MAX_POINTS:
        raise CapabilityError(
            f"exhaustive covering is limited to {EXACT_COVER_MAX_POINTS} points, got {n}"
        )
    cover = _within(pts, pts, alpha, p)
    masks = [int(sum(1 << i for i in np.flatnonzero(cover[:, j]))) for j in range(n)]
    full = (1 << n) - 1
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            acc = 0
            for j in combo:
                acc |= masks[j]
            if acc == full:
                result = CoveringResult(size, pts[list(combo)], float(alpha), p, True, combo)
                assert is_valid_cover(pts, result)
                return result
    raise AssertionError("every point covers itself; unreachable")


def _positive_int(name, v):
    if int(v) != v or v < 1:
        raise ValidationError(f"{name} must be a positive integer, got {v!r}")


def rademacher_bound_tv(n_cover: int, n_classes: int, n: int, eps_tv: float) -> float:
    """``sqrt(N K / n) + eps`` on the Rademacher complexity of a TV-robust loss class."""
    _positive_int("N", n_cover)
    _positive_int("K", n_classes)
    _positive_int("n", n)
    if not (0.0 <= eps_tv <= 1.0):
        raise ValidationError(f"eps_tv must lie in [0, 1], got {eps_tv!r}")
    return math.sqrt(n_cover * n_classes / n) + eps_tv


def rademacher_bound_renyi(n_cover: int, n_classes: int, n: int, eps_renyi: float) -> float:
    """Same bound for a Renyi-robust class, via the TV/Renyi inequality. Not clamped."""
    _positive_int("N", n_cover)
    _positive_int("K", n_classes)
    _positive_int("n", n)
    return math.sqrt(n_cover * n_classes / n) + tv_bound_from_renyi(eps_renyi)


def generalization_gap_bound(rademacher: float, n: int, delta: float) -> float:
    """``2 Rad + 3 sqrt(ln(2/delta) / (2n))``, holding with probability ``1 - delta``."""
    if not (rademacher >= 0.0):
        raise ValidationError(f"Rademacher complexity must be >= 0, got {rademacher!r}")
    _positive_int("n", n)
    if not (0.0 < delta < 1.0):
        raise ValidationError(f"delta must lie in (0, 1), got {delta!r}")
    return 2.0 * rademacher + 3.0 * math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def adversarial_generalization_bound(rad_bound: float, n: int, delta: float, eps_tv: float) -> float:
    """Bound on ``R_adv - empirical risk``: generalization gap plus the TV risk gap."""
    if not (0.0 <= eps_tv <= 1.0):
        raise ValidationError(f"eps_tv must lie in [0, 1], got {eps_tv!r}")
    return generalization_gap_bound(rad_bound, n, delta) + eps_tv

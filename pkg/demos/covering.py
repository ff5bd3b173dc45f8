"""Covering numbers of a sample and the generalization bounds they feed.

Run with ``python3 demos/covering.py``.
"""
import numpy as np

from randcert import (
    certify_gaussian_preprocessing,
    covering_exact,
    covering_greedy,
    generalization_gap_bound,
    rademacher_bound_tv,
)


def main():
    rng = np.random.default_rng(0)
    small = rng.uniform(-1, 1, (10, 2))
    for alpha in (0.25, 0.5, 1.0):
        g, e = covering_greedy(small, alpha), covering_exact(small, alpha)
        print(f"alpha {alpha:4.2f}: greedy {g.n_balls} balls, exact {e.n_balls} balls")

    big = rng.uniform(-1, 1, (5000, 2))
    sigma, alpha, delta = 0.5, 0.1, 0.05
    cover = covering_greedy(big, 2 * alpha)
    _, tv = certify_gaussian_preprocessing(sigma, alpha)
    rad = rademacher_bound_tv(cover.n_balls, 2, len(big), tv.epsilon)
    print(f"\nn = {len(big)}, {cover.n_balls} balls, Rademacher bound {rad:.4f}")
    print(f"generalization gap bound at delta = {delta}: {generalization_gap_bound(rad, len(big), delta):.4f}")


if __name__ == "__main__":
    main()

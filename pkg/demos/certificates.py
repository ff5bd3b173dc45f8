"""Divergences between nearby outputs and the certificates Gaussian noise injection buys.

Run with ``python3 demos/certificates.py``.
"""
import numpy as np

from randcert import (
    certify_gaussian_preprocessing,
    kl_divergence,
    mode_preservation_renyi,
    mode_preservation_tv,
    renyi_divergence,
    tv_bound_from_renyi,
    tv_distance,
)


def main():
    p, q = np.array([0.7, 0.2, 0.1]), np.array([0.6, 0.25, 0.15])
    print(f"TV {tv_distance(p, q):.4f}  KL {kl_divergence(p, q):.4f}  Renyi(2) {renyi_divergence(p, q, 2.0):.4f}")
    print(f"TV bound from Renyi(2): {tv_bound_from_renyi(renyi_divergence(p, q, 2.0)):.4f}")

    print("\nsigma  alpha  renyi_eps(beta=2)  tv_eps")
    for sigma in (0.25, 0.5, 1.0):
        for alpha in (0.1, 0.25, 0.5):
            renyi, tv = certify_gaussian_preprocessing(sigma, alpha, 2.0)
            print(f"{sigma:5.2f}  {alpha:5.2f}  {renyi.epsilon:17.4f}  {tv.epsilon:.4f}")

    # a confident output survives an alpha = 0.25 shift under sigma = 0.5
    renyi, tv = certify_gaussian_preprocessing(0.5, 0.25, 2.0)
    out = np.array([0.85, 0.1, 0.05])
    print(f"\nmode kept under TV cert: {mode_preservation_tv(out, tv.epsilon)}")
    print(f"mode kept under Renyi cert: {mode_preservation_renyi(out, renyi.epsilon, 2.0)}")


if __name__ == "__main__":
    main()

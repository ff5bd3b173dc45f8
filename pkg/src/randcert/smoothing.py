"""
Gaussian noise injection: closed-form divergences between shifted Gaussians
and the robustness certificates they induce on any downstream classifier.

Post-processing never increases TV or Renyi divergence, so a certificate
computed on ``N(x, Sigma)`` vs ``N(x + tau, Sigma)`` holds verbatim for
``h # N(x, Sigma)`` whatever the deterministic ``h``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, solve_triangular
from scipy.special import ndtr

from .distributions import DivergenceKind, tv_bound_from_renyi
from .errors import DimensionError, ValidationError

__all__ = [
    "GaussianNoiseSpec",
    "RobustnessCertificate",
    "mahalanobis_norm",
    "gaussian_renyi_divergence",
    "gaussian_tv_distance",
    "std_normal_cdf",
    "certify_gaussian_preprocessing",
    "convert_certificate",
]


@dataclass(frozen=True, eq=False)
class GaussianNoiseSpec:
    """Covariance of injected noise: isotropic ``sigma`` or a full SPD matrix.

    Use :meth:`isotropic` or :meth:`from_covariance`. The Cholesky factor of a
    full covariance is computed once here and reused.
    """

    iso_sigma: float | None = None
    covariance: np.ndarray | None = None
    _chol: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if (self.iso_sigma is None) == (self.covariance is None):
            raise ValidationError("give exactly one of iso_sigma or covariance")
        if self.iso_sigma is not None:
            s = float(self.iso_sigma)
            if not (s > 0.0 and math.isfinite(s)):
                raise ValidationError(f"sigma must be positive and finite, got {self.iso_sigma!r}")
            object.__setattr__(self, "iso_sigma", s)
            return
        cov = np.array(self.covariance, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] == 0:
            raise ValidationError(f"covariance must be square, got shape {cov.shape}")
        if not np.all(np.isfinite(cov)):
            raise ValidationError("covariance must be finite")
        if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
            raise ValidationError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        eig = np.linalg.eigvalsh(cov)
        if eig.max() <= 0 or eig.min() <= 1e-12 * eig.max():
            raise ValidationError("covariance must be positive definite")
        lower = np.tril(cho_factor(cov, lower=True)[0])
        cov.setflags(write=False)
        lower.setflags(write=False)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", lower)

    @classmethod
    def isotropic(cls, sigma: float) -> "GaussianNoiseSpec":
        return cls(iso_sigma=sigma)

    @classmethod
    def from_covariance(cls, covariance) -> "GaussianNoiseSpec":
        return cls(covariance=covariance)

    @property
    def is_isotropic(self) -> bool:
        return self.iso_sigma is not None

    @property
    def dim(self) -> int | None:
        """Input dimension, or ``None`` for isotropic noise (any dimension)."""
        return None if self.covariance is None else self.covariance.shape[0]

    @property
    def cholesky(self) -> np.ndarray | None:
        return self._chol

    def check_dim(self, d: int):
        if self.dim is not None and self.dim != d:
            raise DimensionError(f"noise is {self.dim}-dimensional, input is {d}-dimensional")

    def sample(self, rng: np.random.Generator, m: int, d: int) -> np.ndarray:
        """Draw ``m`` noise vectors of dimension ``d`` as an ``(m, d)`` array."""
        self.check_dim(d)
        z = rng.standard_normal((m, d))
        if self.is_isotropic:
            return self.iso_sigma * z
        return z @ self._chol.T

    def to_dict(self) -> dict:
        if self.is_isotropic:
            return {"sigma": self.iso_sigma}
        return {"covariance": self.covariance.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianNoiseSpec":
        if "sigma" in d:
            return cls.isotropic(d["sigma"])
        if "covariance" in d:
            return cls.from_covariance(d["covariance"])
        raise ValidationError("noise needs 'sigma' or 'covariance'")


@dataclass(frozen=True)
class RobustnessCertificate:
    """``(radius, epsilon)``-robustness w.r.t. ``divergence`` in the ``norm_order`` ball."""

    radius: float
    epsilon: float
    divergence: DivergenceKind
    norm_order: float = 2.0

    def __post_init__(self):
        if not (self.radius >= 0.0):
            raise ValidationError(f"radius must be >= 0, got {self.radius!r}")
        if not (self.epsilon >= 0.0):
            raise ValidationError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if self.divergence.name == "tv" and self.epsilon > 1.0:
            raise ValidationError(f"TV epsilon must be <= 1, got {self.epsilon!r}")
        if not (self.norm_order >= 1.0):
            raise ValidationError(f"norm order must be >= 1, got {self.norm_order!r}")

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "epsilon": self.epsilon,
            "divergence": str(self.divergence),
            "norm_order": self.norm_order,
        }


def _as_tau(tau) -> np.ndarray:
    t = np.asarray(tau, dtype=float).reshape(-1)
    if not np.all(np.isfinite(t)):
        raise ValidationError("perturbation entries must be finite")
    return t


def mahalanobis_norm(tau, spec: GaussianNoiseSpec) -> float:
    """``sqrt(tau^T Sigma^{-1} tau)``; ``||tau||_2 / sigma`` when isotropic."""
    t = _as_tau(tau)
    if spec.is_isotropic:
        return float(np.linalg.norm(t)) / spec.iso_sigma
    spec.check_dim(t.size)
    return float(np.linalg.norm(solve_triangular(spec.cholesky, t, lower=True)))


def gaussian_renyi_divergence(tau, spec: GaussianNoiseSpec, beta: float) -> float:
    """``D_beta(N(x, Sigma), N(x + tau, Sigma)) = beta / 2 * ||tau||^2_{Sigma^-1}``.

    The same expression gives the Gaussian KL divergence at ``beta = 1``.
    """
    if not (beta >= 1.0):
        raise ValidationError(f"Renyi order must be >= 1, got {beta!r}")
    r = mahalanobis_norm(tau, spec)
    if r == 0.0:
        return 0.0
    return 0.5 * beta * r * r


def std_normal_cdf(x):
    """Standard normal CDF; accepts scalars or arrays."""
    out = ndtr(x)
    return float(out) if np.ndim(out) == 0 else out


def gaussian_tv_distance(tau, spec: GaussianNoiseSpec) -> float:
    """``D_TV(N(x, Sigma), N(x + tau, Sigma)) = 2 Phi(||tau||_{Sigma^-1} / 2) - 1``."""
    r = mahalanobis_norm(tau, spec)
    # 2 Phi(r/2) - 1 = erf(r / (2 sqrt 2)), exact near zero
    return math.erf(r / (2.0 * math.sqrt(2.0)))


def certify_gaussian_preprocessing(
    sigma: float, alpha2: float, beta: float = 1.0
) -> tuple[RobustnessCertificate, RobustnessCertificate]:
    """Certificates for ``c # N(x, sigma^2 I)`` against ``l2`` perturbations of size ``alpha2``.

    Returns ``(renyi_cert, tv_cert)`` with epsilons ``beta * alpha2^2 / (2 sigma^2)``
    and ``2 Phi(alpha2 / (2 sigma)) - 1``.
    """
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise ValidationError(f"sigma must be positive, got {sigma!r}")
    if not (alpha2 >= 0.0 and math.isfinite(alpha2)):
        raise ValidationError(f"alpha2 must be >= 0, got {alpha2!r}")
    if not (beta >= 1.0):
        raise ValidationError(f"Renyi order must be >= 1, got {beta!r}")
    if alpha2 == 0.0:
        eps_renyi = 0.0
    else:
        eps_renyi = beta * alpha2 * alpha2 / (2.0 * sigma * sigma)
    eps_tv = math.erf(alpha2 / (2.0 * sigma) / math.sqrt(2.0))
    return (
        RobustnessCertificate(alpha2, eps_renyi, DivergenceKind.renyi(beta), 2.0),
        RobustnessCertificate(alpha2, eps_tv, DivergenceKind.tv(), 2.0),
    )


def convert_certificate(
    cert: RobustnessCertificate, target: DivergenceKind, diam_y: float = 1.0
) -> RobustnessCertificate:
    """Re-express a certificate for another divergence at the same radius.

    Supported pairs::

        TV         -> Wasserstein   eps * diam_y
        TV         -> Hellinger     sqrt(2 eps)
        Renyi(b)   -> TV            tv_bound_from_renyi(eps)
        Renyi(b)   -> Hellinger     sqrt(eps)
        Renyi(inf) -> Separation    eps

    plus the identity. Anything else raises :class:`ValidationError`.
    """
    if not (diam_y >= 0.0):
        raise ValidationError(f"diam_y must be >= 0, got {diam_y!r}")
    src, eps = cert.divergence, cert.epsilon
    if target == src:
        return cert
    new_eps = None
    if src.name == "tv":
        if target.name == "wasserstein":
            new_eps = eps * diam_y
        elif target.name == "hellinger":
            new_eps = math.sqrt(2.0 * eps)
    elif src.name == "renyi":
        if target.name == "tv":
            new_eps = tv_bound_from_renyi(eps)
        elif target.name == "hellinger":
            new_eps = math.sqrt(eps)
        elif target.name == "separation" and math.isinf(src.beta):
            new_eps = eps
    if new_eps is None:
        raise ValidationError(f"no conversion from {src} to {target}")
    return RobustnessCertificate(cert.radius, new_eps, target, cert.norm_order)

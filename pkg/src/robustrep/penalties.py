"""Robust penalties and their threshold maps.

Three families are supported:

``quadratic``
    ``r**2 / 2``.
``huber``
    Quadratic on ``|r| <= kappa`` and linear with slope ``kappa`` outside.
    It is the value function of ``min_s (s - r)**2 / 2 + kappa * |s|``,
    whose minimiser is the soft threshold ``S_kappa(r)``.
``tiber``
    ``log(1 + r**2 / sigma**2)`` on ``|r| <= kappa * sigma`` and linear
    outside, glued so that the function is continuously differentiable.

Matrix-valued residuals are penalised entrywise and summed.
"""
from dataclasses import dataclass
import enum
import math

import numpy as np

from ._backend import kernels

__all__ = [
    "Family",
    "PenaltySpec",
    "penalty_value",
    "penalty_gradient",
    "soft_threshold",
    "elementwise_value_sum",
    "elementwise_value_and_grad",
]


class Family(str, enum.Enum):
    QUADRATIC = "quadratic"
    HUBER = "huber"
    TIBER = "tiber"


@dataclass(frozen=True)
class PenaltySpec:
    """A penalty family together with its parameters.

    Parameters
    ----------
    family : Family or str
        One of ``"quadratic"``, ``"huber"``, ``"tiber"``.
    kappa : float
        Threshold parameter. Ignored by the quadratic penalty but still
        required to be positive.
    sigma : float
        Scale parameter of the Tiber penalty. Forced to 1 for the others.
    """

    family: Family
    kappa: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        kappa, sigma = float(self.kappa), float(self.sigma)
        if not (kappa > 0 and math.isfinite(kappa)):
            raise ValueError(f"kappa must be positive and finite, got {self.kappa!r}")
        if not (sigma > 0 and math.isfinite(sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma!r}")
        if self.family is not Family.TIBER:
            sigma = 1.0
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def huber(cls, kappa):
        return cls(Family.HUBER, kappa)

    @classmethod
    def tiber(cls, kappa, sigma=1.0):
        return cls(Family.TIBER, kappa, sigma)

    @classmethod
    def quadratic(cls):
        return cls(Family.QUADRATIC)

    @property
    def threshold(self):
        """Dead-zone width of the soft threshold that recovers the sparse part.

        ``kappa`` for Huber and ``kappa * sigma`` for Tiber. The quadratic
        penalty has no sparse part, so its threshold is infinite.
        """
        if self.family is Family.HUBER:
            return self.kappa
        if self.family is Family.TIBER:
            return self.kappa * self.sigma
        return math.inf

    @property
    def curvature_bound(self):
        """Upper bound on the second derivative of the scalar penalty."""
        if self.family is Family.TIBER:
            return 2.0 / self.sigma ** 2
        return 1.0

    def to_dict(self):
        return {"family": self.family.value, "kappa": self.kappa, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"family", "kappa", "sigma"}
        if unknown:
            raise ValueError(f"unknown PenaltySpec keys: {sorted(unknown)}")
        return cls(data["family"], data.get("kappa", 1.0), data.get("sigma", 1.0))


def _flat(r):
    return np.ascontiguousarray(r, dtype=np.float64).reshape(-1)


def penalty_value(spec, r):
    """Evaluate the scalar penalty elementwise; returns an array shaped like ``r``.

    A Python scalar in gives a Python float out.
    """
    r = np.asarray(r, dtype=np.float64)
    a = np.abs(r)
    if spec.family is Family.QUADRATIC:
        out = 0.5 * r * r
    elif spec.family is Family.HUBER:
        k = spec.kappa
        out = np.where(a > k, k * a - 0.5 * k * k, 0.5 * r * r)
    else:
        k, s = spec.kappa, spec.sigma
        slope = 2.0 * k / (s * (k * k + 1.0))
        out = np.where(a > k * s, slope * (a - k * s) + np.log1p(k * k),
                       np.log1p((r / s) ** 2))
    return float(out) if out.ndim == 0 else out


def penalty_gradient(spec, r):
    """Derivative of :func:`penalty_value` with respect to ``r``."""
    r = np.asarray(r, dtype=np.float64)
    if spec.family is Family.QUADRATIC:
        out = r.copy()
    elif spec.family is Family.HUBER:
        out = np.clip(r, -spec.kappa, spec.kappa)
    else:
        k, s = spec.kappa, spec.sigma
        slope = 2.0 * k / (s * (k * k + 1.0))
        out = np.where(np.abs(r) > k * s, np.copysign(slope, r), 2.0 * r / (s * s + r * r))
    return float(out) if out.ndim == 0 else out


def soft_threshold(r, kappa):
    """Shrink ``r`` towards zero by ``kappa``, zeroing the band ``[-kappa, kappa]``."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    arr = np.asarray(r, dtype=np.float64)
    if math.isinf(kappa):
        out = np.zeros_like(arr)
    else:
        flat = _flat(arr)
        out = np.empty_like(flat)
        kernels.soft_threshold(flat, float(kappa), out)
        out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def elementwise_value_sum(spec, R):
    """Sum of the scalar penalty over every entry of ``R``."""
    r = _flat(R)
    if spec.family is Family.QUADRATIC:
        return kernels.quadratic_sum(r)
    if spec.family is Family.HUBER:
        return kernels.huber_sum(r, spec.kappa)
    return kernels.tiber_sum(r, spec.kappa, spec.sigma)


def elementwise_value_and_grad(spec, R):
    """Return ``(elementwise_value_sum(spec, R), penalty_gradient(spec, R))``.

    Both are computed in a single pass over ``R``; this is the hot path of
    every solver in the package.
    """
    R = np.asarray(R, dtype=np.float64)
    r = _flat(R)
    grad = np.empty_like(r)
    if spec.family is Family.QUADRATIC:
        val = kernels.quadratic_sum_grad(r, grad)
    elif spec.family is Family.HUBER:
        val = kernels.huber_sum_grad(r, spec.kappa, grad)
    else:
        val = kernels.tiber_sum_grad(r, spec.kappa, spec.sigma, grad)
    return float(val), grad.reshape(R.shape)

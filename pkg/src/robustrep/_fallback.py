"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Signatures match one-to-one; inputs are flat float64 arrays and gradients
are written into the caller's buffer.
"""
import numpy as np


def huber_sum(r, kappa):
    a = np.abs(r)
    outer = a > kappa
    return float(np.sum(np.where(outer, kappa * a - 0.5 * kappa * kappa, 0.5 * r * r)))


def huber_sum_grad(r, kappa, grad):
    np.clip(r, -kappa, kappa, out=grad)
    return huber_sum(r, kappa)


def _tiber_consts(kappa, sigma):
    return (kappa * sigma,
            2.0 * kappa / (sigma * (kappa * kappa + 1.0)),
            np.log1p(kappa * kappa))


def tiber_sum(r, kappa, sigma):
    knot, slope, offset = _tiber_consts(kappa, sigma)
    a = np.abs(r)
    vals = np.where(a > knot, slope * (a - knot) + offset, np.log1p((r / sigma) ** 2))
    return float(np.sum(vals))


def tiber_sum_grad(r, kappa, sigma, grad):
    knot, slope, _ = _tiber_consts(kappa, sigma)
    a = np.abs(r)
    grad[:] = np.where(a > knot, np.copysign(slope, r), 2.0 * r / (sigma * sigma + r * r))
    return tiber_sum(r, kappa, sigma)


def quadratic_sum(r):
    return 0.5 * float(np.dot(r, r))


def quadratic_sum_grad(r, grad):
    grad[:] = r
    return quadratic_sum(r)


def soft_threshold(r, kappa, out):
    np.subtract(np.abs(r), kappa, out=out)
    np.maximum(out, 0.0, out=out)
    np.copysign(out, r, out=out)
    # copysign turns exact zeros from negative inputs into -0.0
    out[out == 0.0] = 0.0
    return out

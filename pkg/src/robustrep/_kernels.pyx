# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled elementwise kernels for the robust penalties.

Every function works on flat, C-contiguous float64 buffers. Reductions are
plain left-to-right loops so results do not depend on thread count.
"""
from libc.math cimport fabs, log1p

import numpy as np


def huber_sum(const double[::1] r, double kappa):
    cdef Py_ssize_t i, n = r.shape[0]
    cdef double a, total = 0.0
    cdef double half_k2 = 0.5 * kappa * kappa
    with nogil:
        for i in range(n):
            a = fabs(r[i])
            if a > kappa:
                total += kappa * a - half_k2
            else:
                total += 0.5 * r[i] * r[i]
    return total


def huber_sum_grad(const double[::1] r, double kappa, double[::1] grad):
    cdef Py_ssize_t i, n = r.shape[0]
    cdef double x, a, total = 0.0
    cdef double half_k2 = 0.5 * kappa * kappa
    with nogil:
        for i in range(n):
            x = r[i]
            a = fabs(x)
            if a > kappa:
                total += kappa * a - half_k2
                grad[i] = kappa if x > 0 else -kappa
            else:
                total += 0.5 * x * x
                grad[i] = x
    return total


def tiber_sum(const double[::1] r, double kappa, double sigma):
    cdef Py_ssize_t i, n = r.shape[0]
    cdef double a, u, total = 0.0
    cdef double knot = kappa * sigma
    cdef double slope = 2.0 * kappa / (sigma * (kappa * kappa + 1.0))
    cdef double offset = log1p(kappa * kappa)
    cdef double inv_sigma = 1.0 / sigma
    with nogil:
        for i in range(n):
            a = fabs(r[i])
            if a > knot:
                total += slope * (a - knot) + offset
            else:
                u = r[i] * inv_sigma
                total += log1p(u * u)
    return total


def tiber_sum_grad(const double[::1] r, double kappa, double sigma, double[::1] grad):
    cdef Py_ssize_t i, n = r.shape[0]
    cdef double x, a, u, total = 0.0
    cdef double knot = kappa * sigma
    cdef double slope = 2.0 * kappa / (sigma * (kappa * kappa + 1.0))
    cdef double offset = log1p(kappa * kappa)
    cdef double s2 = sigma * sigma
    cdef double inv_sigma = 1.0 / sigma
    with nogil:
        for i in range(n):
            x = r[i]
            a = fabs(x)
            if a > knot:
                total += slope * (a - knot) + offset
                grad[i] = slope if x > 0 else -slope
            else:
                u = x * inv_sigma
                total += log1p(u * u)
                grad[i] = 2.0 * x / (s2 + x * x)
    return total


def quadratic_sum(const double[::1] r):
    cdef Py_ssize_t i, n = r.shape[0]
    cdef double total = 0.0
    with nogil:
        for i in range(n):
            total += r[i] * r[i]
    return 0.5 * total


def quadratic_sum_grad(const double[::1] r, double[::1] grad):
    cdef Py_ssize_t i, n = r.shape[0]
    cdef double total = 0.0
    with nogil:
        for i in range(n):
            total += r[i] * r[i]
            grad[i] = r[i]
    return 0.5 * total


def soft_threshold(const double[::1] r, double kappa, double[::1] out):
    cdef Py_ssize_t i, n = r.shape[0]
    cdef double x
    with nogil:
        for i in range(n):
            x = r[i]
            if x > kappa:
                out[i] = x - kappa
            elif x < -kappa:
                out[i] = x + kappa
            else:
                out[i] = 0.0
    return np.asarray(out)

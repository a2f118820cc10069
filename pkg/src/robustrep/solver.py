"""Proximal alternating linearized minimization (PALM).

The solver minimises ``f(X_1, ..., X_p) + sum_i g_i(X_i)`` where ``f`` is
smooth and each ``g_i`` is simple enough to have a cheap proximal map (or
is the indicator of a set we can project onto). One iteration sweeps the
blocks in declared order; each block takes a gradient step on ``f`` with a
backtracked step size and then applies its prox.
"""
from dataclasses import dataclass, field, asdict
import math
import time
from typing import Callable, Optional, Sequence

import numpy as np

from .penalties import soft_threshold

__all__ = [
    "NonFiniteObjective",
    "RankDeficient",
    "SolveConfig",
    "SolveReport",
    "BlockProblem",
    "palm_solve",
    "project_orthonormal_columns",
    "prox_l1_offdiag",
    "prox_identity",
]


class NonFiniteObjective(FloatingPointError):
    """The objective evaluated to inf or nan."""


class RankDeficient(np.linalg.LinAlgError):
    """Polar projection is not unique because the input lost column rank."""


@dataclass
class SolveConfig:
    max_iters: int = 2000
    tol: float = 1e-7
    step_init: float = 1.0
    backtrack_factor: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.step_init > 0:
            raise ValueError("step_init must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.max_iters = int(self.max_iters)
        self.seed = int(self.seed)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown SolveConfig keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class SolveReport:
    iterations: int = 0
    objective_trace: list = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0

    def to_dict(self):
        return asdict(self)


def prox_identity(x, step):
    return x


@dataclass
class BlockProblem:
    """A smooth coupling term plus one prox per block.

    Parameters
    ----------
    smooth_value : callable
        ``smooth_value(blocks) -> float``.
    smooth_block_gradient : callable
        ``smooth_block_gradient(i, blocks) -> ndarray`` shaped like block ``i``.
    block_prox : sequence of callables
        ``prox(point, step) -> ndarray``. The result must lie in the block's
        feasible set. Defaults to the identity for every block.
    block_penalty : sequence of callables, optional
        Value of the nonsmooth term of each block, included in the reported
        objective. ``None`` entries mean zero (indicator of a set the prox
        already enforces).
    smooth_value_and_gradient : callable, optional
        ``(i, blocks) -> (f, grad_i)``; used instead of two separate calls
        when the two share work.
    block_metric : sequence of callables, optional
        ``metric(blocks) -> M`` with ``M`` symmetric positive definite of
        size ``rows(block_i)``. The step becomes ``x - t * M^-1 grad`` and the
        sufficient-decrease test is measured in the ``M`` norm. Only allowed
        with an identity prox.
    """

    smooth_value: Callable
    smooth_block_gradient: Callable
    block_prox: Optional[Sequence[Callable]] = None
    block_penalty: Optional[Sequence[Optional[Callable]]] = None
    smooth_value_and_gradient: Optional[Callable] = None
    block_metric: Optional[Sequence[Optional[Callable]]] = None

    def metric(self, i, blocks):
        if self.block_metric is None or self.block_metric[i] is None:
            return None
        if self.block_prox is not None and self.block_prox[i] not in (None, prox_identity):
            raise ValueError("a block metric needs an identity prox")
        return self.block_metric[i](blocks)

    def prox(self, i):
        if self.block_prox is None or self.block_prox[i] is None:
            return prox_identity
        return self.block_prox[i]

    def nonsmooth(self, i, x):
        if self.block_penalty is None or self.block_penalty[i] is None:
            return 0.0
        return float(self.block_penalty[i](x))

    def value_and_grad(self, i, blocks):
        if self.smooth_value_and_gradient is not None:
            return self.smooth_value_and_gradient(i, blocks)
        return self.smooth_value(blocks), self.smooth_block_gradient(i, blocks)


def _check_finite(value, where):
    if not math.isfinite(value):
        raise NonFiniteObjective(f"objective is {value} {where}")
    return value


# Relative slack on the sufficient-decrease test; absorbs rounding only.
_ROUNDING_SLACK = 1e-13
_MIN_STEP = 1e-30


def palm_solve(problem, init, config=None):
    """Run PALM from ``init``.

    Returns
    -------
    blocks : list of ndarray
    report : SolveReport
        ``objective_trace[0]`` is the objective at ``init``; each further
        entry is the objective after one full sweep over the blocks.

    Notes
    -----
    The step ``t`` for block ``i`` starts at ``min(step_init, last_step / beta)``
    and is multiplied by ``beta = backtrack_factor`` until

        f(x+) <= f(x) + <grad, x+ - x> + ||x+ - x||_M^2 / (2 t),

    where ``M`` is the block metric (the identity unless one is given).

    A candidate that would raise the full objective is never accepted, so
    the trace is non-increasing.
    """
    config = SolveConfig() if config is None else config
    t0 = time.perf_counter()
    blocks = [np.array(b, dtype=np.float64, copy=True) for b in init]
    nb = len(blocks)
    beta = config.backtrack_factor
    steps = [config.step_init] * nb

    nonsmooth = [problem.nonsmooth(i, blocks[i]) for i in range(nb)]
    f = _check_finite(float(problem.smooth_value(blocks)), "at initialization")
    obj = f + sum(nonsmooth)
    trace = [obj]
    converged = False
    it = 0

    for it in range(1, config.max_iters + 1):
        stalled = 0
        for i in range(nb):
            f, grad = problem.value_and_grad(i, blocks)
            _check_finite(f, f"at iteration {it}")
            x = blocks[i]
            prox = problem.prox(i)
            M = problem.metric(i, blocks)
            direction = grad if M is None else np.linalg.solve(M, grad)
            step = min(config.step_init, steps[i] / beta)
            accepted = False
            while step >= _MIN_STEP:
                cand = prox(x - step * direction, step)
                d = cand - x
                Md = d if M is None else M @ d
                model = f + float(np.vdot(grad, d)) + float(np.vdot(d, Md)) / (2.0 * step)
                trial = list(blocks)
                trial[i] = cand
                f_new = float(problem.smooth_value(trial))
                if not math.isfinite(f_new):
                    step *= beta
                    continue
                slack = _ROUNDING_SLACK * max(1.0, abs(f))
                if f_new <= model + slack:
                    g_new = problem.nonsmooth(i, cand)
                    old = f + nonsmooth[i]
                    if f_new + g_new <= old + slack:
                        blocks[i] = cand
                        nonsmooth[i] = g_new
                        f = f_new
                        accepted = True
                    break
                step *= beta
            if accepted:
                steps[i] = step
            else:
                stalled += 1
        f = _check_finite(float(problem.smooth_value(blocks)), f"at iteration {it}")
        new_obj = f + sum(nonsmooth)
        prev = trace[-1]
        trace.append(new_obj)
        if stalled == nb or abs(new_obj - prev) / max(1.0, abs(prev)) < config.tol:
            converged = True
            break

    report = SolveReport(
        iterations=it,
        objective_trace=trace,
        converged=converged,
        wall_time=time.perf_counter() - t0,
    )
    return blocks, report


def project_orthonormal_columns(X):
    """Nearest matrix with orthonormal columns (the orthogonal polar factor).

    Raises
    ------
    RankDeficient
        If the smallest singular value of ``X`` is below 1e-12.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < X.shape[1]:
        raise ValueError(f"expected a tall m x k matrix, got shape {X.shape}")
    P, s, Qt = np.linalg.svd(X, full_matrices=False)
    if s[-1] < 1e-12:
        raise RankDeficient(f"smallest singular value {s[-1]:.3e} < 1e-12")
    return P @ Qt


def prox_l1_offdiag(C, tau):
    """Soft-threshold off-diagonal entries by ``tau`` and zero the diagonal."""
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {C.shape}")
    out = soft_threshold(C, tau)
    np.fill_diagonal(out, 0.0)
    return out

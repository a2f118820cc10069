"""Factorized robust PCA.

Fits ``Y ~ U.T @ V`` with ``U`` of shape ``(k, n)`` and ``V`` of shape
``(k, m)`` by minimising ``sum rho(U.T @ V - Y)`` for a Huber or Tiber
penalty ``rho``. The background is ``L = U.T @ V`` and the foreground is the
soft-thresholded residual ``S = S_t(L - Y)`` with ``t = spec.threshold``.
"""
from dataclasses import dataclass, field

import numpy as np

from .penalties import Family, PenaltySpec, elementwise_value_and_grad, elementwise_value_sum, soft_threshold
from .solver import BlockProblem, SolveConfig, SolveReport, palm_solve

__all__ = [
    "RpcaInput",
    "RpcaResult",
    "rpca_solve",
    "recover_sparse",
    "foreground_mask",
    "svd_init",
]

DEFAULT_RANK = 10


@dataclass
class RpcaInput:
    Y: np.ndarray
    rank: int = DEFAULT_RANK
    penalty: PenaltySpec = field(default_factory=lambda: PenaltySpec.huber(0.1))

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=np.float64)
        if self.Y.ndim != 2:
            raise ValueError("Y must be a 2-D matrix")
        if not np.all(np.isfinite(self.Y)):
            raise ValueError("Y contains non-finite entries")
        if not 1 <= int(self.rank) <= min(self.Y.shape):
            raise ValueError(f"rank must lie in [1, {min(self.Y.shape)}], got {self.rank}")
        self.rank = int(self.rank)
        if self.penalty.family is Family.QUADRATIC:
            raise ValueError("robust PCA needs a Huber or Tiber penalty")


@dataclass
class RpcaResult:
    U: np.ndarray
    V: np.ndarray
    L: np.ndarray
    S: np.ndarray
    report: SolveReport


def svd_init(Y, rank):
    """Balanced factors of the rank-``rank`` truncated SVD of ``Y``."""
    P, s, Qt = np.linalg.svd(Y, full_matrices=False)
    root = np.sqrt(s[:rank])[:, None]
    return root * P[:, :rank].T, root * Qt[:rank]


def random_init(Y, rank, seed):
    rng = np.random.default_rng(seed)
    n, m = Y.shape
    scale = np.sqrt(np.linalg.norm(Y) / np.sqrt(rank * n * m) + 1e-300)
    return scale * rng.standard_normal((rank, n)), scale * rng.standard_normal((rank, m))


def _factor_problem(Y, spec, precondition=True):
    def value(blocks):
        U, V = blocks
        return elementwise_value_sum(spec, U.T @ V - Y)

    def value_and_grad(i, blocks):
        U, V = blocks
        f, G = elementwise_value_and_grad(spec, U.T @ V - Y)
        return f, (V @ G.T) if i == 0 else (U @ G)

    def gradient(i, blocks):
        return value_and_grad(i, blocks)[1]

    metric = None
    if precondition:
        c = spec.curvature_bound

        def gram(F):
            G = F @ F.T
            return c * (G + 1e-12 * max(np.trace(G), 1.0) * np.eye(G.shape[0]))

        metric = [lambda b: gram(b[1]), lambda b: gram(b[0])]
    return BlockProblem(value, gradient, smooth_value_and_gradient=value_and_grad,
                        block_metric=metric)


def rpca_solve(inp, config=None, init="svd", restarts=0, precondition=True):
    """Solve the factorized robust PCA problem.

    Parameters
    ----------
    inp : RpcaInput
    config : SolveConfig, optional
        ``step_init`` is rescaled by the curvature of the penalty, so the
        default of 1 is a sensible start for any data scale.
    init : {"svd", "random"}
        ``"random"`` draws Gaussian factors from ``config.seed``.
    restarts : int
        Number of extra random starts (seeds ``config.seed + 1``, ...). The
        run with the lowest final objective is returned.
    precondition : bool
        Scale each factor's gradient step by the inverse Gram matrix of the
        other factor. Without it, plain gradient steps on ill-conditioned
        factors converge far more slowly.
    """
    config = SolveConfig() if config is None else config
    best = _solve_once(inp, config, init, precondition)
    for r in range(1, restarts + 1):
        cfg = SolveConfig(config.max_iters, config.tol, config.step_init,
                          config.backtrack_factor, (config.seed + r) % 2 ** 64)
        cand = _solve_once(inp, cfg, "random", precondition)
        if cand.report.objective_trace[-1] < best.report.objective_trace[-1]:
            best = cand
    return best


def _solve_once(inp, config, init, precondition):
    Y, k, spec = inp.Y, inp.rank, inp.penalty
    if init == "svd":
        U0, V0 = svd_init(Y, k)
    elif init == "random":
        U0, V0 = random_init(Y, k, config.seed)
    else:
        raise ValueError(f"unknown init {init!r}")

    # Block Lipschitz constants are ~ curvature * ||other factor||^2; the
    # metric already carries that scale.
    scale = 1.0 if precondition else (
        spec.curvature_bound * max(np.linalg.norm(U0, 2), np.linalg.norm(V0, 2), 1e-12) ** 2)
    cfg = SolveConfig(config.max_iters, config.tol, config.step_init / scale,
                      config.backtrack_factor, config.seed)
    (U, V), report = palm_solve(_factor_problem(Y, spec, precondition), [U0, V0], cfg)
    L = U.T @ V
    return RpcaResult(U=U, V=V, L=L, S=recover_sparse(L, Y, spec), report=report)


def recover_sparse(L, Y, penalty):
    L = np.asarray(L, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if L.shape != Y.shape:
        raise ValueError(f"shape mismatch {L.shape} vs {Y.shape}")
    return soft_threshold(L - Y, penalty.threshold)


def foreground_mask(S):
    return np.abs(np.asarray(S)) > 0

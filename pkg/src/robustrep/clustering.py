"""Robust spectral and subspace clustering.

The spectral pipeline embeds a similarity matrix ``W`` with ``k``
orthonormal columns ``X`` (either the top-``k`` eigenvectors or the robust
fit ``min rho(X X^T - W)  s.t.  X^T X = I``), normalises the rows of ``X``
and runs k-means on them.

The subspace pipeline first learns a self-representation ``Y ~ Y C`` with
``diag(C) = 0`` and an L1 penalty on ``C``, turns ``C`` into a similarity
matrix and hands it to the spectral pipeline.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .penalties import PenaltySpec, elementwise_value_and_grad, elementwise_value_sum
from .solver import (
    BlockProblem,
    SolveConfig,
    SolveReport,
    palm_solve,
    project_orthonormal_columns,
    prox_l1_offdiag,
)

__all__ = [
    "NotSymmetric",
    "KMeansDegenerate",
    "SpectralEmbedding",
    "ClusterAssignment",
    "eig_factorize",
    "robust_eig_factorize",
    "symmetric_factor_objective",
    "normalize_rows",
    "spectral_cluster",
    "subspace_represent",
    "build_similarity",
    "gaussian_affinity",
    "kmeans",
    "clustering_error",
    "principal_angle",
]


class NotSymmetric(ValueError):
    pass


class KMeansDegenerate(RuntimeError):
    """An empty cluster could not be repaired."""


@dataclass
class SpectralEmbedding:
    X: np.ndarray
    row_normalized: bool = False
    report: SolveReport = None


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    k: int
    inertia: float = float("nan")
    embedding: np.ndarray = None
    report: SolveReport = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.k):
            raise ValueError("labels must lie in {0, ..., k-1}")

    def to_csv(self):
        return "".join(f"{i},{lab}\n" for i, lab in enumerate(self.labels))

    def to_dict(self):
        return {"k": int(self.k), "labels": self.labels.tolist()}

    @classmethod
    def from_dict(cls, data):
        labels = np.asarray(data["labels"], dtype=np.int64)
        k = int(data.get("k", labels.max() + 1 if labels.size else 1))
        return cls(labels, k)


def _check_symmetric(L, tol=1e-8):
    L = np.asarray(L, dtype=np.float64)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {L.shape}")
    if L.size and np.max(np.abs(L - L.T)) > tol:
        raise NotSymmetric(f"asymmetry {np.max(np.abs(L - L.T)):.3e} exceeds {tol}")
    return L


def _check_k(k, m):
    if not 1 <= int(k) <= m:
        raise ValueError(f"k must lie in [1, {m}], got {k}")
    return int(k)


def principal_angle(A, B):
    """Largest principal angle (radians) between the column spans of A and B."""
    Qa, _ = np.linalg.qr(A)
    Qb, _ = np.linalg.qr(B)
    # sin of the largest angle is the norm of the part of B outside span(A)
    resid = Qb - Qa @ (Qa.T @ Qb)
    return float(np.arcsin(min(1.0, np.linalg.norm(resid, 2))))


def eig_factorize(L, k):
    """Top-``k`` eigenvectors of symmetric ``L``, by descending eigenvalue."""
    L = _check_symmetric(L)
    m = L.shape[0]
    k = _check_k(k, m)
    _, vecs = eigh(L, subset_by_index=[m - k, m - 1])
    return SpectralEmbedding(X=np.ascontiguousarray(vecs[:, ::-1]))


def symmetric_factor_objective(X, L, penalty):
    return elementwise_value_sum(penalty, X @ X.T - L)


def robust_eig_factorize(L, k, penalty, config=None, init=None):
    """Orthonormal ``X`` minimising ``sum rho(X X^T - L)``.

    Starts from the exact top-``k`` eigenvectors unless ``init`` is given.
    """
    L = _check_symmetric(L)
    k = _check_k(k, L.shape[0])
    config = SolveConfig() if config is None else config
    X0 = eig_factorize(L, k).X if init is None else project_orthonormal_columns(init)

    def value(blocks):
        X, = blocks
        return elementwise_value_sum(penalty, X @ X.T - L)

    def value_and_grad(i, blocks):
        X, = blocks
        f, G = elementwise_value_and_grad(penalty, X @ X.T - L)
        return f, (G + G.T) @ X

    problem = BlockProblem(
        value, lambda i, b: value_and_grad(i, b)[1],
        block_prox=[lambda Z, step: project_orthonormal_columns(Z)],
        smooth_value_and_gradient=value_and_grad,
    )
    # With the quadratic penalty and ||L|| = 1 the first trial step is 1/2,
    # where the update reduces to X <- polar(L X) (orthogonal iteration).
    # Backtracking takes over whenever that is too long.
    lips = penalty.curvature_bound * (np.linalg.norm(L, 2) + 1.0)
    cfg = SolveConfig(config.max_iters, config.tol, config.step_init / lips,
                      config.backtrack_factor, config.seed)
    (X,), report = palm_solve(problem, [X0], cfg)
    return SpectralEmbedding(X=X, report=report)


def normalize_rows(X):
    """Scale nonzero rows to unit 2-norm; zero rows stay zero."""
    X = np.array(X, dtype=np.float64, copy=True)
    norms = np.linalg.norm(X, axis=1)
    nz = norms > 0
    X[nz] /= norms[nz, None]
    return X


def spectral_cluster(W, k, robust=False, penalty=None, config=None, seed=0):
    """Cluster the nodes of similarity matrix ``W`` into ``k`` groups.

    The row-normalised embedding fed to k-means is kept on the result as
    ``embedding``; for ``robust=True`` the solver report is kept as
    ``report``.
    """
    W = _check_symmetric(W)
    k = _check_k(k, W.shape[0])
    if robust:
        if penalty is None:
            raise ValueError("robust spectral clustering needs a penalty")
        emb = robust_eig_factorize(W, k, penalty, config)
    else:
        emb = eig_factorize(W, k)
    Xn = normalize_rows(emb.X)
    out = kmeans(Xn, k, seed=seed)
    out.embedding = Xn
    out.report = emb.report
    return out


def subspace_represent(Y, lam, penalty, config=None):
    """Sparse self-representation ``C`` with ``diag(C) = 0``.

    Minimises ``sum rho(Y - Y C) + lam * ||C||_1`` by proximal gradient from
    ``C = 0``. Columns of ``Y`` are the data points.

    Returns
    -------
    C : ndarray, shape (m, m)
    report : SolveReport
    """
    Y = np.asarray(Y, dtype=np.float64)
    if lam <= 0:
        raise ValueError("lam must be positive")
    if not np.all(np.isfinite(Y)):
        raise ValueError("Y contains non-finite entries")
    config = SolveConfig() if config is None else config
    m = Y.shape[1]

    def value(blocks):
        C, = blocks
        return elementwise_value_sum(penalty, Y - Y @ C)

    def value_and_grad(i, blocks):
        C, = blocks
        f, G = elementwise_value_and_grad(penalty, Y - Y @ C)
        return f, -(Y.T @ G)

    problem = BlockProblem(
        value, lambda i, b: value_and_grad(i, b)[1],
        block_prox=[lambda Z, step: prox_l1_offdiag(Z, lam * step)],
        block_penalty=[lambda C: lam * np.abs(C).sum()],
        smooth_value_and_gradient=value_and_grad,
    )
    lips = penalty.curvature_bound * max(np.linalg.norm(Y, 2) ** 2, 1e-12)
    cfg = SolveConfig(config.max_iters, config.tol, config.step_init / lips,
                      config.backtrack_factor, config.seed)
    (C,), report = palm_solve(problem, [np.zeros((m, m))], cfg)
    return C, report


def build_similarity(C):
    """``D^-1/2 W D^-1/2`` with ``W = |C| + |C^T|`` after max-abs column scaling.

    Nodes of zero degree are left unnormalised.
    """
    C = np.array(C, dtype=np.float64, copy=True)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {C.shape}")
    colmax = np.max(np.abs(C), axis=0) if C.size else np.zeros(0)
    nz = colmax > 0
    C[:, nz] /= colmax[nz]
    W = np.abs(C) + np.abs(C.T)
    d = W.sum(axis=1)
    inv = np.ones_like(d)
    inv[d > 0] = 1.0 / np.sqrt(d[d > 0])
    W = inv[:, None] * W * inv[None, :]
    return 0.5 * (W + W.T)


def gaussian_affinity(points, bandwidth):
    """Normalised Gaussian affinity of the rows of ``points``.

    ``A_ij = exp(-|p_i - p_j|^2 / (2 bandwidth^2))`` with zero diagonal,
    followed by ``D^-1/2 A D^-1/2``.
    """
    P = np.asarray(points, dtype=np.float64)
    A = np.exp(-cdist(P, P, "sqeuclidean") / (2.0 * bandwidth ** 2))
    np.fill_diagonal(A, 0.0)
    d = A.sum(axis=1)
    inv = np.ones_like(d)
    inv[d > 0] = 1.0 / np.sqrt(d[d > 0])
    A = inv[:, None] * A * inv[None, :]
    return 0.5 * (A + A.T)


def _kmeanspp(P, k, rng):
    m = P.shape[0]
    centers = np.empty((k, P.shape[1]))
    centers[0] = P[rng.integers(m)]
    d2 = np.sum((P - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        idx = rng.choice(m, p=d2 / total) if total > 0 else rng.integers(m)
        centers[j] = P[idx]
        d2 = np.minimum(d2, np.sum((P - centers[j]) ** 2, axis=1))
    return centers


def _lloyd(P, centers, max_iter=300):
    k = centers.shape[0]
    failures = 0
    for _ in range(max_iter):
        d2 = cdist(P, centers, "sqeuclidean")
        labels = np.argmin(d2, axis=1)
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            failures += 1
            if failures > 5:
                raise KMeansDegenerate(f"{empty.size} empty cluster(s) after 5 re-seeds")
            own = d2[np.arange(P.shape[0]), labels]
            taken = set()
            for j in empty:
                order = np.argsort(-own, kind="stable")
                idx = next(i for i in order if i not in taken)
                taken.add(idx)
                centers[j] = P[idx]
                own[idx] = 0.0
            continue
        failures = 0
        new = np.stack([P[labels == j].mean(axis=0) for j in range(k)])
        if np.array_equal(new, centers):
            break
        centers = new
    d2 = cdist(P, centers, "sqeuclidean")
    labels = np.argmin(d2, axis=1)
    return labels, float(d2[np.arange(P.shape[0]), labels].sum())


def kmeans(points, k, seed=0, n_restarts=10):
    """Lloyd's algorithm with k-means++ seeding, best of ``n_restarts`` runs.

    Ties in within-cluster sum of squares go to the earliest restart.
    """
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    k = _check_k(k, P.shape[0])
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_restarts):
        labels, inertia = _lloyd(P, _kmeanspp(P, k, rng))
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return ClusterAssignment(best[0], k, best[1])


def _labels(a):
    return a.labels if isinstance(a, ClusterAssignment) else np.asarray(a, dtype=np.int64)


def clustering_error(pred, truth):
    """Misclassification rate under the best matching of predicted to true labels."""
    p, t = _labels(pred), _labels(truth)
    if p.shape != t.shape:
        raise ValueError("pred and truth must have the same length")
    if p.size == 0:
        return 0.0
    _, pi = np.unique(p, return_inverse=True)
    _, ti = np.unique(t, return_inverse=True)
    confusion = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(confusion, (pi, ti), 1)
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    return 1.0 - confusion[rows, cols].sum() / p.size


import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robustrep import PenaltySpec, SolveConfig
from robustrep.clustering import (
    ClusterAssignment,
    KMeansDegenerate,
    NotSymmetric,
    build_similarity,
    clustering_error,
    eig_factorize,
    kmeans,
    normalize_rows,
    principal_angle,
    robust_eig_factorize,
    spectral_cluster,
    subspace_represent,
    symmetric_factor_objective,
)
from robustrep.penalties import elementwise_value_sum
from robustrep.solver import palm_solve

from oracles import brute_force_clustering_error, largest_principal_angle


def block_ones(sizes):
    m = sum(sizes)
    W = np.zeros((m, m))
    start = 0
    for s in sizes:
        W[start:start + s, start:start + s] = 1.0
        start += s
    return W


def random_symmetric(rng, m, top, rest):
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    lam = np.concatenate([top, rest])
    return (Q * lam) @ Q.T, Q[:, : len(top)]


class TestEigFactorize:
    def test_diagonal(self):
        X = eig_factorize(np.diag([1.0, 0.5]), 1).X
        assert abs(abs(X[0, 0]) - 1.0) < 1e-15 and abs(X[1, 0]) < 1e-15

    def test_identity_invariant_subspace(self):
        L = np.eye(6)
        X = eig_factorize(L, 2).X
        P = X @ X.T
        np.testing.assert_allclose(P @ L - P, 0.0, atol=1e-12)
        np.testing.assert_allclose(X.T @ X, np.eye(2), atol=1e-12)

    def test_random_psd_against_dense_solver(self, rng):
        B = rng.standard_normal((12, 12))
        L = B @ B.T
        L /= np.linalg.norm(L, 2)
        vals, vecs = np.linalg.eig(L)  # nonsymmetric routine as an independent path
        order = np.argsort(-vals.real)
        ref = vecs[:, order[:3]].real
        assert largest_principal_angle(eig_factorize(L, 3).X, ref) < 1e-8

    def test_descending_order(self, rng):
        L, _ = random_symmetric(rng, 8, [0.9, 0.7, 0.5], rng.uniform(-0.3, 0.3, 5))
        X = eig_factorize(L, 3).X
        rayleigh = np.diag(X.T @ L @ X)
        np.testing.assert_allclose(rayleigh, [0.9, 0.7, 0.5], atol=1e-12)

    def test_not_symmetric(self):
        with pytest.raises(NotSymmetric):
            eig_factorize(np.array([[0.0, 1.0], [0.0, 0.0]]), 1)

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            eig_factorize(np.eye(3), 4)


class TestPrincipalAngle:
    def test_against_cosine_formula(self, rng):
        A = rng.standard_normal((10, 3))
        B = A + 0.1 * rng.standard_normal((10, 3))
        assert principal_angle(A, B) == pytest.approx(largest_principal_angle(A, B), abs=1e-10)

    def test_same_span(self, rng):
        A = rng.standard_normal((10, 3))
        assert principal_angle(A, A @ rng.standard_normal((3, 3))) < 1e-10


class TestRobustEigFactorize:
    def test_ideal_blocks_quadratic_regime(self):
        W = block_ones([4, 3, 5])
        W /= np.linalg.norm(W, 2)
        ref = eig_factorize(W, 3).X
        emb = robust_eig_factorize(W, 3, PenaltySpec.huber(10.0))
        assert largest_principal_angle(emb.X, ref) < 1e-6
        np.testing.assert_allclose(emb.X.T @ emb.X, np.eye(3), atol=1e-10)

    def test_spikes_robust_is_closer(self, rng):
        sizes = [10, 10, 10]
        ideal = block_ones(sizes)
        ideal /= np.linalg.norm(ideal, 2)
        ideal_emb = eig_factorize(ideal, 3).X
        W = ideal.copy()
        pairs = [(0, 15), (3, 25), (12, 28), (7, 21), (18, 2)]
        for i, j in pairs:
            W[i, j] = W[j, i] = 0.9
        classic = eig_factorize(W, 3).X
        robust = robust_eig_factorize(W, 3, PenaltySpec.huber(0.1),
                                      SolveConfig(max_iters=5000, tol=1e-12)).X
        assert largest_principal_angle(robust, ideal_emb) < largest_principal_angle(classic, ideal_emb)

    def test_square_orthogonal(self, rng):
        L, _ = random_symmetric(rng, 5, rng.uniform(-1, 1, 5), [])
        emb = robust_eig_factorize(L, 5, PenaltySpec.huber(0.1))
        assert np.linalg.norm(emb.X.T @ emb.X - np.eye(5)) < 1e-10

    def test_feasible_and_monotone(self, rng):
        L, _ = random_symmetric(rng, 15, [1.0, 0.8], rng.uniform(-0.5, 0.6, 13))
        L[0, 5] = L[5, 0] = 2.0
        emb = robust_eig_factorize(L, 2, PenaltySpec.huber(0.05))
        assert np.linalg.norm(emb.X.T @ emb.X - np.eye(2)) <= 1e-10
        assert np.all(np.diff(emb.report.objective_trace) <= 1e-10)
        assert emb.report.objective_trace[-1] <= emb.report.objective_trace[0]

    def test_quadratic_matches_eig(self, rng):
        L, Q = random_symmetric(rng, 20, [0.95, 0.8, 0.6], rng.uniform(-0.4, 0.5, 17))
        Q0, _ = np.linalg.qr(rng.standard_normal((20, 3)))
        emb = robust_eig_factorize(L, 3, PenaltySpec.quadratic(),
                                   SolveConfig(max_iters=20000, tol=1e-16), init=Q0)
        assert largest_principal_angle(emb.X, Q) < 1e-6
        exact = symmetric_factor_objective(Q, L, PenaltySpec.quadratic())
        assert emb.report.objective_trace[-1] == pytest.approx(exact, abs=1e-6)

    def test_not_symmetric(self):
        with pytest.raises(NotSymmetric):
            robust_eig_factorize(np.triu(np.ones((3, 3))), 1, PenaltySpec.huber(1.0))


class TestBuildSimilarity:
    def test_zero(self):
        np.testing.assert_array_equal(build_similarity(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_single_entry(self):
        C = np.array([[0.0, 5.0], [0.0, 0.0]])
        W = build_similarity(C)
        np.testing.assert_allclose(W, [[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(np.linalg.eigvalsh(W), [-1.0, 1.0])

    def test_block_structure(self, rng):
        C = np.zeros((7, 7))
        C[:3, :3] = rng.uniform(0.1, 1, (3, 3))
        C[3:, 3:] = rng.uniform(0.1, 1, (4, 4))
        np.fill_diagonal(C, 0.0)
        W = build_similarity(C)
        assert np.all(W[:3, 3:] == 0) and np.all(W[3:, :3] == 0)
        assert np.all(W[:3, :3][~np.eye(3, dtype=bool)] > 0)

    def test_hand_computed(self):
        C = np.array([[0.0, 2.0, 0.0], [1.0, 0.0, 0.0], [0.0, 4.0, 0.0]])
        # column max-abs: col0=1, col1=4, col2 all zero
        Cn = np.array([[0.0, 0.5, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        W = np.abs(Cn) + np.abs(Cn.T)
        d = W.sum(1)
        expected = W / np.sqrt(np.outer(d, d))
        np.testing.assert_allclose(build_similarity(C), expected, rtol=1e-14)

    def test_zero_degree_node(self):
        C = np.zeros((3, 3))
        C[0, 1] = 1.0
        W = build_similarity(C)
        assert np.all(W[2] == 0) and np.all(W[:, 2] == 0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 12), st.integers(0, 2 ** 32 - 1))
    def test_properties(self, m, seed):
        rng = np.random.default_rng(seed)
        C = rng.standard_normal((m, m)) * (rng.random((m, m)) < 0.4)
        np.fill_diagonal(C, 0.0)
        W = build_similarity(C)
        assert np.max(np.abs(W - W.T)) <= 1e-12
        assert np.all(W >= 0)
        assert np.max(np.abs(np.linalg.eigvalsh(W))) <= 1 + 1e-10


class TestKmeans:
    def test_two_groups(self):
        P = np.array([[0.0, 0.0]] * 4 + [[1.0, 1.0]] * 3)
        lab = kmeans(P, 2, seed=3).labels
        assert len(set(lab[:4])) == 1 and len(set(lab[4:])) == 1 and lab[0] != lab[4]

    def test_k_equals_m(self, rng):
        P = rng.standard_normal((6, 2))
        out = kmeans(P, 6, seed=1)
        assert sorted(out.labels) == list(range(6))
        assert out.inertia == 0.0

    def test_k_one(self, rng):
        P = rng.standard_normal((9, 3))
        out = kmeans(P, 1)
        assert np.all(out.labels == 0)
        assert out.inertia == pytest.approx(np.sum((P - P.mean(0)) ** 2))

    def test_deterministic(self, rng):
        P = rng.standard_normal((50, 2))
        a, b = kmeans(P, 4, seed=11), kmeans(P, 4, seed=11)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_degenerate(self):
        # three distinct clusters requested from two distinct points
        P = np.array([[0.0], [0.0], [1.0], [1.0]])
        with pytest.raises(KMeansDegenerate):
            kmeans(P, 3)

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((2, 2)), 3)


class TestClusteringError:
    def test_identical(self):
        assert clustering_error([0, 1, 1, 2], [0, 1, 1, 2]) == 0.0

    def test_permuted(self):
        truth = np.array([0, 0, 1, 1, 2, 2])
        for perm in itertools.permutations(range(3)):
            assert clustering_error(np.array(perm)[truth], truth) == 0.0

    def test_one_flip(self):
        truth = np.array([0] * 5 + [1] * 5)
        pred = truth.copy()
        pred[3] = 1
        assert brute_force_clustering_error(pred, truth) == pytest.approx(0.1)
        assert clustering_error(pred, truth) == pytest.approx(0.1)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 3), min_size=1, max_size=14), st.integers(0, 2 ** 32 - 1))
    def test_matches_brute_force_and_is_permutation_invariant(self, truth, seed):
        rng = np.random.default_rng(seed)
        truth = np.array(truth)
        pred = rng.integers(0, 4, truth.size)
        e = clustering_error(pred, truth)
        assert e == pytest.approx(brute_force_clustering_error(pred, truth), abs=1e-12)
        perm = rng.permutation(4)
        assert clustering_error(perm[pred], truth) == e

    def test_assignment_objects(self):
        a = ClusterAssignment([0, 1, 1], 2)
        assert clustering_error(a, a) == 0.0
        assert json.loads(json.dumps(a.to_dict())) == {"k": 2, "labels": [0, 1, 1]}
        assert a.to_csv() == "0,0\n1,1\n2,1\n"

    def test_label_range_checked(self):
        with pytest.raises(ValueError):
            ClusterAssignment([0, 2], 2)


class TestSpectralCluster:
    def test_two_blocks(self):
        out = spectral_cluster(build_similarity(block_ones([3, 4]) - np.eye(7)), 2)
        lab = out.labels
        assert len(set(lab[:3])) == 1 and len(set(lab[3:])) == 1 and lab[0] != lab[3]
        norms = np.linalg.norm(out.embedding, axis=1)
        np.testing.assert_allclose(norms[norms > 0], 1.0)

    def test_all_ones_single_cluster(self):
        out = spectral_cluster(np.ones((6, 6)), 1)
        assert np.all(out.labels == 0)

    def test_robust_needs_penalty(self):
        with pytest.raises(ValueError):
            spectral_cluster(np.eye(3), 1, robust=True)

    def test_normalize_rows_leaves_zero_rows(self):
        X = np.array([[3.0, 4.0], [0.0, 0.0]])
        np.testing.assert_allclose(normalize_rows(X), [[0.6, 0.8], [0.0, 0.0]])


class TestSubspaceRepresent:
    def test_duplicate_columns_pair_up(self, rng):
        y = rng.standard_normal(6)
        y /= np.linalg.norm(y)
        rest, _ = np.linalg.qr(np.column_stack([y, rng.standard_normal((6, 3))]))
        Y = np.column_stack([y, y, rest[:, 1:]])
        C, rep = subspace_represent(Y, 0.05, PenaltySpec.huber(1.0))
        assert np.argmax(np.abs(C[:, 0])) == 1 and np.argmax(np.abs(C[:, 1])) == 0
        assert np.abs(C[1, 0]) > 10 * np.abs(np.delete(C[:, 0], 1)).max(initial=1e-300)
        assert np.all(np.diag(C) == 0)

    def test_huge_lambda_gives_zero(self, rng):
        Y = rng.standard_normal((5, 8))
        C, _ = subspace_represent(Y, 1e6 * np.abs(Y.T @ Y).max(), PenaltySpec.huber(0.5))
        np.testing.assert_array_equal(C, 0.0)

    def test_descent_from_zero(self, rng):
        Y = np.eye(6) + 0.1 * rng.standard_normal((6, 6))
        spec = PenaltySpec.quadratic()
        C, rep = subspace_represent(Y, 1e-3, spec)
        final = elementwise_value_sum(spec, Y - Y @ C) + 1e-3 * np.abs(C).sum()
        assert final <= elementwise_value_sum(spec, Y)
        assert rep.objective_trace[-1] == pytest.approx(final, rel=1e-12)
        assert np.all(np.diff(rep.objective_trace) <= 1e-10)
        assert np.all(np.diag(C) == 0)

    def test_rejects_bad_lambda(self):
        with pytest.raises(ValueError):
            subspace_represent(np.eye(3), 0.0, PenaltySpec.huber(1.0))

"""Factorization kernel against naive elimination and eigenvalue counts."""

import numpy as np

from filterddp import SingularFactorError, contract_first, ldlt_factor, ldlt_solve

from oracles import eig_inertia, gauss_solve, triple_loop_contract


def test_identity_inertia():
    f = ldlt_factor(np.eye(2))
    assert f.inertia == (2, 0, 0)


def test_signed_diagonal_inertia():
    f = ldlt_factor(np.diag([2.0, -3.0]))
    assert f.inertia == (1, 1, 0)


def test_offdiagonal_pair():
    # eigenvalues are exactly +1 and -1
    f = ldlt_factor(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert f.inertia == (1, 1, 0)


def test_rank_one_matrix():
    # eigenvalues 2 and 0
    f = ldlt_factor(np.ones((2, 2)))
    assert f.inertia == (1, 0, 1)


def test_zero_matrix():
    f = ldlt_factor(np.zeros((3, 3)))
    assert f.inertia == (0, 0, 3)


def test_solve_identity():
    b = np.array([1.5, -2.0, 0.25])
    f = ldlt_factor(np.eye(3))
    assert np.allclose(ldlt_solve(f, b), b)


def test_solve_hand_inverse():
    # [[1,1],[1,0]]^-1 = [[0,1],[1,-1]], so K x = [1,0] gives x = [0,1]
    K = np.array([[1.0, 1.0], [1.0, 0.0]])
    f = ldlt_factor(K)
    x = ldlt_solve(f, np.array([1.0, 0.0]))
    assert np.allclose(x, [0.0, 1.0], atol=1e-14)


def test_random_spd_solve_matches_elimination():
    rng = np.random.default_rng(42)
    for _ in range(50):
        n = rng.integers(1, 9)
        W = rng.standard_normal((n, n))
        K = W @ W.T + n * np.eye(n)
        b = rng.standard_normal(n)
        x = ldlt_solve(ldlt_factor(K), b)
        assert np.max(np.abs(x - gauss_solve(K, b))) < 1e-10


def test_random_indefinite_solve_and_inertia():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(1, 10))
        W = rng.standard_normal((n, n))
        K = 0.5 * (W + W.T)
        f = ldlt_factor(K)
        assert f.inertia == eig_inertia(K)
        if f.inertia[2] == 0:
            b = rng.standard_normal(n)
            r = K @ ldlt_solve(f, b) - b
            assert np.max(np.abs(r)) < 1e-8 * max(1.0, np.max(np.abs(K)))


def test_forced_singular_inertia():
    # Zero rows and duplicated rows survive elimination exactly (identical
    # floats cancel), unlike a rotated low-rank product whose null space
    # fills with roundoff.  That is also the shape rank deficiency takes in
    # constraint Jacobians: a constraint without some variable, or a
    # repeated constraint.
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = int(rng.integers(3, 9))
        z = int(rng.integers(1, n - 1))
        W = rng.standard_normal((n - z, n - z))
        K = np.zeros((n, n))
        K[: n - z, : n - z] = 0.5 * (W + W.T)
        p = rng.permutation(n)
        K = K[np.ix_(p, p)]
        f = ldlt_factor(K)
        assert f.inertia == eig_inertia(K)
        assert f.inertia[2] >= z


def test_duplicate_row_singularity():
    rng = np.random.default_rng(9)
    W = rng.standard_normal((4, 4))
    K = 0.5 * (W + W.T)
    K[3] = K[2]
    K[:, 3] = K[:, 2]
    f = ldlt_factor(K)
    assert f.inertia == eig_inertia(K)
    assert f.inertia[2] >= 1


def test_multiple_right_hand_sides():
    rng = np.random.default_rng(11)
    K = np.array([[4.0, 1.0, 0.0], [1.0, -2.0, 0.5], [0.0, 0.5, 3.0]])
    B = rng.standard_normal((3, 4))
    X = ldlt_solve(ldlt_factor(K), B)
    assert np.max(np.abs(K @ X - B)) < 1e-12


def test_singular_solve_raises():
    f = ldlt_factor(np.ones((2, 2)))
    try:
        ldlt_solve(f, np.array([1.0, 0.0]))
    except SingularFactorError:
        return
    assert False, "expected SingularFactorError"


def test_condition_estimate_tracks_diagonal_spread():
    f = ldlt_factor(np.diag([1e8, 1.0]))
    assert 1e7 < f.condition < 1e9
    g = ldlt_factor(np.eye(4))
    assert g.condition == 1.0


def test_contract_first_zero_vector():
    T = np.arange(12.0).reshape(3, 2, 2)
    assert np.all(contract_first(np.zeros(3), T) == 0.0)


def test_contract_first_single_slice():
    T = np.eye(2)[None, :, :]
    out = contract_first(np.array([2.0]), T)
    assert np.allclose(out, 2.0 * np.eye(2))


def test_contract_first_matches_triple_loop():
    rng = np.random.default_rng(5)
    for _ in range(20):
        p, a, b = rng.integers(1, 5, size=3)
        v = rng.standard_normal(p)
        T = rng.standard_normal((p, a, b))
        assert np.max(np.abs(contract_first(v, T) - triple_loop_contract(v, T))) < 1e-14

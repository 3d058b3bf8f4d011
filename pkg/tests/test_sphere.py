import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from icstbc import matcore
from icstbc.sphere import (LatticeProblem, SearchCapError, SingularProblemError,
                           exhaustive_search, full_tree_nodes, sphere_search,
                           sphere_search_batch, sphere_search_indices)

PAM4 = np.array([-3.0, -1.0, 1.0, 3.0])


def random_problem(r, n, m, scale=2.0):
    R = np.triu(r.standard_normal((n, n)))
    np.fill_diagonal(R, np.abs(np.diag(R)) + 0.05)
    alph = [np.arange(-(m - 1), m, 2.0)] * n
    return LatticeProblem(R, r.standard_normal(n) * scale * np.sqrt(m), alph)


def test_one_dimensional():
    x, stats = sphere_search(LatticeProblem(np.array([[1.0]]), np.array([0.3]), [[-1, 1]]))
    assert x[0] == 1 and 1 <= stats.visited_nodes <= 2


def test_exact_hit(rng):
    p = random_problem(rng, 4, 4)
    x0 = rng.choice(PAM4, 4)
    p = LatticeProblem(p.R, p.R @ x0, p.alphabets)
    x, _ = sphere_search(p)
    assert np.array_equal(x, x0) and p.objective(x) == pytest.approx(0, abs=1e-20)


def test_matches_exhaustive_4pam(rng):
    for _ in range(1000):
        p = random_problem(rng, 4, 4)
        x, stats = sphere_search(p)
        xe, obj = exhaustive_search(p)
        assert np.array_equal(x, xe)
        assert stats.visited_nodes >= p.n
        assert stats.visited_nodes <= full_tree_nodes([4] * 4)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.sampled_from([2, 4, 8, 16]), st.integers(0, 2 ** 32 - 1))
def test_matches_exhaustive_property(n, m, seed):
    if m ** n > 2 * 10 ** 5:
        m = 4
    p = random_problem(np.random.default_rng(seed), n, m)
    x, stats = sphere_search(p)
    _, obj = exhaustive_search(p)
    assert abs(p.objective(x) - obj) <= 1e-9 * (1 + obj)
    assert p.n <= stats.visited_nodes <= full_tree_nodes([m] * n)


def test_tie_break_lexicographic():
    p = LatticeProblem(np.eye(2), np.zeros(2), [[-1, 1], [-1, 1]])
    x, _ = sphere_search(p)
    xe, _ = exhaustive_search(p)
    assert list(x) == [-1, -1] == list(xe)


def test_singleton_alphabets():
    p = LatticeProblem(np.eye(3), np.ones(3) * 5, [[2.0]] * 3)
    assert list(exhaustive_search(p)[0]) == [2, 2, 2]
    assert list(sphere_search(p)[0]) == [2, 2, 2]


def test_exhaustive_cap():
    p = LatticeProblem(np.eye(6), np.zeros(6), [np.arange(16.0)] * 6)
    with pytest.raises(SearchCapError):
        exhaustive_search(p)


def test_rejects_singular_unless_allowed(rng):
    R = np.triu(rng.standard_normal((3, 3)))
    R[1, 1] = 0.0
    R[0, 0], R[2, 2] = 1.0, 1.0
    p = LatticeProblem(R, rng.standard_normal(3), [PAM4] * 3)
    with pytest.raises(SingularProblemError):
        sphere_search(p)
    x, _ = sphere_search(p, allow_singular=True)
    assert p.objective(x) == pytest.approx(exhaustive_search(p)[1])


def test_singular_allowed_matches_exhaustive(rng):
    # rank-deficient R from a wide real channel, as produced with one receive antenna
    for _ in range(300):
        G = rng.standard_normal((2, 4))
        _, R = matcore.qr_decompose(np.vstack([G, np.zeros((2, 4))]))
        p = LatticeProblem(np.triu(R.real), rng.standard_normal(4) * 3, [PAM4] * 4)
        x, _ = sphere_search(p, allow_singular=True)
        assert p.objective(x) == pytest.approx(exhaustive_search(p)[1], abs=1e-9)


def test_invalid_problem():
    with pytest.raises(ValueError):
        LatticeProblem(np.ones((2, 2)), np.zeros(2), [[0], [0]])
    with pytest.raises(ValueError):
        LatticeProblem(np.eye(2), np.zeros(3), [[0], [0]])


def test_full_tree_count():
    p = LatticeProblem(np.eye(3), np.zeros(3), [PAM4, PAM4[:2], PAM4])
    _, stats = sphere_search(p, full=True)
    assert stats.visited_nodes == full_tree_nodes([4, 2, 4]) == 4 + 8 + 32
    assert stats.leaf_updates == 32


def test_permutation_covariance(rng):
    for _ in range(50):
        n = 4
        G = rng.standard_normal((n, n))
        z = rng.standard_normal(n) * 3
        perm = rng.permutation(n)
        base = np.linalg.qr(G)
        p1 = LatticeProblem(np.triu(base[1]) * np.sign(np.diag(base[1]))[:, None],
                            (base[0].T @ z) * np.sign(np.diag(base[1])), [PAM4] * n)
        x1, _ = exhaustive_search(p1)
        q2, r2 = np.linalg.qr(G[:, perm])
        sgn = np.sign(np.diag(r2))
        p2 = LatticeProblem(r2 * sgn[:, None], (q2.T @ z) * sgn, [PAM4] * n)
        x2, _ = sphere_search(p2)
        assert np.array_equal(x2, x1[perm])


def test_indices_and_batch(rng):
    probs = [random_problem(rng, 3, 8) for _ in range(30)]
    R = np.stack([p.R for p in probs])
    Z = np.stack([p.z for p in probs])
    idx, visited = sphere_search_batch(R, Z, probs[0].alphabets)
    for b, p in enumerate(probs):
        i, stats = sphere_search_indices(p)
        assert np.array_equal(idx[b], i) and visited[b] == stats.visited_nodes


def test_se_cheaper_than_natural_on_average(rng):
    se = nat = 0
    for _ in range(2000):
        p = random_problem(rng, 4, 8)
        se += sphere_search(p)[1].visited_nodes
        nat += sphere_search(p, order="natural")[1].visited_nodes
        assert np.array_equal(sphere_search(p)[0], sphere_search(p, order="natural")[0])
    assert se < 0.5 * nat


def test_se_can_visit_more_than_natural():
    # a fixed instance where nearest-first sibling order is not the cheaper path;
    # the ordering is a heuristic and does not dominate instance by instance
    R = np.array([[0.2, -0.8, -0.6], [0.0, 0.8, -1.6], [0.0, 0.0, 0.3]])
    p = LatticeProblem(R, np.array([4.6, 2.1, 2.2]), [PAM4] * 3)
    a = sphere_search(p)
    b = sphere_search(p, order="natural")
    assert np.array_equal(a[0], b[0])
    assert a[1].visited_nodes == 37 and b[1].visited_nodes == 36

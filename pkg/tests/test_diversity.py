import re

import numpy as np
import pytest

from icstbc import diversity, matcore, picgd, stbc
from icstbc.channel import build_equivalent, sample_channel
from icstbc.constellation import make_qam
from conftest import crandn

QPSK = make_qam(4)


def lemma1_instance(r, p=6, a_cols=2, v_rank=3):
    A = crandn(r, p, a_cols)
    u, _, _ = np.linalg.svd(A)
    C = u[:, a_cols:]
    B = crandn(r, p, v_rank)
    return A, C, B @ B.conj().T


def test_lemma1_trivial_cases(rng):
    A, C, _ = lemma1_instance(rng)
    assert diversity.check_lemma1(A, C, np.zeros((6, 6)))
    assert diversity.check_lemma1(np.eye(4), np.zeros((4, 0)), np.diag([1.0, 0, 2, 0]))


def test_lemma1_random_against_direct_ranks(rng):
    for _ in range(200):
        A, C, V = lemma1_instance(rng, v_rank=int(rng.integers(0, 7)))
        lhs = matcore.rank_tol(np.hstack([A, V]))
        rhs = matcore.rank_tol(C.conj().T @ V @ C) + matcore.rank_tol(A)
        assert lhs == rhs
        assert diversity.check_lemma1(A, C, V)


@pytest.mark.parametrize("mutate,needle", [
    (lambda A, C, V: (A, C[:, :-1], V), "r(A) + r(C)"),
    (lambda A, C, V: (A, C + A[:, :1] @ np.ones((1, C.shape[1])), V), "C^H A"),
    (lambda A, C, V: (A, C, V + np.triu(np.ones_like(V), 1)), "Hermitian"),
    (lambda A, C, V: (A, C, -V - np.eye(6)), "positive semi-definite"),
    (lambda A, C, V: (np.hstack([A, A[:, :1]]), C, V), "full column rank"),
])
def test_lemma1_preconditions(rng, mutate, needle):
    args = mutate(*lemma1_instance(rng))
    with pytest.raises(diversity.PreconditionError, match=re.escape(needle)):
        diversity.check_lemma1(*args)


def test_lemma1_full_column_rank_condition():
    A = np.array([[1, 1], [0, 0], [0, 0]], dtype=complex)
    C = np.array([[0, 0], [1, 0], [0, 1]], dtype=complex)
    with pytest.raises(diversity.PreconditionError):
        diversity.check_lemma1(A, C, np.eye(3))


def test_ml_full_diversity_exhaustive():
    code = stbc.two_user_scheme(2, 3).codes[0]
    rep = diversity.check_ml_full_diversity(code, QPSK)
    assert rep.exhaustive and rep.trials == 9 ** 3 - 1 and rep.failures == 0
    assert rep.min_observed_rank_margin == 0 and rep.passed


def test_identity_rotation_loses_diversity():
    code = stbc.two_user_scheme(2, 3, stbc.RotationMatrix.identity(3)).codes[0]
    rep = diversity.check_ml_full_diversity(code, QPSK)
    assert rep.failures > 0 and rep.min_observed_rank_margin < 0
    # a single nonzero difference in the last slot leaves a rank-one codeword difference
    dx = code.encode([0, 0, 2])
    assert matcore.rank_tol(dx) == 1


def test_ml_sampling_fallback():
    code = stbc.two_user_scheme(2, 4).codes[0]
    rep = diversity.check_ml_full_diversity(code, QPSK, cap=100, samples=500)
    assert not rep.exhaustive and rep.trials == 500 and rep.failures == 0
    assert rep.per_user[0]["coverage"] == pytest.approx(500 / (9 ** 4 - 1))


@pytest.mark.parametrize("kind,n_t,n,mode", [(stbc.TWO_USER, 2, 3, picgd.PICGD),
                                             (stbc.TWO_USER, 3, 4, picgd.PICGD),
                                             (stbc.THREE_USER, 2, 3, picgd.PICGD_SIC),
                                             (stbc.THREE_USER, 3, 5, picgd.PICGD_SIC)])
def test_theorem1_rank_passes(kind, n_t, n, mode):
    scheme = stbc.build_scheme(kind, n_t, n)
    rep = diversity.check_theorem1_rank(scheme, QPSK, 30, 50, mode, seed=1)
    assert rep.trials == 30 * 50 * scheme.K and rep.failures == 0


def test_theorem1_rank_detects_plain_picgd_on_three_users():
    scheme = stbc.three_user_scheme(2, 3)
    rep = diversity.check_theorem1_rank(scheme, QPSK, 20, 20, picgd.PICGD, seed=2)
    assert rep.failures > 0
    assert rep.failures <= rep.trials
    with pytest.raises(ValueError):
        diversity.check_theorem1_rank(scheme, QPSK, 1, 1, "ml")


def test_projector_rank_reduction(rng):
    scheme = stbc.two_user_scheme(2, 3)
    alph = diversity.difference_alphabet(QPSK)
    for _ in range(1000):
        eq = build_equivalent(scheme, sample_channel(2, 2, 1, rng))
        hbar = eq.interference([1], rotated=False)
        d = alph[rng.integers(0, len(alph), 3)]
        if not np.any(d):
            continue
        dx = scheme.codes[0].encode(d)
        P = matcore.projector_onto_complement(hbar)
        lhs = diversity.projected_rank(P, dx)
        rhs = matcore.rank_tol(np.hstack([hbar, dx])) - matcore.rank_tol(hbar)
        assert lhs == rhs


@pytest.mark.parametrize("kind,n_t,n", [(stbc.TWO_USER, 2, 2), (stbc.TWO_USER, 3, 6),
                                        (stbc.THREE_USER, 2, 3), (stbc.THREE_USER, 3, 6)])
def test_rate_bound_consistency(kind, n_t, n):
    s = stbc.build_scheme(kind, n_t, n)
    assert s.rate == stbc.rate_bound(s.K, n_t, s.T)


def test_report_json_fields():
    rep = diversity.RankReport("x", trials=3, failures=0)
    d = rep.to_dict()
    assert d["passed"] and set(d) >= {"scheme_id", "trials", "failures",
                                      "min_observed_rank_margin", "per_user"}

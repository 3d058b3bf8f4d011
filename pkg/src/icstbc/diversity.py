"""Numerical checks of the full-diversity rank criteria.

"Almost surely" is made executable as: zero failures over the sampled
channels at ``rel_tol = 1e-10``.  A failing (difference, channel) pair is
re-checked on one fresh channel draw before being reported, so that a
measure-zero channel cannot masquerade as a code defect.
"""

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from . import matcore
from .channel import build_equivalent, sample_channel
from .picgd import PICGD, PICGD_SIC, interferers


class PreconditionError(ValueError):
    pass


@dataclass
class RankReport:
    scheme_id: str
    trials: int = 0
    failures: int = 0
    min_observed_rank_margin: int = 0
    exhaustive: bool = True
    per_user: list = field(default_factory=list)

    @property
    def passed(self):
        return self.failures == 0

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


def difference_alphabet(constellation, decimals=12):
    pts = constellation.points
    d = (pts[:, None] - pts[None, :]).reshape(-1)
    d = np.round(d.real, decimals) + 1j * np.round(d.imag, decimals)
    return np.unique(d)


def check_lemma1(A, C, V, rel_tol=matcore.DEFAULT_RANK_TOL):
    """``r([A V]) == r(C^H V C) + r(A)`` under the stated preconditions.

    Raises
    ------
    PreconditionError
        Naming the first violated condition.
    """
    A = matcore.as_cmatrix(A)
    C = np.asarray(C, dtype=np.complex128)
    V = matcore.as_cmatrix(V)
    p = A.shape[0]
    if C.ndim != 2 or C.shape[0] != p or V.shape != (p, p):
        raise PreconditionError("dimension mismatch between A, C and V")
    rA = matcore.rank_tol(A, rel_tol)
    rC = matcore.rank_tol(C, rel_tol) if C.size else 0
    if rA + rC != p:
        raise PreconditionError(f"r(A) + r(C) = {rA} + {rC} != p = {p}")
    scale = max(np.linalg.norm(A) * max(np.linalg.norm(C), 1.0), 1.0)
    if C.size and np.linalg.norm(C.conj().T @ A) > 1e-9 * scale:
        raise PreconditionError("C^H A != 0")
    if rA != A.shape[1]:
        raise PreconditionError("A is not of full column rank")
    vscale = max(np.linalg.norm(V), 1.0)
    if np.linalg.norm(V - V.conj().T) > 1e-9 * vscale:
        raise PreconditionError("V is not Hermitian")
    if np.min(np.linalg.eigvalsh(V)) < -1e-9 * vscale:
        raise PreconditionError("V is not positive semi-definite")
    lhs = matcore.rank_tol(np.hstack([A, V]), rel_tol)
    cvc = C.conj().T @ V @ C
    rhs = (matcore.rank_tol(cvc, rel_tol) if cvc.size else 0) + rA
    return lhs == rhs


def _codeword_differences(code, deltas):
    rot = deltas @ code.rotation.matrix.T
    return np.einsum("bi,itj->btj", rot, code.dispersion)


def _sample_deltas(alphabet, n, count, rng):
    out = np.empty((count, n), dtype=np.complex128)
    filled = 0
    while filled < count:
        d = rng.choice(alphabet, size=(count, n))
        d = d[np.any(d != 0, axis=1)][:count - filled]
        out[filled:filled + len(d)] = d
        filled += len(d)
    return out


def check_ml_full_diversity(code, constellation, cap=10 ** 6, samples=10 ** 5, seed=0,
                            rel_tol=matcore.DEFAULT_RANK_TOL, scheme_id=""):
    """Count nonzero codeword differences whose rank is below ``N_t``.

    Enumerates every nonzero difference vector when there are at most
    ``cap`` of them, otherwise samples ``samples`` of them uniformly.
    """
    alphabet = difference_alphabet(constellation)
    n = code.n
    total = len(alphabet) ** n - 1
    exhaustive = total <= cap
    if exhaustive:
        deltas = np.array([c for c in itertools.product(alphabet, repeat=n) if any(c)])
    else:
        deltas = _sample_deltas(alphabet, n, samples, np.random.default_rng(seed))
    failures, margin = 0, np.inf
    for start in range(0, len(deltas), 1 << 15):
        dx = _codeword_differences(code, deltas[start:start + (1 << 15)])
        ranks = matcore.rank_tol(dx, rel_tol)
        failures += int(np.sum(ranks < code.n_t))
        margin = min(margin, int(np.min(ranks)) - code.n_t)
    report = RankReport(scheme_id or f"user{code.user_index + 1}", trials=len(deltas),
                        failures=failures, min_observed_rank_margin=int(margin),
                        exhaustive=exhaustive)
    report.per_user.append({"user": code.user_index + 1, "trials": len(deltas),
                            "failures": failures, "coverage": len(deltas) / total})
    return report


def _additivity_margin(Hbar, dx, rel_tol):
    """``r([Hbar dX]) - r(Hbar) - r(dX)`` and whether ``r([Hbar dX]) > r(Hbar)``."""
    r_dx = matcore.rank_tol(dx, rel_tol)
    if Hbar.shape[1] == 0:
        return np.zeros(len(dx), dtype=int), r_dx > 0
    r_h = matcore.rank_tol(Hbar, rel_tol)
    stacked = np.concatenate([np.broadcast_to(Hbar, (len(dx),) + Hbar.shape), dx], axis=-1)
    r_all = matcore.rank_tol(stacked, rel_tol)
    return r_all - r_h - r_dx, r_all > r_h


def check_theorem1_rank(scheme, constellation, channel_samples=200, diff_samples=200,
                        mode=PICGD, seed=0, rel_tol=matcore.DEFAULT_RANK_TOL):
    """Rank additivity of ``[H_interf | dX_l]`` over random channels.

    PICGD stacks every other user; PICGD-SIC stacks only the users decoded
    after ``l``.  One receive antenna is used.
    """
    if mode not in (PICGD, PICGD_SIC):
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    alphabet = difference_alphabet(constellation)
    order = tuple(scheme.decode_order)
    report = RankReport(f"{scheme.kind}:nt={scheme.n_t}:n={scheme.n}:{mode}", exhaustive=False)
    stats = {l: {"user": l + 1, "trials": 0, "failures": 0, "redraws": 0, "min_margin": 0}
             for l in range(scheme.K)}
    for _ in range(channel_samples):
        eq = build_equivalent(scheme, sample_channel(scheme.K, scheme.n_t, 1, rng))
        for l in range(scheme.K):
            others = interferers(mode, order, l)
            dx = _codeword_differences(scheme.codes[l],
                                       _sample_deltas(alphabet, scheme.n, diff_samples, rng))
            margin, first = _additivity_margin(eq.interference(others, rotated=False), dx,
                                               rel_tol)
            bad = (margin != 0) | ~first
            st = stats[l]
            st["trials"] += len(dx)
            if np.any(bad):
                st["redraws"] += 1
                eq2 = build_equivalent(scheme, sample_channel(scheme.K, scheme.n_t, 1, rng))
                margin2, first2 = _additivity_margin(eq2.interference(others, rotated=False),
                                                     dx[bad], rel_tol)
                still = (margin2 != 0) | ~first2
                st["failures"] += int(np.sum(still))
                if np.any(still):
                    st["min_margin"] = min(st["min_margin"], int(np.min(margin2)))
    report.per_user = list(stats.values())
    report.trials = sum(s["trials"] for s in report.per_user)
    report.failures = sum(s["failures"] for s in report.per_user)
    report.min_observed_rank_margin = min(s["min_margin"] for s in report.per_user)
    return report


def projected_rank(P, dx, rel_tol=matcore.DEFAULT_RANK_TOL):
    return matcore.rank_tol(P @ dx, rel_tol)

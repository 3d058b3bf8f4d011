"""Partial interference cancellation group decoding (with optional SIC).

Each user's symbols form one group.  To decode user ``l`` the received
vector is projected onto the orthogonal complement of the interfering
users' equivalent channels and the remaining single-user problem is solved
exactly.  With a real rotation the projected Gram matrix is real, so the
thin QR factor ``R`` is real and the real and imaginary symbol parts are
found by two independent ``n``-dimensional real searches.
"""

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from . import matcore
from .channel import equivalent_matrix
from .sphere import LatticeProblem, sphere_search, sphere_search_batch

log = logging.getLogger(__name__)

PICGD = "picgd"
PICGD_SIC = "picgd-sic"

DECOUPLED = "decoupled"
JOINT = "joint"              # exhaustive complex enumeration
JOINT_SPHERE = "joint-sphere"

REAL_R_TOL = 1e-9
JOINT_CAP = 10 ** 6


class DecouplingError(ValueError):
    pass


def interferers(mode, order, l):
    """Users whose column space is cancelled before decoding ``l``."""
    if mode == PICGD:
        return [k for k in order if k != l]
    if mode == PICGD_SIC:
        return list(order[order.index(l) + 1:])
    raise ValueError(f"unknown decoding mode {mode!r}")


@dataclass(frozen=True, eq=False)
class UserStage:
    projection: np.ndarray   # P_l
    channel: np.ndarray      # P_l H_l U
    Q: np.ndarray
    R: np.ndarray


@dataclass(frozen=True, eq=False)
class GroupDecoder:
    mode: str
    order: tuple
    eqch: object
    stages: tuple
    real_rotation: bool

    @classmethod
    def build(cls, scheme, eqch, mode=PICGD, order_by_strength=False):
        """Precompute projections and QR factors for one channel realization.

        ``order_by_strength`` replaces the scheme's fixed SIC order by users
        sorted on decreasing ``||H_l||_F``.
        """
        order = tuple(scheme.decode_order)
        if order_by_strength:
            norms = [np.linalg.norm(h) for h in eqch.rotated]
            order = tuple(int(k) for k in np.argsort(norms, kind="stable")[::-1])
        stages = []
        for l in range(scheme.K):
            P = matcore.projector_onto_complement(eqch.interference(interferers(mode, order, l)))
            G = P @ eqch.rotated[l]
            Q, R = matcore.qr_decompose(G)
            stages.append(UserStage(P, G, Q, R))
        rot = scheme.rotation.matrix
        real = not (np.iscomplexobj(rot) and np.any(np.imag(rot) != 0))
        return cls(mode, order, eqch, tuple(stages), real)

    def objective(self, y, l, s):
        st = self.stages[l]
        r = st.projection @ y - st.channel @ np.asarray(s)
        return float(np.real(np.vdot(r, r)))


def decode_joint(dec, y, l, constellation, method=JOINT, cap=JOINT_CAP):
    """``argmin_s ||P_l y - P_l H_l U s||`` over the full complex alphabet.

    ``method="joint"`` enumerates every candidate (ties to the smallest
    point-index vector); ``"joint-sphere"`` runs the sphere search on the
    real-stacked lattice.
    """
    st = dec.stages[l]
    py = st.projection @ y
    n = st.channel.shape[1]
    pts = constellation.points
    if method == JOINT_SPHERE:
        return _joint_sphere(st.channel, py, constellation)[0]
    if len(pts) ** n > cap:
        raise ValueError(f"{len(pts)}^{n} candidates exceed the cap of {cap}")
    best, best_s = np.inf, None
    cands = itertools.product(pts, repeat=n)
    while True:
        block = np.array(list(itertools.islice(cands, 1 << 14)), dtype=np.complex128)
        if block.size == 0:
            break
        res = py[None, :] - block @ st.channel.T
        obj = np.einsum("ij,ij->i", res.real, res.real) + np.einsum("ij,ij->i", res.imag, res.imag)
        i = int(np.argmin(obj))
        if obj[i] < best:
            best, best_s = obj[i], block[i]
    return best_s


def _real_stack(G, py):
    Gr = np.block([[G.real, -G.imag], [G.imag, G.real]])
    return Gr, np.concatenate([py.real, py.imag])


def _joint_sphere(G, py, constellation, full=False):
    n = G.shape[1]
    Gr, yr = _real_stack(G, py)
    Q, R = matcore.qr_decompose(Gr)
    z = (Q.conj().T @ yr).real
    alph = [constellation.real_levels] * n + [constellation.imag_levels] * n
    x, stats = sphere_search(LatticeProblem(np.triu(R.real), z, alph), full=full,
                             allow_singular=True)
    return x[:n] + 1j * x[n:], stats


def _require_decouplable(dec, constellation, R):
    if not dec.real_rotation:
        raise DecouplingError("real/imaginary decoupling needs a real rotation")
    if not constellation.is_rectangular:
        raise DecouplingError("real/imaginary decoupling needs a rectangular constellation")
    scale = max(1.0, float(np.max(np.abs(R))))
    if np.max(np.abs(R.imag)) > REAL_R_TOL * scale:
        raise DecouplingError(f"R is not real (max |Im| = {np.max(np.abs(R.imag)):.2e})")


def decode_decoupled(dec, y, l, constellation, full=False, return_stats=False):
    """Two real searches on ``Re``/``Im`` of ``Q^H P_l y`` against the real ``R``.

    Returns the symbol vector, and with ``return_stats`` also the two
    :class:`~icstbc.sphere.SearchStats` (real part, imaginary part).
    """
    st = dec.stages[l]
    _require_decouplable(dec, constellation, st.R)
    z = st.Q.conj().T @ (st.projection @ y)
    R = np.triu(st.R.real)
    n = R.shape[0]
    x_re, s_re = sphere_search(LatticeProblem(R, z.real, [constellation.real_levels] * n),
                               full=full, allow_singular=True)
    x_im, s_im = sphere_search(LatticeProblem(R, z.imag, [constellation.imag_levels] * n),
                               full=full, allow_singular=True)
    s = x_re + 1j * x_im
    return (s, (s_re, s_im)) if return_stats else s


def decode_all(dec, y, scheme, constellation, method=DECOUPLED, override=None):
    """Decode every user; SIC subtracts each decision before the next stage.

    ``override`` maps user -> forced decision (test hook for error
    propagation).  Returns a list of ``K`` symbol vectors in user order.
    """
    override = override or {}
    y = np.asarray(y, dtype=np.complex128).copy()
    out = [None] * scheme.K
    seq = dec.order if dec.mode == PICGD_SIC else range(scheme.K)
    for l in seq:
        if l in override:
            s = np.asarray(override[l], dtype=np.complex128)
        elif method == DECOUPLED:
            s = decode_decoupled(dec, y, l, constellation)
        else:
            s = decode_joint(dec, y, l, constellation, method=method)
        out[l] = s
        if dec.mode == PICGD_SIC:
            y = y - dec.eqch.rotated[l] @ s
    return out


# ---------------------------------------------------------------- batched path

def decode_batch(scheme, H, Y, constellation, mode=PICGD, method=DECOUPLED):
    """Vectorised decoder over ``B`` independent trials.

    Parameters
    ----------
    H : (B, K, N_t, N_r) complex
    Y : (B, N_r T) complex

    Returns
    -------
    point_idx : (B, K, n) int
        Indices into ``constellation.points``.
    visited : (B,) int
        Sphere nodes visited, summed over users and searches.
    """
    B = Y.shape[0]
    K, n = scheme.K, scheme.n
    heq = [equivalent_matrix(c.dispersion, H[:, k]) @ c.rotation.matrix
           for k, c in enumerate(scheme.codes)]
    order = tuple(scheme.decode_order)
    ycur = np.array(Y, dtype=np.complex128)
    point_idx = np.zeros((B, K, n), dtype=np.int64)
    visited = np.zeros(B, dtype=np.int64)
    re_lv, im_lv = constellation.real_levels, constellation.imag_levels
    seq = order if mode == PICGD_SIC else range(K)
    for l in seq:
        others = interferers(mode, order, l)
        if others:
            Hbar = np.concatenate([heq[k] for k in others], axis=-1)
            P = matcore.projector_onto_complement(Hbar)
            py = np.einsum("bij,bj->bi", P, ycur)
            G = P @ heq[l]
        else:
            py, G = ycur, heq[l]
        if method == DECOUPLED:
            Q, R = matcore.qr_decompose(G)
            scale = max(1.0, float(np.max(np.abs(R))))
            if np.max(np.abs(R.imag)) > REAL_R_TOL * scale:
                raise DecouplingError("R is not real; use method='joint-sphere'")
            z = np.einsum("bji,bj->bi", Q.conj(), py)
            Rr = np.triu(R.real)
            i_re, v1 = sphere_search_batch(Rr, z.real, [re_lv] * n, allow_singular=True)
            i_im, v2 = sphere_search_batch(Rr, z.imag, [im_lv] * n, allow_singular=True)
            visited += v1 + v2
        elif method == JOINT_SPHERE:
            Gr = np.concatenate([np.concatenate([G.real, -G.imag], -1),
                                 np.concatenate([G.imag, G.real], -1)], -2)
            yr = np.concatenate([py.real, py.imag], -1)
            Q, R = matcore.qr_decompose(Gr)
            z = np.einsum("bji,bj->bi", Q.real, yr)
            idx, v = sphere_search_batch(np.triu(R.real), z, [re_lv] * n + [im_lv] * n,
                                          allow_singular=True)
            i_re, i_im = idx[:, :n], idx[:, n:]
            visited += v
        else:
            raise ValueError(f"unsupported batch method {method!r}")
        point_idx[:, l] = constellation.point_index(i_re, i_im)
        if mode == PICGD_SIC:
            s = re_lv[i_re] + 1j * im_lv[i_im]
            ycur = ycur - np.einsum("bij,bj->bi", heq[l], s)
    return point_idx, visited

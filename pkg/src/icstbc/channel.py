"""Quasi-static Rayleigh MIMO multiple-access channel and equivalent channels."""

from dataclasses import dataclass

import numpy as np

from .matcore import vec


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """``H[k]`` is the ``N_t x N_r`` matrix of user ``k``; column ``m`` is ``h_{k,m}``."""

    H: np.ndarray

    @property
    def K(self):
        return self.H.shape[0]

    @property
    def n_t(self):
        return self.H.shape[1]

    @property
    def n_r(self):
        return self.H.shape[2]


def complex_normal(rng, shape, var=1.0):
    """Circular complex Gaussian samples with ``E|x|^2 = var``."""
    return np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_channel(K, n_t, n_r, seed):
    """Draw i.i.d. CN(0, 1) coefficients; ``seed`` may be an int or a Generator."""
    if min(K, n_t, n_r) <= 0:
        raise ValueError("channel dimensions must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return ChannelRealization(complex_normal(rng, (K, n_t, n_r)))


def equivalent_blocks(dispersion, H_k):
    """``(N_r, T, n)`` stack of ``[A_1 h_m ... A_n h_m]`` for every antenna ``m``.

    ``H_k`` may carry leading batch axes: ``(..., N_t, N_r)`` gives
    ``(..., N_r, T, n)``.
    """
    return np.einsum("itj,...jm->...mti", dispersion, H_k)


def equivalent_matrix(dispersion, H_k):
    """Stacked ``N_r T x n`` equivalent channel of one user (batch-aware)."""
    blocks = equivalent_blocks(dispersion, H_k)
    shape = blocks.shape
    return blocks.reshape(shape[:-3] + (shape[-3] * shape[-2], shape[-1]))


@dataclass(frozen=True, eq=False)
class EquivalentChannel:
    """``plain[k]`` maps unrotated dispersion weights to ``y``; ``rotated[k] =
    plain[k] @ U`` maps QAM symbols to ``y``."""

    plain: tuple
    rotated: tuple

    @property
    def K(self):
        return len(self.plain)

    def interference(self, users, rotated=True):
        mats = self.rotated if rotated else self.plain
        if not users:
            rows = mats[0].shape[0]
            return np.zeros((rows, 0), dtype=np.complex128)
        return np.hstack([mats[k] for k in users])


def build_equivalent(scheme, ch):
    if ch.K != scheme.K or ch.n_t != scheme.n_t:
        raise ValueError(f"channel ({ch.K} users, N_t={ch.n_t}) does not match scheme "
                         f"({scheme.K} users, N_t={scheme.n_t})")
    plain = tuple(equivalent_matrix(code.dispersion, ch.H[k])
                  for k, code in enumerate(scheme.codes))
    rotated = tuple(p @ code.rotation.matrix for p, code in zip(plain, scheme.codes))
    return EquivalentChannel(plain, rotated)


def build_D(h, n):
    """Closed form of ``[A_1 h ... A_n h]`` for one C block (no zero padding)."""
    h = np.asarray(h, dtype=np.complex128).reshape(-1)
    n_t = len(h)
    if n < n_t:
        raise ValueError(f"D(h) needs n >= N_t, got n={n}, N_t={n_t}")
    D = np.zeros((n + n_t - 1, n), dtype=np.complex128)
    prefix = np.cumsum(h)
    for r in range(n):
        D[r, r] = prefix[min(r, n_t - 1)]
    for j in range(1, n_t):
        D[n + j - 1, j - 1] = h[j:].sum()
    return D


def synthesize_rx(scheme, ch, symbols, N0, seed=None):
    """``vec(sum_k X_k H_k + W)`` with ``W`` entries CN(0, N0).

    Built from the codewords directly (not from the equivalent channel) so
    the two routes can be checked against each other.
    """
    if N0 < 0:
        raise ValueError("N0 must be non-negative")
    Y = sum(code.encode(s) @ ch.H[k] for k, (code, s) in enumerate(zip(scheme.codes, symbols)))
    y = vec(Y).astype(np.complex128)
    if N0 > 0:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        y = y + complex_normal(rng, y.shape, N0)
    return y


def synthesize_rx_batch(scheme, H, S, N0, rng):
    """Batched :func:`synthesize_rx`.

    ``H`` is ``(B, K, N_t, N_r)``, ``S`` is ``(B, K, n)``; returns ``(B, N_r T)``.
    """
    Y = 0
    for k, code in enumerate(scheme.codes):
        X = np.einsum("bi,itj->btj", S[:, k] @ code.rotation.matrix.T, code.dispersion)
        Y = Y + X @ H[:, k]
    B = Y.shape[0]
    y = np.swapaxes(Y, 1, 2).reshape(B, -1)
    if N0 > 0:
        y = y + complex_normal(rng, y.shape, N0)
    return y

"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` (row-major, as
numpy stores them).  Functions that are cheap to vectorise accept stacks of
matrices with arbitrary leading batch dimensions; the trailing two axes are
always (rows, cols).
"""

import numpy as np

DEFAULT_RANK_TOL = 1e-10


class DimensionError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


def as_cmatrix(m):
    """Coerce user input to a finite 2-D complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got array with shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains NaN or Inf entries")
    return a


def hermitian(m):
    return np.conj(np.swapaxes(m, -1, -2))


def qr_decompose(m):
    """Thin QR factorisation with a real, non-negative diagonal in ``R``.

    LAPACK returns an ``R`` whose diagonal may carry arbitrary phases; the
    phases are pushed into the columns of ``Q`` so that ``Im(R[i, i]) == 0``
    exactly.  Works on stacks ``(..., rows, cols)``.

    Raises
    ------
    DimensionError
        If ``rows < cols``.
    """
    a = np.asarray(m, dtype=np.complex128)
    rows, cols = a.shape[-2:]
    if rows < cols:
        raise DimensionError(f"qr_decompose needs rows >= cols, got {rows}x{cols}")
    q, r = np.linalg.qr(a, mode="reduced")
    d = np.diagonal(r, axis1=-2, axis2=-1)
    mag = np.abs(d)
    phase = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    q = q * phase[..., None, :]
    r = np.conj(phase)[..., :, None] * r
    idx = np.arange(cols)
    r[..., idx, idx] = mag
    return q, r


def cholesky(m, tol=1e-12):
    """Lower-triangular ``L`` with ``L @ L^H == m`` for Hermitian PSD ``m``.

    Semi-definite input is allowed: a pivot within ``tol * max|diag|`` of
    zero yields a zero column.  Real input gives a real factor.
    """
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"cholesky needs a square matrix, got shape {a.shape}")
    real = not np.iscomplexobj(a) or np.all(np.imag(a) == 0)
    a = a.real.astype(float) if real else a.astype(np.complex128)
    n = a.shape[0]
    scale = max(float(np.max(np.abs(np.diag(a)))) if n else 0.0, 1.0)
    if np.max(np.abs(a - hermitian(a)), initial=0.0) > 1e-9 * scale:
        raise NotPSDError("matrix is not Hermitian")
    L = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - np.vdot(L[j, :j], L[j, :j])
        pivot = float(np.real(pivot))
        if pivot < -tol * scale:
            raise NotPSDError(f"negative pivot {pivot:.3e} at column {j}")
        if pivot <= tol * scale:
            continue
        L[j, j] = np.sqrt(pivot)
        # row i of L times conj(row j) over the already-known columns
        L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ np.conj(L[j, :j])) / L[j, j]
    return L


def pseudo_inverse(m, rcond=1e-13):
    """Moore-Penrose inverse via SVD; accepts stacks ``(..., rows, cols)``."""
    a = np.asarray(m, dtype=np.complex128)
    rows, cols = a.shape[-2:]
    if rows == 0 or cols == 0:
        return np.zeros(a.shape[:-2] + (cols, rows), dtype=np.complex128)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    cutoff = rcond * max(rows, cols) * np.max(s, axis=-1, keepdims=True)
    inv_s = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return hermitian(vh) @ (inv_s[..., :, None] * hermitian(u))


def rank_tol(m, rel_tol=DEFAULT_RANK_TOL):
    """Numerical rank: singular values above ``rel_tol * max(rows, cols) * s_max``.

    Stacks are supported and return an integer array of ranks.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    a = np.asarray(m, dtype=np.complex128)
    rows, cols = a.shape[-2:]
    if rows == 0 or cols == 0:
        return np.zeros(a.shape[:-2], dtype=int) if a.ndim > 2 else 0
    s = np.linalg.svd(a, compute_uv=False)
    smax = s[..., :1]
    r = np.sum(s > rel_tol * max(rows, cols) * smax, axis=-1)
    # an all-zero matrix has smax == 0 and the strict comparison already yields 0
    return r if a.ndim > 2 else int(r)


def kron(a, b):
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def vec(m):
    """Stack the columns of ``m`` into one column vector (1-D array)."""
    return np.asarray(m).reshape(-1, order="F")


def unvec(v, rows):
    return np.asarray(v).reshape((rows, -1), order="F")


def projector_onto_complement(basis):
    """``I - B B^+`` for a (possibly empty or rank-deficient) column set ``B``.

    ``basis`` may be a stack ``(..., rows, cols)``; ``cols == 0`` gives the
    identity.
    """
    b = np.asarray(basis, dtype=np.complex128)
    rows = b.shape[-2]
    eye = np.broadcast_to(np.eye(rows, dtype=np.complex128), b.shape[:-2] + (rows, rows))
    if b.shape[-1] == 0:
        return eye.copy()
    return eye - b @ pseudo_inverse(b)


def random_unitary(n, rng):
    """Haar-ish unitary from the QR of a complex Gaussian matrix."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, _ = qr_decompose(g)
    return q

"""Interference-cancellation space-time block codes for two and three users.

Every user transmits ``X_k = C(U s_k, N_t)`` padded with zero rows, where
``C`` repeats the rotated symbol vector down each antenna column with a
one-row cyclic delay per column.
"""

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

TWO_USER = "two-user"
THREE_USER = "three-user"
CUSTOM = "custom"


class RotationError(ValueError):
    pass


# ---------------------------------------------------------------- rotations

def _cyclotomic_rotation(n):
    # real subfield of Q(zeta_p), p = 2n + 1 prime
    p = 2 * n + 1
    k = 2 * np.arange(1, n + 1) - 1
    return 2.0 / np.sqrt(p) * np.cos(np.outer(k, k) * np.pi / (2 * p))


def _dct4_rotation(n):
    # real subfield of Q(zeta_{4n}), n a power of two
    k = 2 * np.arange(1, n + 1) - 1
    return np.sqrt(2.0 / n) * np.cos(np.outer(k, k) * np.pi / (4 * n))


_CONSTRUCTIONS = {1: lambda n: np.ones((1, 1)), 2: _cyclotomic_rotation,
                  3: _cyclotomic_rotation, 4: _dct4_rotation,
                  5: _cyclotomic_rotation, 6: _cyclotomic_rotation,
                  8: _dct4_rotation}

QPSK_DIFFERENCES = np.array([a + 1j * b for a in (-2, 0, 2) for b in (-2, 0, 2)])


def min_product_distance(u, differences=QPSK_DIFFERENCES, chunk=1 << 16):
    """Brute-force ``min prod_i |(U d)_i|`` over nonzero ``d`` in differences^n."""
    u = np.asarray(u)
    n = u.shape[0]
    diffs = np.asarray(differences)
    best = np.inf
    combos = itertools.product(diffs, repeat=n)
    while True:
        block = np.array(list(itertools.islice(combos, chunk)))
        if block.size == 0:
            break
        block = block[np.any(block != 0, axis=1)]
        if len(block):
            best = min(best, float(np.min(np.prod(np.abs(block @ u.T), axis=1))))
    return best


@dataclass(frozen=True, eq=False)
class RotationMatrix:
    matrix: np.ndarray
    test_only: bool = False

    @property
    def n(self):
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, n):
        """Structural-test stand-in; fails :meth:`validate`."""
        return cls(np.eye(n), test_only=True)

    def validate(self):
        """Raise unless the matrix is a real orthogonal full-diversity rotation.

        For a real ``U`` a rotated Gaussian-integer difference has a zero
        coordinate iff its real or imaginary part does, so checking integer
        vectors in {-1, 0, 1}^n covers the whole QPSK difference set.
        """
        u = self.matrix
        if np.iscomplexobj(u) and np.any(np.imag(u) != 0):
            raise RotationError("rotation must be real")
        u = np.real(u)
        if np.max(np.abs(u.T @ u - np.eye(self.n))) > 1e-12:
            raise RotationError("rotation is not orthogonal")
        if self.test_only or min_product_distance(u, np.array([-1.0, 0.0, 1.0])) < 1e-9:
            raise RotationError("rotation has zero minimum product distance")
        return self


@lru_cache(maxsize=None)
def algebraic_rotation(n):
    """Real full-diversity rotation of size ``n`` (validated on first use)."""
    if n not in _CONSTRUCTIONS:
        raise RotationError(f"no algebraic rotation shipped for n={n}; "
                            f"available: {sorted(_CONSTRUCTIONS)}")
    rot = RotationMatrix(_CONSTRUCTIONS[n](n))
    rot.matrix.setflags(write=False)
    return rot.validate()


# ---------------------------------------------------------------- code blocks

def build_c_block(s_rot, n_t):
    """Delay-diversity block: column ``c`` is ``s_rot`` shifted down by ``c`` rows
    with the first ``c`` entries wrapped below row ``n``."""
    s = np.asarray(s_rot).reshape(-1)
    n = len(s)
    if n < n_t:
        raise ValueError(f"C block needs n >= n_t, got n={n}, n_t={n_t}")
    out = np.zeros((n + n_t - 1, n_t), dtype=np.result_type(s, np.complex128))
    for c in range(n_t):
        out[c:n, c] = s[c:]
        out[n:n + c, c] = s[:c]
    return out


def build_c_block_rows(s_rot, n_t):
    """Row-by-row template of the same block, kept only as a cross-check."""
    s = np.asarray(s_rot).reshape(-1)
    n = len(s)
    if n < n_t:
        raise ValueError(f"C block needs n >= n_t, got n={n}, n_t={n_t}")
    rows = []
    for r in range(1, n + n_t):
        row = np.zeros(n_t, dtype=np.complex128)
        if r < n_t:
            row[:r] = s[r - 1]
        elif r <= n:
            row[:] = s[r - 1]
        else:
            j = r - n
            row[j:] = s[j - 1]
        rows.append(row)
    return np.array(rows)


@dataclass(frozen=True, eq=False)
class LinearDispersionCode:
    """``X(s) = sum_i A_i (U s)_i`` with ``dispersion[i] == A_i`` (T x N_t)."""

    dispersion: np.ndarray
    rotation: RotationMatrix
    user_index: int = 0

    @property
    def n(self):
        return self.dispersion.shape[0]

    @property
    def T(self):
        return self.dispersion.shape[1]

    @property
    def n_t(self):
        return self.dispersion.shape[2]

    def encode(self, s):
        return encode(self, s)


def encode(code, s):
    s = np.asarray(s, dtype=np.complex128).reshape(-1)
    if len(s) != code.n:
        raise ValueError(f"expected {code.n} symbols, got {len(s)}")
    s_rot = code.rotation.matrix @ s
    return np.tensordot(s_rot, code.dispersion, axes=(0, 0))


def extract_dispersion(builder, n):
    """Recover ``A_i = builder(e_i)`` for a linear codeword builder."""
    eye = np.eye(n, dtype=np.complex128)
    return np.array([np.asarray(builder(eye[i]), dtype=np.complex128) for i in range(n)])


@dataclass(frozen=True, eq=False)
class MultiUserScheme:
    codes: tuple
    kind: str = CUSTOM
    decode_order: tuple = field(default=None)

    def __post_init__(self):
        shapes = {c.dispersion.shape for c in self.codes}
        if len(shapes) != 1:
            raise ValueError(f"all users must share (n, T, N_t); got {shapes}")
        if self.decode_order is None:
            object.__setattr__(self, "decode_order", tuple(range(self.K)))
        if sorted(self.decode_order) != list(range(self.K)):
            raise ValueError("decode_order must be a permutation of the users")

    @property
    def K(self):
        return len(self.codes)

    @property
    def n(self):
        return self.codes[0].n

    @property
    def T(self):
        return self.codes[0].T

    @property
    def n_t(self):
        return self.codes[0].n_t

    @property
    def rotation(self):
        return self.codes[0].rotation

    @property
    def rate(self):
        return Fraction(self.n, self.T)


def _padded_builder(n_t, top, bottom):
    def build(s_rot):
        c = build_c_block(s_rot, n_t)
        return np.vstack([np.zeros((top, n_t)), c, np.zeros((bottom, n_t))])
    return build


def _scheme(kind, n_t, n, rot, paddings):
    if rot is None:
        rot = algebraic_rotation(n)
    if rot.n != n:
        raise ValueError(f"rotation size {rot.n} does not match n={n}")
    codes = tuple(
        LinearDispersionCode(extract_dispersion(_padded_builder(n_t, top, bottom), n), rot, k)
        for k, (top, bottom) in enumerate(paddings))
    return MultiUserScheme(codes, kind=kind)


def two_user_scheme(n_t, n, rot=None):
    """Rate ``n/(n+N_t)`` scheme: user 1 on the first ``n+N_t-1`` rows,
    user 2 on the last."""
    if n < n_t:
        raise ValueError(f"two-user scheme needs n >= n_t, got n={n}, n_t={n_t}")
    return _scheme(TWO_USER, n_t, n, rot, [(0, 1), (1, 0)])


def three_user_scheme(n_t, n, rot=None):
    """Rate ``n/(2n+N_t)`` scheme decoded successively in user order."""
    if n < 2 * n_t - 1:
        raise ValueError(f"three-user scheme needs n >= 2*n_t-1, got n={n}, n_t={n_t}")
    return _scheme(THREE_USER, n_t, n, rot, [(0, n + 1), (n_t, n - n_t + 1), (n + 1, 0)])


def build_scheme(kind, n_t, n, rot=None):
    if kind == TWO_USER:
        return two_user_scheme(n_t, n, rot)
    if kind == THREE_USER:
        return three_user_scheme(n_t, n, rot)
    raise ValueError(f"unknown scheme {kind!r}")


def rate_bound(K, n_t, T):
    """Largest per-user rate compatible with almost-sure full column rank of
    ``[interference | difference]``: ``(1 - N_t/T) / (K - 1)``."""
    if K < 2:
        raise ValueError("rate bound needs at least two users")
    if T < n_t:
        raise ValueError("signalling period must be at least N_t")
    return Fraction(T - n_t, T * (K - 1))


# ---------------------------------------------------------------- JSON exchange

def _encode_matrix(m):
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m)]


def _decode_matrix(rows):
    a = np.asarray(rows, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def scheme_to_json(scheme):
    doc = {
        "kind": scheme.kind,
        "T": scheme.T,
        "n_t": scheme.n_t,
        "n": scheme.n,
        "decode_order": [k + 1 for k in scheme.decode_order],
        "rotation": np.real(scheme.rotation.matrix).tolist(),
        "codes": [{"dispersion": [_encode_matrix(a) for a in c.dispersion]}
                  for c in scheme.codes],
    }
    return json.dumps(doc, indent=1)


def scheme_from_json(text, rot=None):
    """Load a scheme document; a bare ``{"dispersion": [...]}`` is one user.

    The rotation stored in the document is used unless ``rot`` is given.
    """
    doc = json.loads(text)
    entries = doc["codes"] if "codes" in doc else [doc]
    disp = [np.array([_decode_matrix(a) for a in e["dispersion"]]) for e in entries]
    if rot is None:
        if "rotation" in doc:
            rot = RotationMatrix(np.asarray(doc["rotation"], dtype=float))
        else:
            rot = RotationMatrix(np.eye(disp[0].shape[0]))
    codes = tuple(LinearDispersionCode(d, rot, k) for k, d in enumerate(disp))
    order = doc.get("decode_order")
    order = tuple(k - 1 for k in order) if order else None
    return MultiUserScheme(codes, kind=doc.get("kind", CUSTOM), decode_order=order)

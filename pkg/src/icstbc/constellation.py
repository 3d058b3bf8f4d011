"""Rectangular QAM alphabets and Eb/N0 bookkeeping."""

from dataclasses import dataclass, field

import numpy as np

SUPPORTED_ORDERS = (4, 16, 32, 64, 256, 1024)

# q -> (levels on the real axis, levels on the imaginary axis)
_GRIDS = {4: (2, 2), 16: (4, 4), 32: (8, 4), 64: (8, 8), 256: (16, 16), 1024: (32, 32)}

_NAMES = {"qpsk": 4, "4qam": 4, "16qam": 16, "32qam": 32, "64qam": 64,
          "256qam": 256, "1024qam": 1024}


@dataclass(frozen=True, eq=False)
class QamConstellation:
    """A finite complex alphabet.

    ``points[i * len(imag_levels) + j] == real_levels[i] + 1j * imag_levels[j]``
    whenever the alphabet is rectangular; ``real_levels``/``imag_levels`` are
    ``None`` for alphabets that do not factor as a grid.
    """

    points: np.ndarray
    real_levels: np.ndarray | None = None
    imag_levels: np.ndarray | None = None
    labels: np.ndarray | None = field(default=None, repr=False)

    @property
    def order(self):
        return len(self.points)

    @property
    def bits_per_symbol(self):
        return int(np.log2(self.order)) if self.order > 1 else 0

    @property
    def avg_energy(self):
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def is_rectangular(self):
        return self.real_levels is not None

    @classmethod
    def from_levels(cls, real_levels, imag_levels, labels=None):
        re = np.sort(np.asarray(real_levels, dtype=float))
        im = np.sort(np.asarray(imag_levels, dtype=float))
        pts = (re[:, None] + 1j * im[None, :]).reshape(-1)
        return cls(points=pts, real_levels=re, imag_levels=im, labels=labels)

    @classmethod
    def from_points(cls, points):
        """Wrap arbitrary points; detects whether they form a real x imag grid."""
        pts = np.asarray(points, dtype=np.complex128).reshape(-1)
        re = np.unique(pts.real)
        im = np.unique(pts.imag)
        if len(re) * len(im) == len(pts):
            grid = cls.from_levels(re, im)
            if np.array_equal(np.sort_complex(grid.points), np.sort_complex(pts)):
                return grid
        return cls(points=pts)

    def symbols(self, re_idx, im_idx):
        """Map per-axis level indices to complex symbols."""
        return self.real_levels[re_idx] + 1j * self.imag_levels[im_idx]

    def point_index(self, re_idx, im_idx):
        return np.asarray(re_idx) * len(self.imag_levels) + np.asarray(im_idx)

    def axis_indices(self, point_idx):
        return np.divmod(np.asarray(point_idx), len(self.imag_levels))


def _gray(i):
    return i ^ (i >> 1)


def make_qam(q):
    """Unit-energy rectangular QAM with per-axis Gray labels.

    32-QAM is the 8x4 rectangle rather than the cross layout so the grid
    factorisation holds for every supported order.
    """
    if isinstance(q, str):
        key = q.lower().replace("-", "")
        if key not in _NAMES:
            raise ValueError(f"unsupported constellation {q!r}")
        q = _NAMES[key]
    if q not in _GRIDS:
        raise ValueError(f"unsupported QAM order {q}; choose from {SUPPORTED_ORDERS}")
    mi, mq = _GRIDS[q]
    re = np.arange(-(mi - 1), mi, 2, dtype=float)
    im = np.arange(-(mq - 1), mq, 2, dtype=float)
    scale = np.sqrt((mi ** 2 - 1) / 3 + (mq ** 2 - 1) / 3)
    bq = int(np.log2(mq))
    labels = np.array([(_gray(i) << bq) | _gray(j) for i in range(mi) for j in range(mq)])
    return QamConstellation.from_levels(re / scale, im / scale, labels=labels)


def noise_variance_for_ebn0(ebn0_db, scheme_rate, bits_per_symbol):
    """Complex noise variance per receive dimension for a target Eb/N0.

    Unit average symbol energy is assumed; Eb is taken per user from that
    user's spectral efficiency ``scheme_rate * bits_per_symbol``.
    """
    if scheme_rate <= 0:
        raise ValueError("scheme_rate must be positive")
    if bits_per_symbol <= 0:
        raise ValueError("bits_per_symbol must be positive")
    return 1.0 / (scheme_rate * bits_per_symbol * 10.0 ** (ebn0_db / 10.0))

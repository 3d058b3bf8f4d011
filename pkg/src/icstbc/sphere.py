"""Depth-first Schnorr-Euchner sphere search over finite per-coordinate alphabets.

The search starts with an infinite radius and shrinks it at every leaf.  A
*visited node* is one partial Euclidean distance evaluated and compared to
the current radius; a *leaf update* is a full-length candidate reached.

Ties between equal objectives resolve to the lexicographically smallest
index vector (coordinate 0 most significant), the same rule used by
:func:`exhaustive_search`.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from numba import njit

SE_ORDER = 0
NATURAL_ORDER = 1
DEFAULT_CAP = 10 ** 6


class SingularProblemError(ValueError):
    pass


class SearchCapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LatticeProblem:
    """``min ||z - R x||`` with ``x[i]`` drawn from ``alphabets[i]``."""

    R: np.ndarray
    z: np.ndarray
    alphabets: tuple

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        n = R.shape[0]
        if R.shape != (n, n) or np.any(np.tril(R, -1) != 0):
            raise ValueError("R must be square upper-triangular")
        if len(self.alphabets) != n or np.asarray(self.z).shape != (n,):
            raise ValueError("z and alphabets must match R's size")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))
        object.__setattr__(self, "alphabets",
                           tuple(np.sort(np.asarray(a, dtype=float)) for a in self.alphabets))

    @property
    def n(self):
        return self.R.shape[0]

    def objective(self, x):
        r = self.z - self.R @ np.asarray(x, dtype=float)
        return float(r @ r)


@dataclass
class SearchStats:
    visited_nodes: int = 0
    leaf_updates: int = 0


def pack_alphabets(alphabets):
    """Pad sorted alphabets into an ``(n, max_size)`` table plus sizes."""
    sizes = np.array([len(a) for a in alphabets], dtype=np.int64)
    table = np.zeros((len(alphabets), int(sizes.max()) if len(sizes) else 0))
    for i, a in enumerate(alphabets):
        table[i, :len(a)] = np.sort(a)
    return table, sizes


@njit(cache=True)
def _lex_less(a, b, n):
    for i in range(n):
        if a[i] < b[i]:
            return True
        if a[i] > b[i]:
            return False
    return False


@njit(cache=True)
def _search(R, z, table, sizes, order_mode, full, out_idx, tol, allow_singular):
    n = R.shape[0]
    m = table.shape[1]
    order = np.empty((n, m), dtype=np.int64)
    pos = np.zeros(n, dtype=np.int64)
    pm = np.zeros(n + 1)
    center = np.zeros(n)
    x = np.zeros(n)
    idx = np.zeros(n, dtype=np.int64)
    dist = np.empty(m)
    best = np.inf
    visited = 0
    leaves = 0
    if not allow_singular:
        for i in range(n):
            if R[i, i] <= tol:
                return -1, 0
    k = n - 1
    # entering level k: residual of z_k after removing decided coordinates
    while True:
        s = z[k]
        for j in range(k + 1, n):
            s -= R[k, j] * x[j]
        center[k] = s
        sz = sizes[k]
        for i in range(sz):
            order[k, i] = i
        # a zero pivot gives every child the same metric: keep natural order
        if order_mode == SE_ORDER and abs(R[k, k]) > tol:
            c = s / R[k, k]
            for i in range(sz):
                dist[i] = abs(table[k, i] - c)
            # insertion sort; stable so equal distances keep the smaller value first
            for i in range(1, sz):
                key = order[k, i]
                dk = dist[key]
                j = i - 1
                while j >= 0 and dist[order[k, j]] > dk:
                    order[k, j + 1] = order[k, j]
                    j -= 1
                order[k, j + 1] = key
        pos[k] = 0
        while True:
            if pos[k] < sizes[k]:
                i = order[k, pos[k]]
                pos[k] += 1
                r = center[k] - R[k, k] * table[k, i]
                metric = pm[k + 1] + r * r
                visited += 1
                if not full and metric > best:
                    if order_mode == SE_ORDER:
                        pos[k] = sizes[k]
                    continue
                x[k] = table[k, i]
                idx[k] = i
                if k == 0:
                    leaves += 1
                    if metric < best or (metric == best and _lex_less(idx, out_idx, n)):
                        best = metric
                        for j in range(n):
                            out_idx[j] = idx[j]
                    continue
                pm[k] = metric
                k -= 1
                break
            else:
                k += 1
                if k == n:
                    return visited, leaves


@njit(cache=True)
def _search_batch(R, Z, table, sizes, order_mode, full, out_idx, visited, tol, allow_singular):
    for b in range(R.shape[0]):
        v, _ = _search(R[b], Z[b], table, sizes, order_mode, full, out_idx[b], tol,
                       allow_singular)
        if v < 0:
            return b
        visited[b] = v
    return -1


def sphere_search(problem, order="se", full=False, tol=1e-12, allow_singular=False):
    """Exact argmin of ``||z - R x||`` over the alphabet product.

    Parameters
    ----------
    order : {"se", "natural"}
        Sibling order; "natural" visits children in ascending value and is
        only meant for comparisons.
    full : bool
        Disable pruning and walk the whole tree (worst-case counting).
    allow_singular : bool
        Accept zero pivots.  Partial metrics stay valid lower bounds, so the
        result is still exact; levels with a zero pivot are simply not
        pruned by their own row.  Needed when the projected channel has
        fewer independent rows than unknowns (e.g. a single receive antenna).

    Returns
    -------
    x_hat : ndarray
    stats : SearchStats
    """
    table, sizes = pack_alphabets(problem.alphabets)
    out = np.full(problem.n, np.iinfo(np.int64).max, dtype=np.int64)
    mode = SE_ORDER if order == "se" else NATURAL_ORDER
    tol = tol * max(1.0, float(np.max(np.abs(np.diag(problem.R)))))
    visited, leaves = _search(problem.R, problem.z, table, sizes, mode, bool(full), out, tol,
                              bool(allow_singular))
    if visited < 0:
        raise SingularProblemError("R has a (numerically) zero diagonal entry")
    x = table[np.arange(problem.n), out]
    return x, SearchStats(int(visited), int(leaves))


def sphere_search_indices(problem, **kw):
    """Like :func:`sphere_search` but returns per-coordinate alphabet indices."""
    x, stats = sphere_search(problem, **kw)
    idx = np.array([int(np.flatnonzero(a == v)[0]) for a, v in zip(problem.alphabets, x)])
    return idx, stats


def sphere_search_batch(R, Z, alphabets, order="se", full=False, tol=1e-12,
                        allow_singular=False):
    """Vectorised front end: ``R`` is ``(B, n, n)``, ``Z`` is ``(B, n)``.

    Returns ``(indices (B, n), visited (B,))``.
    """
    R = np.ascontiguousarray(R, dtype=float)
    Z = np.ascontiguousarray(Z, dtype=float)
    table, sizes = pack_alphabets(alphabets)
    B, n = Z.shape
    out = np.full((B, n), np.iinfo(np.int64).max, dtype=np.int64)
    visited = np.zeros(B, dtype=np.int64)
    mode = SE_ORDER if order == "se" else NATURAL_ORDER
    bad = _search_batch(R, Z, table, sizes, mode, bool(full), out, visited, tol,
                        bool(allow_singular))
    if bad >= 0:
        raise SingularProblemError(f"R of batch item {bad} has a zero diagonal entry")
    return out, visited


def exhaustive_search(problem, cap=DEFAULT_CAP):
    """Enumerate every candidate; returns ``(x_hat, objective)``."""
    total = int(np.prod([len(a) for a in problem.alphabets]))
    if total > cap:
        raise SearchCapError(f"{total} candidates exceed the cap of {cap}")
    best, best_x = np.inf, None
    # itertools.product walks index vectors in lexicographic order, so the
    # first strict minimum is the tie-break winner
    cands = itertools.product(*problem.alphabets)
    while True:
        block = np.array(list(itertools.islice(cands, 1 << 15)))
        if block.size == 0:
            break
        res = problem.z[None, :] - block @ problem.R.T
        obj = np.einsum("ij,ij->i", res, res)
        i = int(np.argmin(obj))
        if obj[i] < best:
            best, best_x = float(obj[i]), block[i]
    return best_x, best


def full_tree_nodes(sizes):
    """Node count of the complete search tree, bottom coordinate first."""
    total, prod = 0, 1
    for s in reversed(list(sizes)):
        prod *= s
        total += prod
    return total

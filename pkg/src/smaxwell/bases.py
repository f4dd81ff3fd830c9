"""Orthonormal bases of the discrete invariant scalar space and of V.

Both spaces are ranges of orthogonal projectors that commute with every
Fourier multiplier depending on |k| only:

    scalars:   P_W = symmetrize o strip_null_modes
    one-forms: P_V = symmetrize o strip_null_modes o leray

so each range is spanned by the projected orbit indicators (scalars) or the
projected site-component deltas over one representative per orbit (forms).
The spans are orthonormalized by SVD with a relative rank cutoff.  Columns
are Euclidean-orthonormal; the L2 pairing carries the extra factor h^n.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .fields import GridSpec, _wavenumbers, _workers
from .symmetry import _site_maps, group_elements

# budget for the gradient-of-basis matrix (float64 entries)
MAX_BASIS_ENTRIES = 60_000_000


def orbit_labels(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Orbit index per site and one representative flat index per orbit."""
    maps = _site_maps(grid.n, grid.m)
    flat = np.arange(grid.size).reshape(grid.shape)
    lab = np.min(np.stack([flat[idx] for idx, _ in maps]), axis=0)
    reps, inv = np.unique(lab.ravel(), return_inverse=True)
    return inv.reshape(grid.shape), reps


def _orthonormal_columns(X: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    keep = s > rtol * s[0]
    U = U[:, keep]
    # fix the sign of each column so the basis does not depend on LAPACK sign choices
    piv = np.argmax(np.abs(U), axis=0)
    U *= np.sign(U[piv, np.arange(U.shape[1])])
    return U


def _site_axes(n: int, lead: int) -> tuple[int, ...]:
    return tuple(range(lead, lead + n))


@dataclass(frozen=True, eq=False)
class ReducedSpaces:
    grid: GridSpec
    B: np.ndarray  # (N, kw) invariant zero-mean scalars
    gradB: np.ndarray  # (n*N, kw) gradients of the columns of B
    U: np.ndarray  # (n*N, kv) divergence-free equivariant forms
    K: np.ndarray  # (kv, kv) Euclidean Dirichlet matrix U^T (-Delta) U

    @property
    def kw(self) -> int:
        return self.B.shape[1]

    @property
    def kv(self) -> int:
        return self.U.shape[1]


def _scalar_basis(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    n, N = grid.n, grid.size
    ks, k2, _ = _wavenumbers(n, grid.m, grid.L)
    inv, reps = orbit_labels(grid)
    X = np.zeros((len(reps),) + grid.shape)
    X[(inv,) + tuple(np.indices(grid.shape))] = 1.0
    ax = _site_axes(n, 1)
    Xh = sfft.fftn(X, axes=ax, workers=_workers()) * (k2 > 0)
    X = sfft.ifftn(Xh, axes=ax, workers=_workers()).real
    B = _orthonormal_columns(X.reshape(len(reps), N).T)
    Bh = sfft.fftn(B.T.reshape((-1,) + grid.shape), axes=ax, workers=_workers())
    grads = np.stack([sfft.ifftn(1j * k * Bh, axes=ax, workers=_workers()).real for k in ks], axis=1)
    gradB = grads.reshape(B.shape[1], n * N).T
    return B, np.ascontiguousarray(gradB)


def _v_basis(grid: GridSpec, chunk: int = 128) -> np.ndarray:
    n, N, m = grid.n, grid.size, grid.m
    ks, k2, inv_k2 = _wavenumbers(n, m, grid.L)
    gs = np.stack(group_elements(n))  # (G, n, n)
    gi = gs.astype(int)
    _, reps = orbit_labels(grid)
    ax = _site_axes(n, 2)
    # centred integer coordinates of the representatives; site index i <-> i - m/2
    rc = np.stack(np.unravel_index(reps, grid.shape), axis=1) - m // 2
    cols = []
    cands = [(r, j) for r in range(len(reps)) for j in range(n)]
    for start in range(0, len(cands), chunk):
        part = cands[start : start + chunk]
        S = np.zeros((len(part), n, N))
        for b, (r, j) in enumerate(part):
            # averaging e_j delta_r gives g^T e_j at the site g^T r, for each g
            sites = (np.einsum("gji,j->gi", gi, rc[r]) + m // 2) % m
            flat = np.ravel_multi_index(tuple(sites.T), grid.shape)
            vecs = gs[:, j, :]  # row j of g = g^T e_j
            np.add.at(S[b], (slice(None), flat), vecs.T)
        S = S.reshape((len(part), n) + grid.shape) / len(gs)
        Sh = sfft.fftn(S, axes=ax, workers=_workers())
        divh = sum(1j * ks[i] * Sh[:, i] for i in range(n))
        # leray: subtract grad(Delta^-1 div), then drop |k| = 0 modes
        Sh = np.stack([Sh[:, i] + 1j * ks[i] * inv_k2 * divh for i in range(n)], axis=1)
        Sh *= k2 > 0
        cols.append(sfft.ifftn(Sh, axes=ax, workers=_workers()).real.reshape(len(part), n * N))
    X = np.concatenate(cols).T
    return _orthonormal_columns(X)


@functools.lru_cache(maxsize=4)
def reduced_spaces(grid: GridSpec) -> ReducedSpaces:
    """Build (and cache) the bases for ``grid``; refuses grids that are too large."""
    _, reps = orbit_labels(grid)
    if grid.n * grid.size * len(reps) > MAX_BASIS_ENTRIES:
        raise ValueError(
            f"grid {grid.to_dict()} is too large for dense reduced bases "
            f"({grid.n * grid.size * len(reps)} entries > {MAX_BASIS_ENTRIES})"
        )
    B, gradB = _scalar_basis(grid)
    U = _v_basis(grid)
    n = grid.n
    _, k2, _ = _wavenumbers(n, grid.m, grid.L)
    ax = _site_axes(n, 2)
    Uf = U.T.reshape((U.shape[1], n) + grid.shape)
    LU = sfft.ifftn(k2 * sfft.fftn(Uf, axes=ax, workers=_workers()), axes=ax, workers=_workers()).real
    K = U.T @ LU.reshape(U.shape[1], -1).T
    K = 0.5 * (K + K.T)
    for arr in (B, gradB, U, K):
        arr.setflags(write=False)
    return ReducedSpaces(grid, B, gradB, U, K)

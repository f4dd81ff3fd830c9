"""Block-dihedral lattice symmetry group and the induced projections.

Each 2-plane block ``(x_{2b}, x_{2b+1})`` carries the dihedral group of order
8 generated by the quarter turn and one reflection; the full group is the
product over blocks (order ``8**(n/2)``).  Every element is a signed
permutation of coordinates, so it maps the periodic lattice onto itself.

Fields transform as

    one-forms:  (G xi)(x) = g^T xi(g x)
    scalars:    (G w)(x)  = w(g x)

and the fixed points are exactly ``xi(gx) = g xi(x)`` and ``w(gx) = w(x)``.
Group averaging is an L2-orthogonal projection onto those fixed points.
"""
from __future__ import annotations

import functools
import itertools

import numpy as np

from .fields import GridSpec, OneForm, ScalarField


@functools.lru_cache(maxsize=1)
def block_group() -> tuple[np.ndarray, ...]:
    """The 8 signed 2x2 permutation matrices, generated by R and S."""
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    S = np.array([[1.0, 0.0], [0.0, -1.0]])
    elems: list[np.ndarray] = []
    frontier = [np.eye(2)]
    while frontier:
        g = frontier.pop(0)
        if any(np.array_equal(g, e) for e in elems):
            continue
        elems.append(g)
        frontier.extend([R @ g, S @ g])
    return tuple(elems)


@functools.lru_cache(maxsize=8)
def group_elements(n: int) -> tuple[np.ndarray, ...]:
    """All block-diagonal products, as n x n signed permutation matrices."""
    out = []
    for combo in itertools.product(block_group(), repeat=n // 2):
        g = np.zeros((n, n))
        for b, gb in enumerate(combo):
            g[2 * b : 2 * b + 2, 2 * b : 2 * b + 2] = gb
        out.append(g)
    return tuple(out)


def group_order(n: int) -> int:
    return len(group_elements(n))


@functools.lru_cache(maxsize=32)
def _site_maps(n: int, m: int) -> tuple[tuple[tuple[np.ndarray, ...], np.ndarray], ...]:
    """For each g: a fancy index with ``A[idx][x] == A[g x]``, and g itself."""
    ar = np.arange(m)
    neg = (m - ar) % m  # site of -x on the periodic lattice
    out = []
    for g in group_elements(n):
        idx = []
        for i in range(n):
            j = int(np.flatnonzero(g[i])[0])
            shp = [1] * n
            shp[j] = m
            idx.append((ar if g[i, j] > 0 else neg).reshape(shp))
        out.append((tuple(idx), g))
    return tuple(out)


def _check_grid(grid: GridSpec) -> None:
    if grid.m % 2:
        raise ValueError("symmetrization requires an even number of sites per axis")


def act_scalar(g_index: int, w: ScalarField) -> ScalarField:
    _check_grid(w.grid)
    idx, _ = _site_maps(w.grid.n, w.grid.m)[g_index]
    return ScalarField(w.values[idx], w.grid)


def act_oneform(g_index: int, A: OneForm) -> OneForm:
    _check_grid(A.grid)
    idx, g = _site_maps(A.grid.n, A.grid.m)[g_index]
    moved = A.components[(slice(None),) + idx]
    return OneForm(np.tensordot(g.T, moved, axes=1), A.grid)


def symmetrize_scalar(w: ScalarField) -> ScalarField:
    _check_grid(w.grid)
    maps = _site_maps(w.grid.n, w.grid.m)
    acc = np.zeros(w.grid.shape)
    for idx, _ in maps:
        acc += w.values[idx]
    return ScalarField(acc / len(maps), w.grid)


def symmetrize_oneform(A: OneForm) -> OneForm:
    _check_grid(A.grid)
    maps = _site_maps(A.grid.n, A.grid.m)
    acc = np.zeros_like(A.components)
    for idx, g in maps:
        acc += np.tensordot(g.T, A.components[(slice(None),) + idx], axes=1)
    return OneForm(acc / len(maps), A.grid)


def equivariance_residual(A: OneForm | ScalarField) -> float:
    """max over group elements of ``||G A - A||_inf / ||A||_inf``."""
    is_form = isinstance(A, OneForm)
    vals = A.components if is_form else A.values
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0:
        return 0.0
    act = act_oneform if is_form else act_scalar
    worst = 0.0
    for k in range(group_order(A.grid.n)):
        moved = act(k, A)
        other = moved.components if is_form else moved.values
        worst = max(worst, float(np.max(np.abs(other - vals))))
    return worst / scale

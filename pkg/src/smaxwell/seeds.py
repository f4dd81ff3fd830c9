"""Seed 1-forms in the discrete space V.

Equivariant fields for the block-dihedral group are, in the continuum, of the
form ``phi_1(r_1, r_2) x^(1) + phi_2(r_1, r_2) x^(2)`` where ``x^(b)`` is the
position within block ``b`` and ``r_b = |x^(b)|``.  Divergence-free members
come from a meridional stream function.  With ``s_b = r_b**2`` and
``E(s_1, s_2) = P(s_1, s_2) * beta(|x| / R)`` we take

    u^(1) =  2 d/ds_2 (s_2 E) x^(1)
    u^(2) = -2 d/ds_1 (s_1 E) x^(2)

whose divergence is ``4 (d_1 d_2 - d_2 d_1)(s_1 s_2 E) = 0``.  ``P`` is the
polynomial ``a_0 + a_1 (s_1 - s_2) / R**2``: the ``a_0`` part is odd under
swapping the first two blocks, the ``a_1`` part even.

The planar vortex ``sum_i a_i (x_{2i-1} dx_{2i} - x_{2i} dx_{2i-1})`` is
available as ``raw_vortex_form``; it is divergence-free but reverses sign
under block reflections, so group averaging annihilates it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import GridSpec, OneForm, leray
from .symmetry import symmetrize_oneform


@dataclass(frozen=True)
class SeedProfile:
    """``amplitudes = (a_0, a_1)`` weight the swap-odd and swap-even parts.

    ``radius`` is the support radius of the bump and must be strictly smaller
    than the half-extent so the support stays away from the periodic seam.
    """

    amplitudes: tuple[float, float] = (1.0, 0.0)
    radius: float = 3.5

    def to_dict(self) -> dict:
        return {"amplitudes": list(self.amplitudes), "radius": self.radius}

    @classmethod
    def from_dict(cls, d: dict) -> SeedProfile:
        amps = tuple(float(a) for a in d.get("amplitudes", (1.0, 0.0)))
        if len(amps) != 2:
            raise ValueError(f"seed amplitudes must have length 2, got {len(amps)}")
        return cls(amps, float(d.get("radius", 3.5)))


def bump(r: np.ndarray) -> np.ndarray:
    """C-infinity bump with value 1 at r=0, supported in r < 1."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def _bump_ds(t: np.ndarray, radius: float) -> np.ndarray:
    """d/ds_b of bump(|x|/radius); equal for every block."""
    out = np.zeros_like(t)
    inside = t < 1.0
    ti = t[inside]
    out[inside] = -np.exp(1.0 - 1.0 / (1.0 - ti**2)) / (radius**2 * (1.0 - ti**2) ** 2)
    return out


def meridional_form(grid: GridSpec, profile: SeedProfile) -> OneForm:
    """Sample the stream-function field above, on blocks 0 and 1."""
    if grid.n < 4:
        raise ValueError("divergence-free equivariant fields need at least two blocks (n >= 4)")
    x = grid.coords()
    R = profile.radius
    a0, a1 = profile.amplitudes
    s1 = x[0] ** 2 + x[1] ** 2
    s2 = x[2] ** 2 + x[3] ** 2
    t = np.sqrt(sum(xi**2 for xi in x)) / R
    beta = bump(t)
    dbeta = _bump_ds(t, R)
    P = a0 + a1 * (s1 - s2) / R**2
    # d/ds_b (s_b P beta) = P beta + s_b (dP/ds_b beta + P dbeta)
    g1 = P * beta + s2 * (-a1 / R**2 * beta + P * dbeta)
    g2 = P * beta + s1 * (a1 / R**2 * beta + P * dbeta)
    comps = np.zeros((grid.n,) + grid.shape)
    comps[0] = 2 * g1 * x[0]
    comps[1] = 2 * g1 * x[1]
    comps[2] = -2 * g2 * x[2]
    comps[3] = -2 * g2 * x[3]
    return OneForm(comps, grid)


def raw_vortex_form(grid: GridSpec, coefficients: list[np.ndarray | float]) -> OneForm:
    """Sample ``sum_i a_i (x_{2i-1} dx_{2i} - x_{2i} dx_{2i-1})`` without projection."""
    x = grid.coords()
    comps = np.zeros((grid.n,) + grid.shape)
    for b, a in enumerate(coefficients):
        comps[2 * b] = -a * x[2 * b + 1]
        comps[2 * b + 1] = a * x[2 * b]
    return OneForm(comps, grid)


def seed_form(grid: GridSpec, profile: SeedProfile | None = None) -> OneForm:
    """Divergence-free, group-equivariant seed in the discrete space V."""
    profile = profile or SeedProfile()
    if not 0.0 < profile.radius < grid.L:
        raise ValueError(
            f"profile support radius {profile.radius} must lie strictly inside the box (L={grid.L})"
        )
    return symmetrize_oneform(leray(meridional_form(grid, profile)))

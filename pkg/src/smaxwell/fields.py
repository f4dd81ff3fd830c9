"""Periodic-box discretization of 0-forms and 1-forms with spectral calculus.

The box ``[-L, L)^n`` carries ``m`` sites per axis.  Derivatives are
discrete-Fourier multipliers with the Nyquist mode of every first derivative
set to zero, so the Laplacian is *defined* as ``sum_i D_i D_i``.  With that
convention ``d o d = 0``, ``<grad w, A> = -<w, div A>``, the Hodge split and
``-Delta = d delta + delta d`` hold to rounding.

Codifferential on 1-forms: ``delta = -div``.
"""
from __future__ import annotations

import functools
import itertools
import os
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("SMAXWELL_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic lattice on ``[-L, L)^n``."""

    n: int = 4
    m: int = 8
    L: float = 4.0

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 2, got {self.n}")
        if self.m < 2 or self.m % 2:
            raise ValueError(f"m must be an even integer >= 2, got {self.m}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.m

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m,) * self.n

    @property
    def size(self) -> int:
        return self.m**self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.m)

    def coords(self) -> list[np.ndarray]:
        """Site coordinates, one broadcastable array per axis."""
        x = self.axis()
        out = []
        for i in range(self.n):
            shp = [1] * self.n
            shp[i] = self.m
            out.append(np.broadcast_to(x.reshape(shp), self.shape))
        return out

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """Midpoint-quadrature L2 pairing of two arrays of equal shape."""
        return float(np.sum(a * b) * self.cell_volume)

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "L": self.L}


@functools.lru_cache(maxsize=32)
def _wavenumbers(n: int, m: int, L: float):
    """Per-axis first-derivative symbols (Nyquist zeroed) and |k|^2."""
    k1 = sfft.fftfreq(m, d=1.0 / m) * (np.pi / L)
    k1[m // 2] = 0.0
    ks = []
    for i in range(n):
        shp = [1] * n
        shp[i] = m
        ks.append(k1.reshape(shp))
    k2 = sum(k**2 for k in ks)
    k2 = np.broadcast_to(k2, (m,) * n).copy()
    inv_k2 = np.zeros_like(k2)
    mask = k2 > 0
    inv_k2[mask] = 1.0 / k2[mask]
    return ks, k2, inv_k2


def _fft(a, axes):
    return sfft.fftn(a, axes=axes, workers=_workers())


def _ifft(a, axes):
    return sfft.ifftn(a, axes=axes, workers=_workers()).real


@dataclass(frozen=True, eq=False)
class ScalarField:
    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"scalar field shape {self.values.shape} != grid {self.grid.shape}")

    def __add__(self, other: ScalarField) -> ScalarField:
        return ScalarField(self.values + other.values, self.grid)

    def __sub__(self, other: ScalarField) -> ScalarField:
        return ScalarField(self.values - other.values, self.grid)

    def __neg__(self) -> ScalarField:
        return ScalarField(-self.values, self.grid)

    def __mul__(self, s: float) -> ScalarField:
        return ScalarField(s * self.values, self.grid)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.sqrt(self.grid.inner(self.values, self.values)))

    @classmethod
    def zeros(cls, grid: GridSpec) -> ScalarField:
        return cls(np.zeros(grid.shape), grid)


@dataclass(frozen=True, eq=False)
class OneForm:
    """A = sum_i A_i dx^i; ``components`` has shape ``(n, m, ..., m)``."""

    components: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        want = (self.grid.n,) + self.grid.shape
        if self.components.shape != want:
            raise ValueError(f"one-form shape {self.components.shape} != {want}")

    def __add__(self, other: OneForm) -> OneForm:
        return OneForm(self.components + other.components, self.grid)

    def __sub__(self, other: OneForm) -> OneForm:
        return OneForm(self.components - other.components, self.grid)

    def __neg__(self) -> OneForm:
        return OneForm(-self.components, self.grid)

    def __mul__(self, s: float) -> OneForm:
        return OneForm(s * self.components, self.grid)

    __rmul__ = __mul__

    def sq_magnitude(self) -> np.ndarray:
        """Pointwise <A, A>."""
        return np.sum(self.components**2, axis=0)

    def dot(self, other: OneForm) -> float:
        return self.grid.inner(self.components, other.components)

    def norm(self) -> float:
        return float(np.sqrt(self.dot(self)))

    @classmethod
    def zeros(cls, grid: GridSpec) -> OneForm:
        return cls(np.zeros((grid.n,) + grid.shape), grid)


@dataclass(frozen=True, eq=False)
class TwoForm:
    """Antisymmetric 2-form; only ``i < j`` components are stored."""

    components: np.ndarray
    grid: GridSpec

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(itertools.combinations(range(self.grid.n), 2))

    def __getitem__(self, ij: tuple[int, int]) -> np.ndarray:
        i, j = ij
        if i == j:
            return np.zeros(self.grid.shape)
        sign = 1.0
        if i > j:
            i, j, sign = j, i, -1.0
        return sign * self.components[self.pairs.index((i, j))]

    def dot(self, other: TwoForm) -> float:
        return self.grid.inner(self.components, other.components)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.components))) if self.components.size else 0.0


# -- spectral operators --------------------------------------------------


def _axes(grid: GridSpec, lead: int = 0) -> tuple[int, ...]:
    return tuple(range(lead, lead + grid.n))


def gradient(w: ScalarField) -> OneForm:
    g = w.grid
    ks, _, _ = _wavenumbers(g.n, g.m, g.L)
    W = _fft(w.values, _axes(g))
    comps = np.stack([_ifft(1j * k * W, _axes(g)) for k in ks])
    return OneForm(comps, g)


def divergence(A: OneForm) -> ScalarField:
    g = A.grid
    ks, _, _ = _wavenumbers(g.n, g.m, g.L)
    Ah = _fft(A.components, _axes(g, 1))
    return ScalarField(_ifft(sum(1j * ks[i] * Ah[i] for i in range(g.n)), _axes(g)), g)


def codifferential(A: OneForm) -> ScalarField:
    """delta A = -div A (Euclidean metric)."""
    return -divergence(A)


def partials(A: OneForm) -> np.ndarray:
    """Jacobian array ``J[i, j] = d_i A_j``."""
    g = A.grid
    ks, _, _ = _wavenumbers(g.n, g.m, g.L)
    Ah = _fft(A.components, _axes(g, 1))
    return np.stack([_ifft(1j * k * Ah, _axes(g, 1)) for k in ks])


def exterior_derivative(A: OneForm) -> TwoForm:
    g = A.grid
    ks, _, _ = _wavenumbers(g.n, g.m, g.L)
    Ah = _fft(A.components, _axes(g, 1))
    comps = [
        _ifft(1j * ks[i] * Ah[j] - 1j * ks[j] * Ah[i], _axes(g))
        for i, j in itertools.combinations(range(g.n), 2)
    ]
    return TwoForm(np.stack(comps), g)


def codifferential2(B: TwoForm) -> OneForm:
    """delta on 2-forms: (delta B)_j = -sum_i d_i B_ij."""
    g = B.grid
    ks, _, _ = _wavenumbers(g.n, g.m, g.L)
    out = np.zeros((g.n,) + g.shape)
    for j in range(g.n):
        acc = np.zeros(g.shape, dtype=complex)
        for i in range(g.n):
            if i != j:
                acc += 1j * ks[i] * _fft(B[i, j], _axes(g))
        out[j] = -_ifft(acc, _axes(g))
    return OneForm(out, g)


def laplacian_scalar(w: ScalarField) -> ScalarField:
    g = w.grid
    _, k2, _ = _wavenumbers(g.n, g.m, g.L)
    return ScalarField(_ifft(-k2 * _fft(w.values, _axes(g)), _axes(g)), g)


def laplacian(A: OneForm) -> OneForm:
    """Componentwise spectral Laplacian."""
    g = A.grid
    _, k2, _ = _wavenumbers(g.n, g.m, g.L)
    return OneForm(_ifft(-k2 * _fft(A.components, _axes(g, 1)), _axes(g, 1)), g)


def inverse_laplacian(A: OneForm) -> OneForm:
    """Solve ``-Delta B = A`` componentwise; unresolved modes (|k|=0) set to 0."""
    g = A.grid
    _, _, inv = _wavenumbers(g.n, g.m, g.L)
    return OneForm(_ifft(inv * _fft(A.components, _axes(g, 1)), _axes(g, 1)), g)


def poisson_solve(rhs: ScalarField) -> ScalarField:
    """Zero-mean ``w`` with ``Delta w = rhs`` on all resolved modes."""
    g = rhs.grid
    _, _, inv = _wavenumbers(g.n, g.m, g.L)
    return ScalarField(_ifft(-inv * _fft(rhs.values, _axes(g)), _axes(g)), g)


def neg_laplacian_power(w: ScalarField, power: float) -> ScalarField:
    """(-Delta)^power on resolved modes; |k| = 0 modes are sent to 0."""
    g = w.grid
    _, k2, _ = _wavenumbers(g.n, g.m, g.L)
    sym = np.zeros_like(k2)
    mask = k2 > 0
    sym[mask] = k2[mask] ** power
    return ScalarField(_ifft(sym * _fft(w.values, _axes(g)), _axes(g)), g)


def curl_energy(A: OneForm) -> float:
    """sum_{i<j} int (d_i A_j - d_j A_i)^2."""
    dA = exterior_derivative(A)
    return dA.dot(dA)


def dirichlet_energy(A: OneForm) -> float:
    """sum_{i,j} int (d_i A_j)^2, computed in Fourier space."""
    g = A.grid
    _, k2, _ = _wavenumbers(g.n, g.m, g.L)
    Ah = _fft(A.components, _axes(g, 1))
    # Parseval on the unnormalized DFT
    return float(np.sum(k2 * np.abs(Ah) ** 2) / g.size * g.cell_volume)


def d_norm(u: OneForm) -> float:
    """||u||_D with ||u||_D^2 = int <du,du> + int <delta u, delta u>."""
    return float(np.sqrt(max(dirichlet_energy(u), 0.0)))


def dual_d_norm(G: OneForm) -> float:
    """Norm of the functional ``v -> <G, v>_{L2}`` measured against ||.||_D."""
    g = G.grid
    _, _, inv = _wavenumbers(g.n, g.m, g.L)
    Gh = _fft(G.components, _axes(g, 1))
    return float(np.sqrt(np.sum(inv * np.abs(Gh) ** 2) / g.size * g.cell_volume))


def hodge_split(A: OneForm) -> tuple[OneForm, ScalarField]:
    """A = u + grad w with div u = 0 and zero-mean w."""
    w = poisson_solve(divergence(A))
    return A - gradient(w), w


def leray(A: OneForm) -> OneForm:
    """Divergence-free part ``(I - grad Delta^-1 div) A``."""
    return hodge_split(A)[0]


def strip_null_modes(X: OneForm | ScalarField) -> OneForm | ScalarField:
    """Remove Fourier modes with |k| = 0 (the mean and Nyquist-only modes).

    Those modes carry no Dirichlet energy, so ||.||_D is a norm only on their
    complement.
    """
    g = X.grid
    _, k2, _ = _wavenumbers(g.n, g.m, g.L)
    keep = k2 > 0
    if isinstance(X, OneForm):
        return OneForm(_ifft(keep * _fft(X.components, _axes(g, 1)), _axes(g, 1)), g)
    return ScalarField(_ifft(keep * _fft(X.values, _axes(g)), _axes(g)), g)


def laplace_beltrami_identity_check(A: OneForm) -> float:
    """max |(d delta + delta d) A - (-Delta A)|, relative to max |A|."""
    ddelta = gradient(codifferential(A))
    deltad = codifferential2(exterior_derivative(A))
    res = ddelta.components + deltad.components + laplacian(A).components
    scale = max(float(np.max(np.abs(A.components))), 1e-300)
    return float(np.max(np.abs(res))) / scale


def div_residual(A: OneForm) -> float:
    """max |div A| relative to the L2 norm of the Jacobian (scale-free)."""
    dv = divergence(A).values
    scale = max(float(np.sqrt(np.mean(partials(A) ** 2))), 1e-300)
    return float(np.max(np.abs(dv))) / scale

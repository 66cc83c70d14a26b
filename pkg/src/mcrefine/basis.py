"""Real Fourier basis over the working area, spatial weighting, projections.

The model space is spanned by the real-valued family derived from the 2-D
DFT on the M x N working area: for every non-redundant frequency pair (k, l)
a cosine member cos(2*pi*(k*m/M + l*n/N)) and, unless the pair is its own
conjugate image, a sine member sin(2*pi*(k*m/M + l*n/N)).  Conjugate images
(k, l) and ((-k) mod M, (-l) mod N) describe the same real subspace and are
enumerated once, so the family contains exactly M*N functions and spans the
whole real raster space.  All members are mutually orthogonal under the
uniform inner product over the area.

Projections against an arbitrary non-negative weighting are the workhorse of
the extrapolation engines.  Two evaluation routes are provided: an explicit
basis-matrix route (the reference) and a fast route that reads every weighted
correlation out of two FFTs.  Both must agree to high accuracy; the fast
route exploits

    sum_x r[x] w[x] cos(phi_k[x]) =  Re FFT2(r*w)[k, l]
    sum_x r[x] w[x] sin(phi_k[x]) = -Im FFT2(r*w)[k, l]

and product-to-sum identities that reduce weighted products of two basis
functions to lookups into FFT2(w).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .frame import REGION_B, REGION_R, ProjectionLayout


class ParameterError(ValueError):
    """A weighting or basis parameter is outside its valid range."""


@dataclass(frozen=True)
class BasisSet:
    """The complete real basis over an M x N working area.

    ``matrix`` holds one flattened raster per row (C-order), so
    ``matrix[k].reshape(m, n)`` is basis function k.  Index 0 is the DC
    function.  ``k_freq``/``l_freq``/``is_sin`` describe each row's frequency
    pair and whether it is the sine or cosine member.
    """

    m: int
    n: int
    k_freq: np.ndarray
    l_freq: np.ndarray
    is_sin: np.ndarray
    matrix: np.ndarray

    @property
    def count(self) -> int:
        return self.matrix.shape[0]

    def function(self, k: int) -> np.ndarray:
        return self.matrix[k].reshape(self.m, self.n)


@lru_cache(maxsize=4)
def build_basis(m: int, n: int) -> BasisSet:
    """Enumerate the real DFT-derived basis for an ``m`` x ``n`` area.

    Frequency pairs are walked in row-major order; of each conjugate pair
    only the lexicographically smaller representative is emitted, cosine
    before sine.  Self-conjugate pairs (the sine would be identically zero)
    contribute only their cosine member.
    """
    if m < 1 or n < 1:
        raise ParameterError("basis extents must be positive")
    k_freq, l_freq, is_sin = [], [], []
    for k in range(m):
        for l in range(n):
            conj = ((-k) % m, (-l) % n)
            if conj < (k, l):
                continue  # conjugate image of an earlier pair
            k_freq.append(k)
            l_freq.append(l)
            is_sin.append(False)
            if conj != (k, l):
                k_freq.append(k)
                l_freq.append(l)
                is_sin.append(True)
    k_arr = np.asarray(k_freq, dtype=np.intp)
    l_arr = np.asarray(l_freq, dtype=np.intp)
    sin_arr = np.asarray(is_sin, dtype=bool)
    assert k_arr.size == m * n

    rows = np.arange(m)[:, None].astype(np.float64)
    cols = np.arange(n)[None, :].astype(np.float64)
    grid = (rows / m)[None, :, :] * k_arr[:, None, None] \
        + (cols / n)[None, :, :] * l_arr[:, None, None]
    phase = (2.0 * np.pi) * grid.reshape(k_arr.size, m * n)
    matrix = np.where(sin_arr[:, None], np.sin(phase), np.cos(phase))
    for a in (k_arr, l_arr, sin_arr, matrix):
        a.setflags(write=False)
    return BasisSet(m=m, n=n, k_freq=k_arr, l_freq=l_arr, is_sin=sin_arr,
                    matrix=matrix)


@dataclass(frozen=True)
class WeightMask:
    """Non-negative per-sample weighting of the working area."""

    w: np.ndarray
    mu: float
    rho: float

    @classmethod
    def uniform(cls, m: int, n: int, value: float = 1.0) -> "WeightMask":
        """Constant weighting over the whole area (padding included)."""
        w = np.full((m, n), float(value))
        w.setflags(write=False)
        return cls(w=w, mu=float(value), rho=0.5)


def build_weight_mask(layout: ProjectionLayout, mu: float = 0.5,
                      rho: float = 0.8) -> WeightMask:
    """Spatial weighting: ``mu`` on the centre block, a radial decay on R.

    Reconstructed samples are weighted ``rho ** d`` where ``d`` is the
    Euclidean distance from the centre of the working area, so neighbours far
    from the block contribute little.  Padding gets exactly zero.
    """
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"decay factor rho must lie in (0, 1), got {rho}")
    if mu <= 0.0:
        raise ParameterError(f"centre-block weight mu must be positive, got {mu}")
    m, n = layout.m, layout.n
    rows = np.arange(m, dtype=np.float64)[:, None] - (m - 1) / 2.0
    cols = np.arange(n, dtype=np.float64)[None, :] - (n - 1) / 2.0
    dist = np.sqrt(rows * rows + cols * cols)
    w = np.where(layout.region_map == REGION_R, rho ** dist, 0.0)
    w = np.where(layout.region_map == REGION_B, mu, w)
    w.setflags(write=False)
    return WeightMask(w=w, mu=float(mu), rho=float(rho))


def _weights_array(w) -> np.ndarray:
    return w.w if isinstance(w, WeightMask) else np.asarray(w, dtype=np.float64)


def weighted_inner(a, b, w) -> float:
    """Weighted inner product sum(a * b * w) over the working area."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    wa = _weights_array(w)
    if not (a.shape == b.shape == wa.shape):
        raise ValueError(
            f"dimension mismatch: {a.shape}, {b.shape}, weights {wa.shape}")
    return float(np.sum(a * b * wa))


def precompute_norms(basis: BasisSet, w) -> np.ndarray:
    """Weighted squared norm of every basis function under ``w``.

    Functions whose weighted norm (numerically) vanishes cannot take part in
    any projection; callers detect them via `excluded_mask`.
    """
    wa = _weights_array(w)
    if wa.shape != (basis.m, basis.n):
        raise ValueError(f"weights {wa.shape} do not match basis "
                         f"{(basis.m, basis.n)}")
    norms = (basis.matrix * basis.matrix) @ wa.ravel()
    norms.setflags(write=False)
    return norms


def excluded_mask(norms: np.ndarray) -> np.ndarray:
    """Flag basis functions whose weighted norm is numerically zero."""
    top = norms.max(initial=0.0)
    return norms <= 1e-12 * top


class ProjectionContext:
    """A basis bound to one weight mask, with fast weighted correlations.

    mode="matrix" evaluates everything through the explicit basis matrix and
    is the reference; mode="fft" (default) computes the same quantities from
    FFT tables and must match the reference to ~1e-9 or better.  Weighted
    norms always come from the reference route so that both modes share one
    set of projection denominators.
    """

    def __init__(self, basis: BasisSet, weights: WeightMask, mode: str = "fft"):
        if mode not in ("fft", "matrix"):
            raise ParameterError(f"unknown projection mode {mode!r}")
        self.basis = basis
        self.weights = weights
        self.mode = mode
        self.w_flat = _weights_array(weights).ravel()
        self.norms = precompute_norms(basis, weights)
        self.excluded = excluded_mask(self.norms)
        self._safe_norms = np.where(self.excluded, 1.0, self.norms)
        if mode == "fft":
            what = np.fft.fft2(_weights_array(weights))
            self._wc = np.ascontiguousarray(what.real)   # cos-type table
            self._ws = np.ascontiguousarray(-what.imag)  # sin-type table

    # -- weighted correlations -------------------------------------------

    def numerators(self, residual: np.ndarray) -> np.ndarray:
        """sum(residual * phi_k * w) for every k at once."""
        b = self.basis
        r = residual.reshape(b.m, b.n)
        if self.mode == "fft":
            spec = np.fft.fft2(r * _weights_array(self.weights))
            return np.where(b.is_sin,
                            -spec.imag[b.k_freq, b.l_freq],
                            spec.real[b.k_freq, b.l_freq])
        return b.matrix @ (r.ravel() * self.w_flat)

    def gram(self, indices: np.ndarray) -> np.ndarray:
        """Symmetric matrix of weighted products phi_a * phi_b over P."""
        b = self.basis
        idx = np.asarray(indices, dtype=np.intp)
        if self.mode == "matrix":
            sub = b.matrix[idx]
            g = (sub * self.w_flat) @ sub.T
            return (g + g.T) * 0.5
        ka, la, sa = b.k_freq[idx], b.l_freq[idx], b.is_sin[idx]
        kd = (ka[:, None] - ka[None, :]) % b.m
        ld = (la[:, None] - la[None, :]) % b.n
        ks = (ka[:, None] + ka[None, :]) % b.m
        ls = (la[:, None] + la[None, :]) % b.n
        cd, cs = self._wc[kd, ld], self._wc[ks, ls]
        sd, ss = self._ws[kd, ld], self._ws[ks, ls]
        cos_cos = 0.5 * (cd + cs)
        sin_sin = 0.5 * (cd - cs)
        cos_sin = 0.5 * (ss - sd)   # row cosine, column sine
        sin_cos = 0.5 * (ss + sd)   # row sine, column cosine
        row_sin = sa[:, None]
        col_sin = sa[None, :]
        g = np.where(row_sin,
                     np.where(col_sin, sin_sin, sin_cos),
                     np.where(col_sin, cos_sin, cos_cos))
        # Mirror the upper triangle so the result is exactly symmetric.
        upper = np.triu(g, 1)
        return upper + upper.T + np.diag(np.diagonal(g))

    def render(self, indices: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
        """Spatial raster (flattened) of sum_u c_u * phi_u."""
        idx = np.asarray(indices, dtype=np.intp)
        return np.asarray(coefficients, dtype=np.float64) @ self.basis.matrix[idx]


@lru_cache(maxsize=64)
def _cached_context(m: int, n: int, size: int,
                    availability: tuple[bool, bool, bool, bool],
                    mu: float, rho: float, mode: str) -> ProjectionContext:
    from .frame import BlockRef, ProjectionLayout, _region_map
    layout = ProjectionLayout(
        block=BlockRef(x0=size, y0=size, size=size),
        m=m, n=n,
        region_map=_region_map(size, availability),
        availability=availability,
        origin=(0, 0),
    )
    return ProjectionContext(build_basis(m, n), build_weight_mask(layout, mu, rho),
                             mode=mode)


def projection_context(layout: ProjectionLayout, mu: float = 0.5,
                       rho: float = 0.8, mode: str = "fft") -> ProjectionContext:
    """Shared, cached context for a layout's region pattern.

    Layouts at the same frame position class (same neighbour availability and
    block size) produce identical weight masks, so contexts are cached on
    that key.  The basis itself is shared across all contexts of one size.
    """
    return _cached_context(layout.m, layout.n, layout.block.size,
                           layout.availability, float(mu), float(rho), mode)

"""Full-search block motion estimation and motion compensation.

Displacements are stored in sub-pel units: ``scale`` is 1 for integer-pel
search and 2 for half-pel, so a vector (dx=3, dy=-1) at scale 2 means a
displacement of (+1.5, -0.5) samples.  Half-pel samples come from bilinear
interpolation on an edge-replicated grid.  The search is exhaustive over the
clamped window at the selected resolution and minimises the sum of absolute
differences; SAD values are dyadic rationals well inside float32's exact
integer range, so comparisons and ties are exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .frame import BlockRef, GeometryError, Plane


@dataclass(frozen=True)
class MotionVector:
    """Block displacement in sub-pel units (dx columns, dy rows)."""

    dx: int
    dy: int
    scale: int = 2  # sub-pel denominator: 1 integer-pel, 2 half-pel

    def __post_init__(self):
        if self.scale not in (1, 2):
            raise ValueError(f"unsupported sub-pel scale {self.scale}")

    @property
    def dx_samples(self) -> float:
        return self.dx / self.scale

    @property
    def dy_samples(self) -> float:
        return self.dy / self.scale

    def for_chroma(self) -> "MotionVector":
        """Displacement for half-resolution chroma, on its half-pel grid.

        A luma displacement of d samples is d/2 chroma samples, i.e. exactly
        ``dx`` chroma half-pel units at scale 1 and ``rint(dx/2)`` units at
        scale 2.
        """
        if self.scale == 1:
            return MotionVector(dx=self.dx, dy=self.dy, scale=2)
        return MotionVector(dx=int(np.rint(self.dx / 2)),
                            dy=int(np.rint(self.dy / 2)), scale=2)


@dataclass(frozen=True)
class SearchParams:
    """Exhaustive-search window: +/- ``search_range`` samples, SAD metric."""

    search_range: int = 16
    subpel: int = 2  # 1 = integer-pel, 2 = half-pel

    def __post_init__(self):
        if self.search_range < 1:
            raise ValueError("search range must be >= 1")
        if self.subpel not in (1, 2):
            raise ValueError(f"subpel must be 1 or 2, got {self.subpel}")


def _grid(reference: Plane, subpel: int) -> np.ndarray:
    return reference.half_pel() if subpel == 2 else reference.as_float32()


def _window(plane: Plane, block: BlockRef, params: SearchParams):
    """Clamped displacement bounds keeping the block footprint in-frame."""
    s, scale = block.size, params.subpel
    r = params.search_range * scale
    dy_lo = max(-r, -scale * block.y0)
    dy_hi = min(r, scale * (plane.height - s - block.y0))
    dx_lo = max(-r, -scale * block.x0)
    dx_hi = min(r, scale * (plane.width - s - block.x0))
    return dy_lo, dy_hi, dx_lo, dx_hi


def estimate(current: Plane, reference: Plane, block: BlockRef,
             params: SearchParams = SearchParams()
             ) -> tuple[MotionVector, float]:
    """Exhaustive SAD search for the best displacement of one block.

    Ties are broken by smallest |dx|+|dy|, then dy, then dx, so a static
    scene always yields the zero vector.  Returns the winning vector and its
    SAD.
    """
    scale = params.subpel
    grid = _grid(reference, scale)
    target = current.block(block).astype(np.float32)
    dy_lo, dy_hi, dx_lo, dx_hi = _window(reference, block, params)
    n_dy, n_dx = dy_hi - dy_lo + 1, dx_hi - dx_lo + 1
    s = block.size
    s0, s1 = grid.strides
    base = (scale * block.y0 + dy_lo) * grid.shape[1] + scale * block.x0 + dx_lo
    candidates = as_strided(
        grid.reshape(-1)[base:],
        shape=(n_dy, n_dx, s, s),
        strides=(s0, s1, scale * s0, scale * s1),
    )
    sad = np.abs(candidates - target).sum(axis=(2, 3))
    best = sad.min()
    ties = np.argwhere(sad == best)
    if ties.shape[0] == 1:
        iy, ix = ties[0]
    else:
        dy_t = ties[:, 0] + dy_lo
        dx_t = ties[:, 1] + dx_lo
        pick = np.lexsort((dx_t, dy_t, np.abs(dx_t) + np.abs(dy_t)))[0]
        iy, ix = ties[pick]
    mv = MotionVector(dx=int(ix + dx_lo), dy=int(iy + dy_lo), scale=scale)
    return mv, float(best)


def compensate(reference: Plane, block: BlockRef, mv: MotionVector) -> np.ndarray:
    """Displaced block from the reference as a float raster.

    Half-pel positions are bilinear; border half-pel samples replicate the
    frame edge.  The block footprint must stay inside the frame.
    """
    s, scale = block.size, mv.scale
    y = scale * block.y0 + mv.dy
    x = scale * block.x0 + mv.dx
    limit_y = scale * (reference.height - s)
    limit_x = scale * (reference.width - s)
    if not (0 <= y <= limit_y and 0 <= x <= limit_x):
        raise GeometryError(
            f"displacement ({mv.dx}, {mv.dy})/{scale} moves block "
            f"({block.x0}, {block.y0}) outside the reference")
    grid = _grid(reference, scale)
    return grid[y:y + scale * s:scale, x:x + scale * s:scale].astype(np.float64)


# ---------------------------------------------------------------------------
# Displacement rate proxy: exponential-Golomb code lengths
# ---------------------------------------------------------------------------

def _unsigned_golomb_bits(value: int) -> int:
    # order-0 exp-Golomb: 2*floor(log2(v+1)) + 1 bits
    return 2 * (value + 1).bit_length() - 1


def signed_golomb_bits(value: int) -> int:
    """Code length of a signed exp-Golomb codeword (0 -> 1 bit)."""
    mapped = 2 * value - 1 if value > 0 else -2 * value
    return _unsigned_golomb_bits(mapped)


def mv_bits(mv: MotionVector, predictor: MotionVector | None) -> int:
    """Rate estimate for one vector, differentially coded against the left
    neighbour (zero vector at the start of a block row).  The predictor is
    converted into this vector's resolution before differencing."""
    if predictor is None:
        pdx = pdy = 0
    else:
        pdx = round(predictor.dx * mv.scale / predictor.scale)
        pdy = round(predictor.dy * mv.scale / predictor.scale)
    return signed_golomb_bits(mv.dx - pdx) + signed_golomb_bits(mv.dy - pdy)

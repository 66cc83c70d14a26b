"""Sample rasters, macroblock geometry and distortion metrics.

Frames are processed macroblock by macroblock in line-scan order (left to
right, top to bottom).  Around the block currently being predicted, a square
working area of 3x3 macroblocks is laid out.  Neighbouring blocks that have
already been transmitted carry usable samples; the centre block holds the
preliminary temporal predictor; everything else is padding and must never
influence any result.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Region labels inside the 3x3-macroblock working area.
REGION_PAD = 0  # not transmitted yet, or outside the frame
REGION_R = 1    # reconstructed neighbour samples
REGION_B = 2    # the block being predicted


class GeometryError(ValueError):
    """Block placement inconsistent with the frame geometry."""


class Plane:
    """Immutable 8-bit sample raster (one colour component of a frame).

    Stores samples row-major as ``uint8``; every computation promotes to
    floating point.  Interpolated versions of the raster are derived lazily
    and cached, which is safe because the sample data is read-only.
    """

    __slots__ = ("data", "_f32", "_half")

    def __init__(self, data):
        arr = np.asarray(data)
        if arr.ndim != 2:
            raise ValueError(f"plane must be 2-D, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.number):
                raise ValueError(f"plane dtype {arr.dtype} is not numeric")
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("plane samples must lie in [0, 255]")
            arr = np.asarray(np.rint(arr), dtype=np.uint8)
        else:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "_f32", None)
        object.__setattr__(self, "_half", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("Plane is immutable")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def block(self, ref: "BlockRef") -> np.ndarray:
        """Read-only view of the samples covered by ``ref``."""
        return self.data[ref.y0:ref.y0 + ref.size, ref.x0:ref.x0 + ref.size]

    def as_float32(self) -> np.ndarray:
        if self._f32 is None:
            f = self.data.astype(np.float32)
            f.setflags(write=False)
            object.__setattr__(self, "_f32", f)
        return self._f32

    def half_pel(self) -> np.ndarray:
        """Bilinearly interpolated raster on the half-sample grid.

        Index ``[2y, 2x]`` reproduces the integer-position sample exactly;
        odd indices are two- or four-tap averages.  The bottom and right
        borders are edge-replicated, so the result has shape
        ``(2*height, 2*width)`` and every half-pel position is defined.
        """
        if self._half is None:
            a = np.pad(self.as_float32(), ((0, 1), (0, 1)), mode="edge")
            up = np.empty((2 * self.height, 2 * self.width), np.float32)
            up[0::2, 0::2] = a[:-1, :-1]
            up[0::2, 1::2] = (a[:-1, :-1] + a[:-1, 1:]) / 2
            up[1::2, 0::2] = (a[:-1, :-1] + a[1:, :-1]) / 2
            up[1::2, 1::2] = (a[:-1, :-1] + a[:-1, 1:] + a[1:, :-1] + a[1:, 1:]) / 4
            up.setflags(write=False)
            object.__setattr__(self, "_half", up)
        return self._half

    def __repr__(self):
        return f"Plane({self.width}x{self.height})"


@dataclass(frozen=True)
class Frame:
    """One video frame: a luma plane plus optional 4:2:0 chroma planes."""

    y: Plane
    u: Plane | None = None
    v: Plane | None = None

    def __post_init__(self):
        for c in (self.u, self.v):
            if c is not None and (c.width != self.y.width // 2
                                  or c.height != self.y.height // 2):
                raise ValueError("chroma planes must be half the luma size")


@dataclass(frozen=True)
class BlockRef:
    """Position of one macroblock, aligned to the block grid."""

    x0: int
    y0: int
    size: int = 16

    def __post_init__(self):
        if self.size < 1 or (self.size & (self.size - 1)) != 0:
            raise GeometryError(f"block size {self.size} is not a power of two")
        if self.x0 < 0 or self.y0 < 0:
            raise GeometryError(f"negative block origin ({self.x0}, {self.y0})")
        if self.x0 % self.size or self.y0 % self.size:
            raise GeometryError(
                f"block origin ({self.x0}, {self.y0}) not aligned to size {self.size}")


@dataclass(frozen=True)
class ProjectionLayout:
    """Geometry of the 3x3-macroblock working area around one block.

    ``region_map`` labels every sample of the area as REGION_B (the centre
    block), REGION_R (transmitted neighbours: left, top-left, top, top-right
    when they exist inside the frame) or REGION_PAD.  ``origin`` is the frame
    coordinate of the area's top-left corner and may stick out of the frame;
    out-of-frame samples are always PAD.
    """

    block: BlockRef
    m: int
    n: int
    region_map: np.ndarray
    availability: tuple[bool, bool, bool, bool]  # left, top-left, top, top-right
    origin: tuple[int, int]  # (y, x) of area sample [0, 0] in frame coordinates

    @property
    def cache_key(self):
        """Hashable key identifying the region pattern (for mask caching)."""
        return (self.block.size, self.availability)

    @property
    def r_empty(self) -> bool:
        return not any(self.availability)

    @cached_property
    def block_slices(self) -> tuple[slice, slice]:
        """Slices of the centre block within the working area."""
        s = self.block.size
        return slice(s, 2 * s), slice(s, 2 * s)


def _region_map(size: int, availability: tuple[bool, bool, bool, bool]) -> np.ndarray:
    left, top_left, top, top_right = availability
    m = 3 * size
    reg = np.full((m, m), REGION_PAD, np.uint8)
    if top_left:
        reg[:size, :size] = REGION_R
    if top:
        reg[:size, size:2 * size] = REGION_R
    if top_right:
        reg[:size, 2 * size:] = REGION_R
    if left:
        reg[size:2 * size, :size] = REGION_R
    reg[size:2 * size, size:2 * size] = REGION_B
    reg.setflags(write=False)
    return reg


def build_layout(frame_dims, block: BlockRef) -> ProjectionLayout:
    """Lay out the working area for ``block`` inside a frame.

    Parameters
    ----------
    frame_dims : (width, height) pair or any object with width/height
    block : BlockRef

    Only neighbours that exist inside the frame *and* precede the block in
    line-scan order become REGION_R; the four blocks at and below the current
    scan position are still untransmitted and stay PAD, as do neighbours that
    fall outside the frame.
    """
    if hasattr(frame_dims, "width"):
        width, height = frame_dims.width, frame_dims.height
    else:
        width, height = frame_dims
    s = block.size
    if block.x0 + s > width or block.y0 + s > height:
        raise GeometryError(
            f"block ({block.x0}, {block.y0}) size {s} exceeds frame {width}x{height}")
    left = block.x0 >= s
    top = block.y0 >= s
    availability = (
        left,
        left and top,
        top,
        top and block.x0 + 2 * s <= width,
    )
    return ProjectionLayout(
        block=block,
        m=3 * s,
        n=3 * s,
        region_map=_region_map(s, availability),
        availability=availability,
        origin=(block.y0 - s, block.x0 - s),
    )


def mse(a, b) -> float:
    """Mean squared sample difference of two equally sized rasters."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def psnr(reference, test, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give ``inf``."""
    m = mse(reference, test)
    if m == 0.0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / m))

"""Line-scan prediction loop, closed-loop reconstruction, and RD points.

The harness encodes IPPP: the first frame is stored through the transform
path against a flat mid-grey predictor at the finest quantizer of the
ladder, every later frame is predicted from the previous reconstruction.

Per macroblock the encoder forms the motion-compensated predictor and, when
enabled and any reconstructed neighbour exists, the spatially refined
predictor; whichever has the smaller MSE against the original is kept, and
one flag bit per macroblock is charged for the choice.  Refinement reads
only data a decoder would also have: the previous reconstructed frame (via
the displaced block) and already-reconstructed neighbour blocks of the
current frame.  `replay_trace` exercises exactly that property.

Rates are proxy rates: zeroth-order entropy of the quantized transform
coefficients per block, plus exp-Golomb motion bits and flag bits.  They
order operating points correctly but are not comparable to a real entropy
coder's output.  PSNR is luma-only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from . import extrapolate
from .basis import projection_context
from .frame import (BlockRef, Frame, GeometryError, Plane, build_layout, mse,
                    psnr)
from .motion import MotionVector, SearchParams, compensate, estimate, mv_bits

REFINEMENTS = ("none", "fsa", "rba", "msa")

# Quantizer ladder mirroring ten fixed QPs from 16 to 43 in steps of 3,
# mapped through qstep = 2**((qp - 4) / 6).
DEFAULT_QPS = tuple(range(16, 44, 3))


def qp_to_qstep(qp: float) -> float:
    return float(2.0 ** ((qp - 4.0) / 6.0))


@dataclass(frozen=True)
class EncoderConfig:
    refinement: str = "msa"
    extrapolation: extrapolate.ExtrapolationParams | None = None
    search: SearchParams = field(default_factory=SearchParams)
    mu: float = 0.5
    rho: float = 0.8
    qps: tuple = DEFAULT_QPS
    block_size: int = 16
    fps: float = 30.0
    mode: str = "fft"  # projection evaluation route

    def __post_init__(self):
        if self.refinement not in REFINEMENTS:
            raise ValueError(f"unknown refinement {self.refinement!r}")
        if self.refinement != "none" and self.extrapolation is None:
            object.__setattr__(
                self, "extrapolation",
                extrapolate.ExtrapolationParams.defaults(self.refinement))
        if len(self.qps) < 1 or any(b <= a for a, b in zip(self.qps, self.qps[1:])):
            raise ValueError("quantizer ladder must be strictly increasing")
        if self.block_size % 8:
            raise ValueError("block size must be a multiple of the 8x8 transform")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.mu <= 0.0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.mode not in ("fft", "matrix"):
            raise ValueError(f"unknown projection mode {self.mode!r}")

    @property
    def qsteps(self) -> tuple:
        return tuple(qp_to_qstep(qp) for qp in self.qps)


@dataclass(frozen=True)
class BlockDecision:
    bx: int
    by: int
    mv: MotionVector
    sad: float
    refined: bool
    mc_mse: float
    refined_mse: float  # nan when refinement was not attempted
    refine_seconds: float = 0.0


@dataclass(frozen=True)
class FramePrediction:
    predictor: np.ndarray      # chosen per-block predictor, float64 raster
    mc_predictor: np.ndarray   # pure motion-compensated raster
    decisions: list
    side_bits: int             # flag bits + motion bits, exactly
    refine_seconds: float


@dataclass(frozen=True)
class RDPoint:
    rate_kbps: float
    psnr_db: float
    qp: float
    qstep: float
    refined_fraction: float


@dataclass(frozen=True)
class RDCurve:
    label: str
    points: tuple

    def rates(self) -> np.ndarray:
        return np.array([p.rate_kbps for p in self.points])

    def psnrs(self) -> np.ndarray:
        return np.array([p.psnr_db for p in self.points])


# ---------------------------------------------------------------------------
# Working-area assembly and per-block prediction
# ---------------------------------------------------------------------------

def assemble_window(layout, neighbor_samples: np.ndarray,
                    mc_block: np.ndarray) -> np.ndarray:
    """Fill the 3x3-block working area: neighbours on R, the temporal
    predictor in the centre, zeros on padding (weight-excluded anyway)."""
    s = layout.block.size
    x0, y0 = layout.block.x0, layout.block.y0
    f = np.zeros((layout.m, layout.n))
    left, top_left, top, top_right = layout.availability
    src = neighbor_samples
    if top_left:
        f[:s, :s] = src[y0 - s:y0, x0 - s:x0]
    if top:
        f[:s, s:2 * s] = src[y0 - s:y0, x0:x0 + s]
    if top_right:
        f[:s, 2 * s:] = src[y0 - s:y0, x0 + s:x0 + 2 * s]
    if left:
        f[s:2 * s, :s] = src[y0:y0 + s, x0 - s:x0]
    f[s:2 * s, s:2 * s] = mc_block
    return f


def _predict_block(current: Plane, reference: Plane, block: BlockRef,
                   neighbor_samples: np.ndarray, config: EncoderConfig
                   ) -> tuple[np.ndarray, BlockDecision]:
    """MC + optional refinement + MSE switch for one macroblock."""
    mv, sad = estimate(current, reference, block, config.search)
    mc = compensate(reference, block, mv)
    original = current.block(block)
    mc_err = mse(original, mc)
    layout = build_layout(current, block)
    refined_err = float("nan")
    chosen, used_refined, spent = mc, False, 0.0
    if config.refinement != "none" and not layout.r_empty:
        ctx = projection_context(layout, mu=config.mu, rho=config.rho,
                                 mode=config.mode)
        window = assemble_window(layout, neighbor_samples, mc)
        t0 = time.perf_counter()
        result = extrapolate.run(window, layout, config.extrapolation,
                                 context=ctx)
        spent = time.perf_counter() - t0
        refined_err = mse(original, result.block)
        if refined_err < mc_err:
            chosen, used_refined = result.block, True
    decision = BlockDecision(bx=block.x0 // block.size, by=block.y0 // block.size,
                             mv=mv, sad=sad, refined=used_refined,
                             mc_mse=mc_err, refined_mse=refined_err,
                             refine_seconds=spent)
    return chosen, decision


def _side_bits(decisions, n_blocks_x: int, flag_per_block: bool) -> int:
    """Motion bits (left-differential per row) plus one flag bit per block."""
    bits = len(decisions) if flag_per_block else 0
    for d in decisions:
        predictor = None
        if d.bx > 0:
            left = decisions[d.by * n_blocks_x + d.bx - 1]
            predictor = left.mv
        bits += mv_bits(d.mv, predictor)
    return bits


def predict_frame(current: Plane, reference: Plane, config: EncoderConfig, *,
                  neighbor_source: Plane | None = None,
                  jobs: int = 1) -> FramePrediction:
    """Open-loop frame prediction: refinement neighbours come from
    ``neighbor_source`` (the current originals by default), so blocks are
    independent and may be evaluated in parallel.

    The closed-loop path in `encode_sequence` interleaves prediction with
    reconstruction instead and does not use this function's parallelism.
    """
    s = config.block_size
    if current.width % s or current.height % s:
        raise ValueError(f"frame {current.width}x{current.height} not a "
                         f"multiple of the block size {s}")
    src = (neighbor_source if neighbor_source is not None else current).data
    nx, ny = current.width // s, current.height // s
    blocks = [BlockRef(x0=bx * s, y0=by * s, size=s)
              for by in range(ny) for bx in range(nx)]

    def work(block):
        return _predict_block(current, reference, block, src, config)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, blocks))
    else:
        results = [work(b) for b in blocks]

    predictor = np.empty((current.height, current.width))
    mc_raster = np.empty_like(predictor)
    decisions = []
    refine_total = 0.0
    for block, (chosen, decision) in zip(blocks, results):
        ys, xs = slice(block.y0, block.y0 + s), slice(block.x0, block.x0 + s)
        predictor[ys, xs] = chosen
        mc_raster[ys, xs] = compensate(reference, block, decision.mv) \
            if decision.refined else chosen
        decisions.append(decision)
        refine_total += decision.refine_seconds
    side = _side_bits(decisions, nx, config.refinement != "none")
    return FramePrediction(predictor=predictor, mc_predictor=mc_raster,
                           decisions=decisions, side_bits=side,
                           refine_seconds=refine_total)


# ---------------------------------------------------------------------------
# Transform path and closed-loop encoding
# ---------------------------------------------------------------------------

def _tile_8x8(block: np.ndarray) -> np.ndarray:
    """(s, s) raster -> (n_tiles, 8, 8) in row-major tile order."""
    s = block.shape[0]
    t = s // 8
    return block.reshape(t, 8, t, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8)


def _untile_8x8(tiles: np.ndarray, s: int) -> np.ndarray:
    t = s // 8
    return tiles.reshape(t, t, 8, 8).transpose(0, 2, 1, 3).reshape(s, s)


def dct_8x8(tiles: np.ndarray) -> np.ndarray:
    return scipy.fft.dctn(tiles, type=2, axes=(-2, -1), norm="ortho")


def idct_8x8(tiles: np.ndarray) -> np.ndarray:
    return scipy.fft.idctn(tiles, type=2, axes=(-2, -1), norm="ortho")


def _entropy_bits(symbols: np.ndarray) -> float:
    """Zeroth-order entropy of the symbol stream, in bits."""
    _, counts = np.unique(symbols, return_counts=True)
    if counts.size <= 1:
        return 0.0
    p = counts / symbols.size
    return float(-(counts * np.log2(p)).sum())


def reconstruct_block(original: np.ndarray, predictor: np.ndarray,
                      qstep: float) -> tuple[np.ndarray, float, np.ndarray]:
    """Transform-code the prediction residual of one block.

    residual -> 8x8 DCT-II (orthonormal) -> uniform quantization -> inverse
    -> predictor + coded residual, clamped to [0, 255] and rounded to the
    8-bit grid.  Returns (reconstructed block uint8, coefficient bits,
    quantized levels) — the levels make the path replayable.
    """
    if qstep <= 0:
        raise ValueError("qstep must be positive")
    residual = np.asarray(original, dtype=np.float64) - predictor
    coeffs = dct_8x8(_tile_8x8(residual))
    levels = np.asarray(np.rint(coeffs / qstep), dtype=np.int32)
    recon = decode_block(predictor, levels, qstep)
    return recon, _entropy_bits(levels.ravel()), levels


def decode_block(predictor: np.ndarray, levels: np.ndarray,
                 qstep: float) -> np.ndarray:
    """Decoder-side counterpart of `reconstruct_block`."""
    coded = idct_8x8(levels.astype(np.float64) * qstep)
    out = predictor + _untile_8x8(coded, predictor.shape[0])
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class BlockTrace:
    mv: MotionVector
    refined: bool
    levels: np.ndarray


@dataclass(frozen=True)
class EncodeTrace:
    """Everything a decoder needs to replay one encode pass."""
    qstep: float
    intra_qstep: float
    intra_levels: np.ndarray   # (n_blocks, tiles, 8, 8)
    frames: tuple              # per P-frame tuple of BlockTrace
    dims: tuple                # (width, height)
    block_size: int


@dataclass(frozen=True)
class FrameStats:
    index: int
    bits: float
    psnr_db: float
    refined_fraction: float
    refine_seconds: float


def _encode_intra(frame: Plane, qstep: float, block_size: int):
    """Store the first frame against a flat mid-grey predictor."""
    s = block_size
    recon = np.empty((frame.height, frame.width), np.uint8)
    flat = np.full((s, s), 128.0)
    bits = 0.0
    levels_all = []
    for y0 in range(0, frame.height, s):
        for x0 in range(0, frame.width, s):
            block = frame.data[y0:y0 + s, x0:x0 + s]
            rec, b, levels = reconstruct_block(block, flat, qstep)
            recon[y0:y0 + s, x0:x0 + s] = rec
            bits += b
            levels_all.append(levels)
    return Plane(recon), bits, np.stack(levels_all)


def _mc_chroma(prev: Frame, decisions, block_size: int) -> tuple:
    """Carry chroma by plain MC with halved displacements (no residual)."""
    if prev.u is None or prev.v is None:
        return None, None
    cs = block_size // 2
    out = []
    for comp in (prev.u, prev.v):
        rec = np.empty((comp.height, comp.width), np.uint8)
        for d in decisions:
            blk = BlockRef(x0=d.bx * cs, y0=d.by * cs, size=cs)
            cmv = d.mv.for_chroma()
            try:
                pred = compensate(comp, blk, cmv)
            except GeometryError:  # cannot happen for halved in-range vectors
                pred = comp.block(blk).astype(np.float64)
            rec[blk.y0:blk.y0 + cs, blk.x0:blk.x0 + cs] = \
                np.clip(np.rint(pred), 0, 255).astype(np.uint8)
        out.append(Plane(rec))
    return tuple(out)


def encode_pass(frames, config: EncoderConfig, qstep: float, qp: float, *,
                intra: tuple | None = None, collect_trace: bool = False,
                predictor_sink: list | None = None):
    """One closed-loop encode of the sequence at a single quantizer step.

    Returns (RDPoint, per-frame stats, EncodeTrace | None).  Rate covers
    P-frames only (coefficient + motion + flag bits); the intra frame is
    fixed per sequence, shared by every ladder point, and excluded from both
    the rate and the PSNR mean.  When ``predictor_sink`` is a list, the
    encoder's per-frame predictor rasters are appended to it — the reference
    a decoder-side replay has to reproduce.
    """
    s = config.block_size
    first = frames[0].y
    intra_qstep = min(config.qsteps)
    if intra is None:
        intra = _encode_intra(first, intra_qstep, s)
    recon_prev_y, _, intra_levels = intra
    prev_frame = Frame(y=recon_prev_y, u=frames[0].u, v=frames[0].v)

    nx, ny = first.width // s, first.height // s
    total_bits = 0.0
    stats = []
    trace_frames = []
    for t in range(1, len(frames)):
        cur = frames[t].y
        recon_y = np.zeros((cur.height, cur.width), np.uint8)
        pred_y = np.empty((cur.height, cur.width)) \
            if predictor_sink is not None else None
        decisions = []
        block_traces = []
        frame_bits = 0.0
        refine_total = 0.0
        for by in range(ny):
            for bx in range(nx):
                block = BlockRef(x0=bx * s, y0=by * s, size=s)
                chosen, decision = _predict_block(
                    cur, prev_frame.y, block, recon_y, config)
                rec, coeff_bits, levels = reconstruct_block(
                    cur.block(block), chosen, qstep)
                recon_y[block.y0:block.y0 + s, block.x0:block.x0 + s] = rec
                if pred_y is not None:
                    pred_y[block.y0:block.y0 + s,
                           block.x0:block.x0 + s] = chosen
                decisions.append(decision)
                frame_bits += coeff_bits
                refine_total += decision.refine_seconds
                if collect_trace:
                    block_traces.append(BlockTrace(
                        mv=decision.mv, refined=decision.refined,
                        levels=levels))
        frame_bits += _side_bits(decisions, nx, config.refinement != "none")
        total_bits += frame_bits
        refined_n = sum(d.refined for d in decisions)
        stats.append(FrameStats(
            index=t, bits=frame_bits,
            psnr_db=psnr(cur.data, recon_y),
            refined_fraction=refined_n / len(decisions),
            refine_seconds=refine_total))
        recon_u, recon_v = _mc_chroma(prev_frame, decisions, s) \
            if prev_frame.u is not None else (None, None)
        prev_frame = Frame(y=Plane(recon_y), u=recon_u, v=recon_v)
        if collect_trace:
            trace_frames.append(tuple(block_traces))
        if pred_y is not None:
            predictor_sink.append(pred_y)

    n_p = len(frames) - 1
    point = RDPoint(
        rate_kbps=total_bits * config.fps / n_p / 1000.0,
        psnr_db=float(np.mean([fs.psnr_db for fs in stats])),
        qp=qp, qstep=qstep,
        refined_fraction=float(np.mean([fs.refined_fraction for fs in stats])),
    )
    trace = None
    if collect_trace:
        trace = EncodeTrace(qstep=qstep, intra_qstep=intra_qstep,
                            intra_levels=intra_levels,
                            frames=tuple(trace_frames),
                            dims=(first.width, first.height), block_size=s)
    return point, stats, trace


def encode_sequence(frames, config: EncoderConfig, *,
                    collect_trace: bool = False):
    """Closed-loop encode over the whole quantizer ladder.

    Returns (RDCurve sorted by rate, per-(qp, frame) stats list, trace of the
    first ladder point or None).  Needs at least two frames (IPPP).
    """
    if len(frames) < 2:
        raise ValueError("need at least two frames for IPPP encoding")
    s = config.block_size
    first = frames[0].y
    if first.width % s or first.height % s:
        raise ValueError(f"frame {first.width}x{first.height} not a multiple "
                         f"of the block size {s}")
    intra = _encode_intra(first, min(config.qsteps), s)
    points = []
    all_stats = []
    trace = None
    for i, (qp, qstep) in enumerate(zip(config.qps, config.qsteps)):
        want_trace = collect_trace and i == 0
        point, stats, tr = encode_pass(frames, config, qstep, qp,
                                       intra=intra, collect_trace=want_trace)
        points.append(point)
        all_stats.append((qp, stats))
        if want_trace:
            trace = tr
    points.sort(key=lambda p: p.rate_kbps)
    label = config.refinement
    return RDCurve(label=label, points=tuple(points)), all_stats, trace


# ---------------------------------------------------------------------------
# Decoder-side replay
# ---------------------------------------------------------------------------

def replay_trace(trace: EncodeTrace, config: EncoderConfig):
    """Regenerate predictors and reconstructions from the trace alone.

    Uses only decoder-visible data: motion vectors, refinement flags and
    quantized levels.  Motion search and the RD switch are *not* re-run; the
    refinement engine is, reading reconstructed samples only.  Returns the
    list of per-frame predictor rasters and reconstructed planes.
    """
    width, height = trace.dims
    s = trace.block_size
    nx = width // s
    flat = np.full((s, s), 128.0)
    recon = np.empty((height, width), np.uint8)
    for i, y0 in enumerate(range(0, height, s)):
        for j, x0 in enumerate(range(0, width, s)):
            levels = trace.intra_levels[i * nx + j]
            recon[y0:y0 + s, x0:x0 + s] = decode_block(flat, levels,
                                                       trace.intra_qstep)
    prev = Plane(recon)
    predictors, recons = [], []
    for blocks in trace.frames:
        recon_y = np.zeros((height, width), np.uint8)
        predictor = np.empty((height, width))
        for idx, bt in enumerate(blocks):
            by, bx = divmod(idx, nx)
            block = BlockRef(x0=bx * s, y0=by * s, size=s)
            mc = compensate(prev, block, bt.mv)
            if bt.refined:
                layout = build_layout(prev, block)
                ctx = projection_context(layout, mu=config.mu, rho=config.rho,
                                         mode=config.mode)
                window = assemble_window(layout, recon_y, mc)
                result = extrapolate.run(window, layout, config.extrapolation,
                                         context=ctx)
                pred = result.block
            else:
                pred = mc
            predictor[block.y0:block.y0 + s, block.x0:block.x0 + s] = pred
            recon_y[block.y0:block.y0 + s, block.x0:block.x0 + s] = \
                decode_block(pred, bt.levels, trace.qstep)
        predictors.append(predictor)
        recons.append(Plane(recon_y))
        prev = recons[-1]
    return predictors, recons

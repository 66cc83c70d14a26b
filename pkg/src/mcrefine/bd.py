"""Bjontegaard mean differences between two rate-distortion curves.

Both metrics fit a third-order polynomial through one curve's PSNR as a
function of log10(rate) (or the inverse mapping for the rate difference),
integrate both fits over the overlapping interval and report the mean gap:
BD-PSNR in dB at equal rate, BD-rate in percent at equal quality (negative
means the test curve needs fewer bits).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class BDInputError(ValueError):
    """Curves unusable for a Bjontegaard fit (too short or disjoint)."""


@dataclass(frozen=True)
class BDResult:
    bd_rate_percent: float
    bd_psnr_db: float


def _curve_arrays(curve) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(curve, "points"):
        rate = np.array([p.rate_kbps for p in curve.points], dtype=np.float64)
        quality = np.array([p.psnr_db for p in curve.points], dtype=np.float64)
    else:
        rate, quality = (np.asarray(a, dtype=np.float64) for a in curve)
    order = np.argsort(rate)
    return rate[order], quality[order]


def _validate(rate: np.ndarray, quality: np.ndarray, name: str):
    if rate.size < 4:
        raise BDInputError(f"{name} curve has {rate.size} points; need >= 4")
    if not (np.isfinite(rate).all() and np.isfinite(quality).all()):
        raise BDInputError(f"{name} curve contains non-finite values")
    if (rate <= 0).any():
        raise BDInputError(f"{name} curve contains non-positive rates")


def _mean_poly(x: np.ndarray, y: np.ndarray, lo: float, hi: float) -> float:
    fit = np.polyfit(x, y, 3)
    integral = np.polyint(fit)
    return (np.polyval(integral, hi) - np.polyval(integral, lo)) / (hi - lo)


def bd_metrics(anchor, test) -> BDResult:
    """Mean PSNR and rate differences of ``test`` relative to ``anchor``.

    Accepts `RDCurve` objects or (rates, psnrs) array pairs.  Raises
    `BDInputError` when either curve has fewer than four points or the
    curves do not overlap on the fit axis.
    """
    ra, qa = _curve_arrays(anchor)
    rt, qt = _curve_arrays(test)
    _validate(ra, qa, "anchor")
    _validate(rt, qt, "test")
    la, lt = np.log10(ra), np.log10(rt)

    lo, hi = max(la.min(), lt.min()), min(la.max(), lt.max())
    if hi <= lo:
        raise BDInputError("curves do not overlap in rate")
    bd_psnr = _mean_poly(lt, qt, lo, hi) - _mean_poly(la, qa, lo, hi)

    qlo, qhi = max(qa.min(), qt.min()), min(qa.max(), qt.max())
    if qhi <= qlo:
        raise BDInputError("curves do not overlap in quality")
    diff = _mean_poly(qt, lt, qlo, qhi) - _mean_poly(qa, la, qlo, qhi)
    bd_rate = (10.0 ** diff - 1.0) * 100.0
    return BDResult(bd_rate_percent=float(bd_rate), bd_psnr_db=float(bd_psnr))

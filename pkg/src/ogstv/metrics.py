"""Restoration quality metrics: relative error, PSNR and BSNR."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "MetricReport",
    "rel_err",
    "psnr",
    "bsnr",
    "noise_std_for_bsnr",
    "report",
]

#: PSNR of two identical images.
PSNR_IDENTICAL = math.inf


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    rel_err: float
    bsnr_db: Optional[float] = None


def _pair(reference, estimate):
    reference = np.asarray(reference, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if reference.shape != estimate.shape:
        raise ValueError(f"shape mismatch: {reference.shape} vs {estimate.shape}")
    return reference, estimate


def rel_err(reference, estimate) -> float:
    """``||reference - estimate|| / ||reference||``."""
    reference, estimate = _pair(reference, estimate)
    denom = np.linalg.norm(reference)
    if denom == 0:
        raise ValueError("relative error is undefined for an all-zero reference")
    return float(np.linalg.norm(reference - estimate) / denom)


def psnr(reference, estimate, max_val: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` when the images are identical."""
    reference, estimate = _pair(reference, estimate)
    d = reference - estimate
    sq = float(np.sum(d * d))
    if sq == 0:
        return PSNR_IDENTICAL
    return 10.0 * math.log10(reference.size * max_val * max_val / sq)


def bsnr(g, eta) -> float:
    """Blurred signal-to-noise ratio ``20 log10(||g|| / ||eta||)`` in dB."""
    noise = np.linalg.norm(np.asarray(eta, dtype=np.float64))
    if noise == 0:
        raise ValueError("BSNR is undefined for zero noise")
    return 20.0 * math.log10(np.linalg.norm(np.asarray(g, dtype=np.float64)) / noise)


def noise_std_for_bsnr(blurred, target_bsnr_db: float) -> float:
    """Noise std whose expected BSNR against ``blurred`` equals the target.

    Uses ``E||eta||^2 = n**2 std**2`` with the noiseless blurred image as the
    signal, since the noise does not exist yet.
    """
    blurred = np.asarray(blurred, dtype=np.float64)
    norm = float(np.linalg.norm(blurred))
    if norm == 0:
        raise ValueError("cannot size noise for an all-zero image")
    return norm / (math.sqrt(blurred.size) * 10.0 ** (target_bsnr_db / 20.0))


def report(reference, estimate, max_val: float = 255.0, eta=None, g=None) -> MetricReport:
    b = bsnr(g, eta) if eta is not None and g is not None else None
    return MetricReport(psnr(reference, estimate, max_val), rel_err(reference, estimate), b)

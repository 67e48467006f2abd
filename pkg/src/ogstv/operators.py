"""Periodic linear operators on square images.

Blur kernels act by circular *correlation* about their anchor::

    out[i, j] = sum_{a, b} w[a, b] * x[(i + a - ar) % n, (j + b - ac) % n]

which coincides with convolution for the symmetric Gaussian and average
kernels.  Every such operator is BCCB, hence diagonalised by the 2-D DFT.  The
DFT convention is numpy's: unnormalised forward ``fft2``, ``1/n**2``-scaled
``ifft2``.  A :func:`psf_spectrum` is the forward DFT of the operator's
impulse response, so ``apply_psf_periodic(x, k) == ifft2(S * fft2(x)).real``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .image import PathLike, as_image

__all__ = [
    "Kernel",
    "KernelError",
    "identity_kernel",
    "difference_kernel",
    "make_gaussian_kernel",
    "make_average_kernel",
    "read_kernel",
    "write_kernel",
    "grad_x",
    "grad_y",
    "grad_x_adjoint",
    "grad_y_adjoint",
    "apply_psf_periodic",
    "apply_spectrum",
    "psf_spectrum",
    "gaussian_noise",
    "degrade",
]


class KernelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Kernel:
    """Point-spread function with a 0-based ``anchor`` (row, col) marking its origin."""

    weights: np.ndarray
    anchor: tuple[int, int] = field(default=(0, 0))

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        if w.ndim != 2 or w.size == 0:
            raise KernelError(f"kernel weights must be a non-empty 2-D array, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise KernelError("kernel weights must be finite")
        ar, ac = (int(a) for a in self.anchor)
        if not (0 <= ar < w.shape[0] and 0 <= ac < w.shape[1]):
            raise KernelError(f"anchor {self.anchor} outside kernel of shape {w.shape}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "anchor", (ar, ac))

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def __eq__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return self.anchor == other.anchor and np.array_equal(self.weights, other.weights)

    __hash__ = None


def identity_kernel() -> Kernel:
    return Kernel(np.ones((1, 1)), (0, 0))


def difference_kernel(axis: int) -> Kernel:
    """Forward difference along ``axis`` (0: rows, i.e. grad_x; 1: columns, grad_y)."""
    if axis == 0:
        return Kernel(np.array([[-1.0], [1.0]]), (0, 0))
    if axis == 1:
        return Kernel(np.array([[-1.0, 1.0]]), (0, 0))
    raise ValueError(f"axis must be 0 or 1, got {axis}")


def make_gaussian_kernel(size: int, std: float) -> Kernel:
    """Normalised ``size x size`` Gaussian, centred (Matlab ``fspecial('gaussian')``)."""
    if int(size) != size or size < 1 or size % 2 == 0:
        raise KernelError(f"Gaussian kernel size must be a positive odd integer, got {size}")
    if not std > 0 or not math.isfinite(std):
        raise KernelError(f"Gaussian std must be positive and finite, got {std}")
    size = int(size)
    half = (size - 1) // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / (2.0 * std * std))
    return Kernel(w / w.sum(), (half, half))


def make_average_kernel(size: int) -> Kernel:
    """Uniform ``size x size`` box, anchored at 1-based ``(ceil(size/2), ceil(size/2))``."""
    if int(size) != size or size < 1:
        raise KernelError(f"average kernel size must be a positive integer, got {size}")
    size = int(size)
    c = (size + 1) // 2 - 1
    return Kernel(np.full((size, size), 1.0 / (size * size)), (c, c))


def read_kernel(path: PathLike) -> Kernel:
    """Parse the kernel text format.

    First line ``rows cols anchor_r anchor_c`` (anchor 1-based), then ``rows``
    lines of ``cols`` whitespace-separated reals.
    """
    with open(path) as fh:
        lines = [ln for ln in (raw.strip() for raw in fh) if ln]
    if not lines:
        raise KernelError(f"{path}: empty kernel file")
    head = lines[0].split()
    if len(head) != 4:
        raise KernelError(f"{path}: header must be 'rows cols anchor_r anchor_c'")
    try:
        rows, cols, ar, ac = (int(t) for t in head)
    except ValueError:
        raise KernelError(f"{path}: non-integer kernel header") from None
    if rows < 1 or cols < 1:
        raise KernelError(f"{path}: bad kernel size {rows}x{cols}")
    body = lines[1:]
    if len(body) != rows:
        raise KernelError(f"{path}: expected {rows} weight rows, found {len(body)}")
    try:
        w = np.array([[float(t) for t in ln.split()] for ln in body], dtype=np.float64)
    except ValueError:
        raise KernelError(f"{path}: non-numeric kernel weight") from None
    if w.shape != (rows, cols):
        raise KernelError(f"{path}: expected {cols} weights per row")
    return Kernel(w, (ar - 1, ac - 1))


def write_kernel(kernel: Kernel, path: PathLike) -> None:
    rows, cols = kernel.shape
    ar, ac = kernel.anchor
    out = [f"{rows} {cols} {ar + 1} {ac + 1}"]
    # repr() round-trips float64 exactly
    out += [" ".join(repr(float(v)) for v in row) for row in kernel.weights]
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def grad_x(img: np.ndarray) -> np.ndarray:
    """Periodic forward difference down the rows: ``f[i+1, j] - f[i, j]``."""
    img = np.asarray(img, dtype=np.float64)
    return np.roll(img, -1, axis=0) - img


def grad_y(img: np.ndarray) -> np.ndarray:
    """Periodic forward difference across the columns: ``f[i, j+1] - f[i, j]``."""
    img = np.asarray(img, dtype=np.float64)
    return np.roll(img, -1, axis=1) - img


def grad_x_adjoint(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    return np.roll(img, 1, axis=0) - img


def grad_y_adjoint(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    return np.roll(img, 1, axis=1) - img


def _check_fits(kernel: Kernel, n: int) -> None:
    if kernel.shape[0] > n or kernel.shape[1] > n:
        raise KernelError(f"kernel of shape {kernel.shape} is larger than the {n}x{n} image")


def apply_psf_periodic(img: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Circular correlation of ``img`` with ``kernel`` about its anchor."""
    img = as_image(img)
    _check_fits(kernel, img.shape[0])
    ar, ac = kernel.anchor
    out = np.zeros_like(img)
    for (a, b), w in np.ndenumerate(kernel.weights):
        if w != 0.0:
            out += w * np.roll(img, (ar - a, ac - b), axis=(0, 1))
    return out


def psf_spectrum(kernel: Kernel, n: int) -> np.ndarray:
    """DFT of the periodic impulse response of ``kernel`` on an ``n x n`` grid."""
    _check_fits(kernel, n)
    ar, ac = kernel.anchor
    rows, cols = kernel.shape
    ii = (ar - np.arange(rows)) % n
    jj = (ac - np.arange(cols)) % n
    h = np.zeros((n, n))
    np.add.at(h, (ii[:, None], jj[None, :]), kernel.weights)
    return np.fft.fft2(h)


def apply_spectrum(img: np.ndarray, spectrum: np.ndarray) -> np.ndarray:
    """Apply the BCCB operator with eigenvalues ``spectrum`` to ``img``."""
    return np.fft.ifft2(spectrum * np.fft.fft2(img)).real


# SplitMix64 constants
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(seed: int, count: int) -> np.ndarray:
    """Outputs 1..count of the SplitMix64 stream started at ``seed`` (mod 2**64)."""
    state = np.uint64(int(seed) % (1 << 64))
    z = (np.arange(1, count + 1, dtype=np.uint64) * _GAMMA) + state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def gaussian_noise(n: int, std: float, seed: int) -> np.ndarray:
    """``n x n`` field of i.i.d. N(0, std**2) samples, reproducible from ``seed``.

    Generator: SplitMix64 counter stream -> 53-bit uniforms -> Box-Muller.
    Consecutive pairs ``(u1, u2)`` of the stream give the normals
    ``r cos(2 pi u2), r sin(2 pi u2)`` with ``r = sqrt(-2 ln u1)`` and
    ``u1 in (0, 1]``.  Samples fill the image in column-stacked order.
    """
    if not std >= 0 or not math.isfinite(std):
        raise ValueError(f"noise std must be finite and nonnegative, got {std}")
    count = n * n
    pairs = (count + 1) // 2
    z = _splitmix64(seed, 2 * pairs).reshape(pairs, 2)
    scale = 2.0**-53
    u1 = ((z[:, 0] >> np.uint64(11)).astype(np.float64) + 1.0) * scale
    u2 = (z[:, 1] >> np.uint64(11)).astype(np.float64) * scale
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    normals = np.column_stack((r * np.cos(theta), r * np.sin(theta))).ravel()[:count]
    return std * normals.reshape((n, n), order="F")


def degrade(img: np.ndarray, kernel: Kernel, noise_std: float, seed: int) -> np.ndarray:
    """Blur periodically with ``kernel`` and add seeded white Gaussian noise."""
    blurred = apply_psf_periodic(img, kernel)
    if noise_std == 0:
        return blurred
    return blurred + gaussian_noise(blurred.shape[0], noise_std, seed)

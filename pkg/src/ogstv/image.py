"""Square grayscale images, box projection and PGM file I/O.

An image is an ``(n, n)`` float64 numpy array.  Pixel ``(i, j)`` (1-based row
``i``, column ``j``) is ``img[i - 1, j - 1]``; the stacked vector form lists the
columns one after another, so that pixel sits at linear index ``(j - 1) * n + i``
(1-based).  :func:`to_vector` and :func:`from_vector` convert between the two.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

PathLike = Union[str, os.PathLike]

__all__ = [
    "BoxBounds",
    "ImageError",
    "PgmError",
    "PgmHeaderError",
    "PgmMaxvalError",
    "NonSquareImageError",
    "as_image",
    "to_vector",
    "from_vector",
    "project_box",
    "load_pgm",
    "save_pgm",
    "quantize",
]


class ImageError(ValueError):
    """Invalid image data (wrong shape, non-finite entries)."""


class PgmError(ValueError):
    """Base class for PGM parse errors."""


class PgmHeaderError(PgmError):
    """Malformed or truncated PGM header/body."""


class PgmMaxvalError(PgmError):
    """maxval outside 1..255."""


class NonSquareImageError(PgmError):
    """PGM width and height differ."""


@dataclass(frozen=True)
class BoxBounds:
    """Closed intensity interval ``[lower, upper]``."""

    lower: float = 0.0
    upper: float = 255.0

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError("box bounds must be finite")
        if not self.lower < self.upper:
            raise ValueError(f"box lower bound {self.lower} must be < upper bound {self.upper}")


def as_image(x, name: str = "image") -> np.ndarray:
    """Validate ``x`` as a square finite image and return it as float64."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ImageError(f"{name} must be a non-empty square 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ImageError(f"{name} contains non-finite values")
    return arr


def to_vector(img: np.ndarray) -> np.ndarray:
    """Column-stacked vector of length n**2."""
    return np.asarray(img, dtype=np.float64).ravel(order="F")


def from_vector(data, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`to_vector`."""
    data = np.asarray(data, dtype=np.float64).ravel()
    if n is None:
        n = int(round(np.sqrt(data.size)))
    if n <= 0 or data.size != n * n:
        raise ImageError(f"vector of length {data.size} is not n**2 for n={n}")
    return data.reshape((n, n), order="F")


def project_box(img: np.ndarray, box: BoxBounds = BoxBounds()) -> np.ndarray:
    """Orthogonal projection onto ``[box.lower, box.upper]``, entrywise."""
    return np.clip(np.asarray(img, dtype=np.float64), box.lower, box.upper)


def quantize(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero, as stored in a PGM file."""
    clamped = np.clip(np.asarray(img, dtype=np.float64), 0.0, 255.0)
    # clamped values are nonnegative, so half-away-from-zero is floor(x + 0.5)
    return np.floor(clamped + 0.5).astype(np.uint8)


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*([^\s#]+)")


def _header_tokens(raw: bytes, count: int) -> tuple[list[bytes], int]:
    tokens = []
    pos = 0
    for _ in range(count):
        m = _TOKEN.match(raw, pos)
        if m is None:
            raise PgmHeaderError("truncated PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def _header_int(token: bytes, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise PgmHeaderError(f"bad {what} {token!r} in PGM header") from None
    return value


def load_pgm(path: PathLike) -> np.ndarray:
    """Read a square P5 (binary) or P2 (ASCII) PGM with maxval <= 255.

    Returns the intensities as float64 in ``[0, maxval]``.
    """
    with open(path, "rb") as fh:
        raw = fh.read()

    tokens, pos = _header_tokens(raw, 4)
    magic = tokens[0]
    if magic not in (b"P5", b"P2"):
        raise PgmHeaderError(f"unsupported magic number {magic!r}")
    width = _header_int(tokens[1], "width")
    height = _header_int(tokens[2], "height")
    maxval = _header_int(tokens[3], "maxval")
    if width <= 0 or height <= 0:
        raise PgmHeaderError(f"bad PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise PgmMaxvalError(f"maxval {maxval} not in 1..255")
    if width != height:
        raise NonSquareImageError(f"non-square image {width}x{height}")

    npix = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the raster
        if pos >= len(raw) or not raw[pos : pos + 1].isspace():
            raise PgmHeaderError("missing whitespace after maxval")
        body = raw[pos + 1 : pos + 1 + npix]
        if len(body) != npix:
            raise PgmHeaderError(f"expected {npix} raster bytes, found {len(body)}")
        values = np.frombuffer(body, dtype=np.uint8)
    else:
        rest = re.sub(rb"#[^\n]*", b"", raw[pos:]).split()
        if len(rest) < npix:
            raise PgmHeaderError(f"expected {npix} samples, found {len(rest)}")
        try:
            values = np.array([int(t) for t in rest[:npix]], dtype=np.int64)
        except ValueError:
            raise PgmHeaderError("non-integer sample in P2 raster") from None

    if values.max(initial=0) > maxval or values.min(initial=0) < 0:
        raise PgmHeaderError("sample value outside [0, maxval]")
    # PGM rasters are row-major
    return values.reshape(height, width).astype(np.float64)


def save_pgm(img: np.ndarray, path: PathLike) -> None:
    """Write ``img`` as a binary P5 PGM with maxval 255 (see :func:`quantize`)."""
    img = as_image(img)
    n = img.shape[0]
    payload = b"P5\n%d %d\n255\n" % (n, n) + quantize(img).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(payload)

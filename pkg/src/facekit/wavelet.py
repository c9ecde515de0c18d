"""Haar wavelet transform with the averaging normalisation.

One forward step maps adjacent pairs ``(s[2i], s[2i+1])`` to an average
``(s[2i] + s[2i+1]) / 2`` and a detail ``(s[2i] - s[2i+1]) / 2``; the inverse
recovers ``s[2i] = a + c`` and ``s[2i+1] = a - c``.  This is not the
orthonormal 1/sqrt(2) Haar, so coefficient-space distances are not pixel-space
distances, but the LL band keeps the image's intensity scale.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, LengthMismatch, NotDivisible, OddDimension, OddLength


@dataclass(eq=False)
class HaarStep:
    averages: np.ndarray
    coefficients: np.ndarray


@dataclass(eq=False)
class Subbands2D:
    """One level of a 2-D decomposition.

    ``lh`` is low-pass along rows and high-pass along columns, ``hl`` the
    reverse.
    """

    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray


@dataclass(eq=False)
class WaveletPyramid:
    level: int
    ll: np.ndarray


def _forward_axis(x: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    even = np.take(x, np.arange(0, x.shape[axis], 2), axis=axis)
    odd = np.take(x, np.arange(1, x.shape[axis], 2), axis=axis)
    return (even + odd) / 2.0, (even - odd) / 2.0


def _inverse_axis(avg: np.ndarray, det: np.ndarray, axis: int) -> np.ndarray:
    shape = list(avg.shape)
    shape[axis] *= 2
    out = np.empty(shape, dtype=np.float64)
    even = [slice(None)] * avg.ndim
    odd = [slice(None)] * avg.ndim
    even[axis] = slice(0, None, 2)
    odd[axis] = slice(1, None, 2)
    out[tuple(even)] = avg + det
    out[tuple(odd)] = avg - det
    return out


def haar_forward_1d(signal) -> HaarStep:
    s = np.asarray(signal, dtype=np.float64)
    if s.ndim != 1 or s.size < 2 or s.size % 2:
        raise OddLength(f"forward step needs an even length >= 2, got {s.size}")
    avg, det = _forward_axis(s, 0)
    return HaarStep(averages=avg, coefficients=det)


def haar_inverse_1d(step: HaarStep) -> np.ndarray:
    avg = np.asarray(step.averages, dtype=np.float64)
    det = np.asarray(step.coefficients, dtype=np.float64)
    if avg.shape != det.shape:
        raise LengthMismatch(f"{avg.size} averages vs {det.size} coefficients")
    return _inverse_axis(avg, det, 0)


def dwt2_level(image) -> Subbands2D:
    """Single 2-D level: Haar along every row, then along every column of both halves."""
    m = np.asarray(image, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] % 2 or m.shape[1] % 2 or 0 in m.shape:
        raise OddDimension(f"both dimensions must be even and nonzero, got {m.shape}")
    low, high = _forward_axis(m, 1)
    ll, lh = _forward_axis(low, 0)
    hl, hh = _forward_axis(high, 0)
    return Subbands2D(ll=ll, lh=lh, hl=hl, hh=hh)


def idwt2_level(bands: Subbands2D) -> np.ndarray:
    shapes = {np.shape(b) for b in (bands.ll, bands.lh, bands.hl, bands.hh)}
    if len(shapes) != 1:
        raise DimMismatch(f"subband shapes differ: {sorted(shapes)}")
    low = _inverse_axis(np.asarray(bands.ll, float), np.asarray(bands.lh, float), 0)
    high = _inverse_axis(np.asarray(bands.hl, float), np.asarray(bands.hh, float), 0)
    return _inverse_axis(low, high, 1)


def _check_divisible(shape, levels: int) -> None:
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    block = 2 ** levels
    if len(shape) != 2 or shape[0] % block or shape[1] % block or 0 in shape:
        raise NotDivisible(f"shape {tuple(shape)} is not divisible by 2**{levels}")


def dwt2_decompose(image, levels: int) -> tuple[np.ndarray, list[Subbands2D]]:
    """Full multilevel decomposition keeping every level's subbands.

    Returns the final LL and the per-level subbands, finest level first.
    """
    m = np.asarray(image, dtype=np.float64)
    _check_divisible(m.shape, levels)
    bands = []
    for _ in range(levels):
        step = dwt2_level(m)
        bands.append(step)
        m = step.ll
    return m, bands


def idwt2_reconstruct(ll: np.ndarray, bands: list[Subbands2D]) -> np.ndarray:
    m = np.asarray(ll, dtype=np.float64)
    for step in reversed(bands):
        m = idwt2_level(Subbands2D(ll=m, lh=step.lh, hl=step.hl, hh=step.hh))
    return m


def dwt2_multilevel(image, levels: int) -> WaveletPyramid:
    """Iterate on the running LL band; detail bands of every level are dropped."""
    m = np.asarray(image, dtype=np.float64)
    _check_divisible(m.shape, levels)
    for _ in range(levels):
        low, _ = _forward_axis(m, 1)
        m, _ = _forward_axis(low, 0)
    return WaveletPyramid(level=levels, ll=m)


def pack_pyramid(pyr: WaveletPyramid) -> bytes:
    """``level:u8, side:u16, side*side float64`` little-endian."""
    ll = np.asarray(pyr.ll, dtype="<f8")
    if ll.ndim != 2 or ll.shape[0] != ll.shape[1]:
        raise ValueError(f"LL band must be square, got {ll.shape}")
    return struct.pack("<BH", pyr.level, ll.shape[0]) + ll.tobytes()


def unpack_pyramid(buf: bytes, offset: int = 0) -> tuple[WaveletPyramid, int]:
    """Decode one record; returns the pyramid and the offset just past it."""
    if len(buf) - offset < 3:
        raise ValueError("truncated pyramid header")
    level, side = struct.unpack_from("<BH", buf, offset)
    offset += 3
    nbytes = side * side * 8
    if len(buf) - offset < nbytes:
        raise ValueError("truncated pyramid coefficients")
    ll = np.frombuffer(buf, dtype="<f8", count=side * side, offset=offset).astype(np.float64)
    return WaveletPyramid(level=level, ll=ll.reshape(side, side)), offset + nbytes

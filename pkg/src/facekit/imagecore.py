"""Raster containers, binary PPM/PGM codecs, colour conversion and resizing.

Images are thin wrappers around numpy arrays stored row-major:
``RgbImage.data`` has shape ``(height, width, 3)`` and dtype ``uint8``,
``GrayImage.data`` has shape ``(height, width)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MalformedHeader, TruncatedPixelData, UnsupportedMaxval, ZeroDimension

# sRGB primaries -> CIE XYZ, D65 illuminant
SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
# Reference white taken as the XYZ of sRGB (1, 1, 1) so that greys are exactly achromatic.
D65_WHITE = SRGB_TO_XYZ.sum(axis=1)

LAB_EPSILON = 216.0 / 24389.0
LAB_KAPPA = 24389.0 / 27.0

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(eq=False)
class RgbImage:
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError(f"RGB data must have shape (h, w, 3), got {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ZeroDimension("image must be at least 1x1")
        self.data = np.ascontiguousarray(data, dtype=np.uint8)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "RgbImage":
        values = np.asarray(values, dtype=np.uint8)
        if values.size != width * height * 3:
            raise ValueError("data length must equal width * height * 3")
        return cls(values.reshape(height, width, 3))


@dataclass(eq=False)
class GrayImage:
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError(f"gray data must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ZeroDimension("image must be at least 1x1")
        self.data = np.ascontiguousarray(data, dtype=np.uint8)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(eq=False)
class LabImage:
    L: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def width(self) -> int:
        return self.L.shape[1]

    @property
    def height(self) -> int:
        return self.L.shape[0]


# ---------------------------------------------------------------------------
# PPM / PGM

def _read_header(buf: bytes) -> tuple[bytes, int, int, int, int]:
    """Parse ``magic width height maxval`` and return them with the payload offset."""
    tokens = []
    pos = 0
    n = len(buf)
    while len(tokens) < 4:
        while pos < n and buf[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise MalformedHeader("header ends before width/height/maxval")
        if buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(buf[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    if pos >= n or not buf[pos:pos + 1].isspace():
        raise MalformedHeader("missing whitespace after maxval")
    pos += 1

    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise MalformedHeader(f"unsupported magic {magic!r}; expected P5 or P6")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedHeader(f"non-numeric header fields {tokens[1:]!r}") from None
    if width < 1 or height < 1:
        raise MalformedHeader(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedMaxval(f"maxval {maxval} not supported (must be 255)")
    return magic, width, height, maxval, pos


def _payload(buf: bytes) -> tuple[bytes, np.ndarray]:
    magic, width, height, _, offset = _read_header(buf)
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    raw = np.frombuffer(buf, dtype=np.uint8, count=min(need, len(buf) - offset), offset=offset)
    if raw.size < need:
        raise TruncatedPixelData(f"expected {need} bytes of pixel data, found {raw.size}")
    shape = (height, width, 3) if channels == 3 else (height, width)
    return magic, raw.reshape(shape).copy()


def decode_image(buf: bytes) -> RgbImage:
    """Decode binary PPM (P6) or PGM (P5) bytes; grey input is replicated into RGB."""
    magic, pixels = _payload(buf)
    if magic == b"P5":
        pixels = np.repeat(pixels[:, :, None], 3, axis=2)
    return RgbImage(pixels)


def decode_gray_image(buf: bytes) -> GrayImage:
    magic, pixels = _payload(buf)
    if magic == b"P6":
        return rgb_to_gray(RgbImage(pixels))
    return GrayImage(pixels)


def encode_ppm(img: RgbImage) -> bytes:
    return b"P6\n%d %d\n255\n" % (img.width, img.height) + img.data.tobytes()


def encode_pgm(img: GrayImage) -> bytes:
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.data.tobytes()


def read_image(path) -> RgbImage:
    return decode_image(Path(path).read_bytes())


def read_gray_image(path) -> GrayImage:
    return decode_gray_image(Path(path).read_bytes())


def write_ppm(path, img: RgbImage) -> None:
    Path(path).write_bytes(encode_ppm(img))


def write_pgm(path, img: GrayImage) -> None:
    Path(path).write_bytes(encode_pgm(img))


# ---------------------------------------------------------------------------
# colour

def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > LAB_EPSILON, np.cbrt(t), (LAB_KAPPA * t + 16.0) / 116.0)


def srgb_to_lab(img: RgbImage) -> LabImage:
    rgb = _srgb_to_linear(img.data.astype(np.float64) / 255.0)
    xyz = rgb @ SRGB_TO_XYZ.T
    f = _lab_f(xyz / D65_WHITE)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    L = np.clip(116.0 * fy - 16.0, 0.0, 100.0)
    return LabImage(L=L, a=500.0 * (fx - fy), b=200.0 * (fy - fz))


def _round_to_u8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def rgb_to_gray(img: RgbImage) -> GrayImage:
    """BT.601 luma, rounded half-up."""
    return GrayImage(_round_to_u8(img.data.astype(np.float64) @ LUMA_WEIGHTS))


def resize(img: GrayImage, out_w: int, out_h: int) -> GrayImage:
    """Bilinear resize with half-pixel centres and edge clamping."""
    if out_w < 1 or out_h < 1:
        raise ZeroDimension(f"target size {out_w}x{out_h} must be at least 1x1")
    if (out_w, out_h) == (img.width, img.height):
        return GrayImage(img.data.copy())
    src = img.data.astype(np.float64)

    def sample_positions(n_in, n_out):
        pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        pos = np.clip(pos, 0.0, n_in - 1)
        lo = np.floor(pos).astype(np.intp)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    x0, x1, fx = sample_positions(img.width, out_w)
    y0, y1, fy = sample_positions(img.height, out_h)
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy)[:, None] + bottom * fy[:, None]
    return GrayImage(_round_to_u8(out))


def crop(img: GrayImage, bbox: tuple[int, int, int, int]) -> GrayImage:
    """Crop to an inclusive ``(min_x, min_y, max_x, max_y)`` box."""
    x0, y0, x1, y1 = bbox
    return GrayImage(img.data[y0:y1 + 1, x0:x1 + 1])

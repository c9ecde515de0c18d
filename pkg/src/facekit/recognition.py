"""Intensity normalisation, LL-band templates and nearest-neighbour identification."""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadLevel,
    BlackImage,
    EmptyEnrollment,
    EmptyGallery,
    EmptyImage,
    GalleryFormatError,
    LevelMismatch,
    WrongDimensions,
)
from .facedetect import FACE_SIZE
from .imagecore import GrayImage
from .wavelet import dwt2_multilevel

MIN_LEVEL, MAX_LEVEL = 1, 5
GALLERY_MAGIC = b"FKGAL1"


@dataclass(frozen=True)
class NormalizationParams:
    reference_average: float
    test_average: float

    @property
    def factor(self) -> float:
        return self.reference_average / self.test_average


@dataclass(eq=False)
class Template:
    identity: str
    level: int
    coefficients: np.ndarray
    normalized: bool = False


@dataclass(eq=False)
class Gallery:
    entries: list[Template]
    reference_average: float
    # not persisted in the gallery file; callers restate it when loading
    normalized: bool = False

    @property
    def level(self) -> int:
        if not self.entries:
            raise EmptyGallery("gallery has no templates")
        return self.entries[0].level

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class MatchResult:
    identity: str
    distance: float
    runner_up_distance: float | None = None


def coefficient_count(level: int, size: int = FACE_SIZE) -> int:
    return (size >> level) ** 2


def average_intensity(img: GrayImage) -> float:
    if img.data.size == 0:
        raise EmptyImage("image has no pixels")
    return float(img.data.mean(dtype=np.float64))


def normalization_params(test: GrayImage, reference_average: float) -> NormalizationParams:
    return NormalizationParams(reference_average=float(reference_average),
                               test_average=average_intensity(test))


def normalize(test: GrayImage, reference_average: float) -> GrayImage:
    """Scale every pixel so the mean moves to ``reference_average``.

    Results are rounded half-up and clamped to [0, 255].
    """
    params = normalization_params(test, reference_average)
    if params.test_average <= 0:
        raise BlackImage("test image is entirely black; cannot normalise")
    scaled = test.data.astype(np.float64) * params.factor
    return GrayImage(np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8))


def _check_face(face: GrayImage) -> None:
    if (face.width, face.height) != (FACE_SIZE, FACE_SIZE):
        raise WrongDimensions(f"expected {FACE_SIZE}x{FACE_SIZE} face, got {face.width}x{face.height}")


def _check_level(level: int) -> None:
    if not MIN_LEVEL <= level <= MAX_LEVEL:
        raise BadLevel(f"level must be in [{MIN_LEVEL}, {MAX_LEVEL}], got {level}")


def extract_template(face: GrayImage, level: int, identity: str = "", normalized: bool = False) -> Template:
    _check_face(face)
    _check_level(level)
    ll = dwt2_multilevel(face.data, level).ll
    return Template(identity=identity, level=level, coefficients=ll.ravel(), normalized=normalized)


def euclidean_distance(t1: Template, t2: Template) -> float:
    if t1.level != t2.level or t1.coefficients.size != t2.coefficients.size:
        raise LevelMismatch(f"level {t1.level} vs {t2.level}")
    diff = t1.coefficients - t2.coefficients
    return float(math.sqrt(float(np.dot(diff, diff))))


def identify(probe: Template, gallery: Gallery) -> MatchResult:
    """Closed-set nearest neighbour over every enrolled template.

    Ties go to the earliest entry; the runner-up distance is the best
    distance among identities other than the winner.
    """
    if not gallery.entries:
        raise EmptyGallery("cannot identify against an empty gallery")
    if probe.level != gallery.level:
        raise LevelMismatch(f"probe level {probe.level} vs gallery level {gallery.level}")
    stack = np.stack([t.coefficients for t in gallery.entries])
    if stack.shape[1] != probe.coefficients.size:
        raise LevelMismatch("coefficient counts differ")
    diff = stack - probe.coefficients
    dists = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    best = int(np.argmin(dists))
    winner = gallery.entries[best].identity
    others = [d for t, d in zip(gallery.entries, dists) if t.identity != winner]
    return MatchResult(
        identity=winner,
        distance=float(dists[best]),
        runner_up_distance=float(min(others)) if others else None,
    )


def enroll(face_images, level: int = 3, use_normalization: bool = True) -> Gallery:
    """Build a gallery from ``(label, face)`` pairs, preserving order.

    The reference average is the mean of every enrolled image's average
    intensity.  With normalisation on, references are themselves scaled to
    that average so probes and references share one intensity target.
    """
    items = list(face_images)
    if not items:
        raise EmptyEnrollment("no reference images supplied")
    _check_level(level)
    for _, face in items:
        _check_face(face)
    reference_average = float(np.mean([average_intensity(face) for _, face in items]))
    entries = []
    for label, face in items:
        if use_normalization:
            face = normalize(face, reference_average)
        entries.append(extract_template(face, level, label, normalized=use_normalization))
    return Gallery(entries=entries, reference_average=reference_average, normalized=use_normalization)


def probe_template(face: GrayImage, gallery: Gallery, normalize_probe: bool | None = None) -> Template:
    """Template for a probe face, normalised to the gallery when requested.

    ``normalize_probe`` defaults to the gallery's own setting.
    """
    if normalize_probe is None:
        normalize_probe = gallery.normalized
    if normalize_probe:
        face = normalize(face, gallery.reference_average)
    return extract_template(face, gallery.level, normalized=normalize_probe)


# ---------------------------------------------------------------------------
# gallery file
#
# "FKGAL1" | level u8 | reference_average f64 | count u32
# then per entry: label_len u16 | label utf-8 | n u32 | n * f64   (all little-endian)

def gallery_to_bytes(gallery: Gallery) -> bytes:
    level = gallery.entries[0].level if gallery.entries else 0
    parts = [GALLERY_MAGIC, struct.pack("<BdI", level, gallery.reference_average, len(gallery.entries))]
    for t in gallery.entries:
        label = t.identity.encode("utf-8")
        coeffs = np.asarray(t.coefficients, dtype="<f8")
        parts.append(struct.pack("<H", len(label)))
        parts.append(label)
        parts.append(struct.pack("<I", coeffs.size))
        parts.append(coeffs.tobytes())
    return b"".join(parts)


def gallery_from_bytes(buf: bytes, normalized: bool = False) -> Gallery:
    if buf[:6] != GALLERY_MAGIC:
        raise GalleryFormatError("not a facekit gallery (bad magic)")
    try:
        level, ref_avg, count = struct.unpack_from("<BdI", buf, 6)
        pos = 6 + struct.calcsize("<BdI")
        entries = []
        for _ in range(count):
            (n_label,) = struct.unpack_from("<H", buf, pos)
            pos += 2
            label = buf[pos:pos + n_label].decode("utf-8")
            pos += n_label
            (n,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            if len(buf) < pos + 8 * n:
                raise GalleryFormatError("truncated coefficient block")
            coeffs = np.frombuffer(buf, dtype="<f8", count=n, offset=pos).astype(np.float64)
            pos += 8 * n
            entries.append(Template(label, level, coeffs, normalized))
    except struct.error as exc:
        raise GalleryFormatError(f"truncated gallery: {exc}") from None
    return Gallery(entries=entries, reference_average=ref_avg, normalized=normalized)


def save_gallery(gallery: Gallery, path) -> None:
    """Write atomically: a partial gallery never replaces ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(gallery_to_bytes(gallery))
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def load_gallery(path, normalized: bool = False) -> Gallery:
    return gallery_from_bytes(Path(path).read_bytes(), normalized)

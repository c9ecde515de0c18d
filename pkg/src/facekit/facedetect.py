"""Skin segmentation in L*a*b* chroma and hole-based frontal face selection."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateChannel, NoFaceFound
from .imagecore import GrayImage, LabImage, RgbImage, crop, resize, rgb_to_gray, srgb_to_lab

FACE_SIZE = 128
OTSU_BINS = 256

_EIGHT = np.ones((3, 3), dtype=bool)
_FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(eq=False)
class BinaryMask:
    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim > 2:
            raise ValueError(f"mask must be 1-D or 2-D, got shape {self.bits.shape}")

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class Component:
    label: int
    pixel_count: int
    hole_count: int
    bbox: tuple[int, int, int, int]
    # component pixels cropped to bbox
    region: np.ndarray = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class DetectionResult:
    face: GrayImage
    bbox: tuple[int, int, int, int]
    component: Component
    mask: BinaryMask = field(default=None, compare=False, repr=False)
    labels: np.ndarray = field(default=None, compare=False, repr=False)


def rescale_unit(values) -> np.ndarray:
    """Affinely map a channel onto [0, 1] using its own min and max."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if not hi > lo:
        raise DegenerateChannel("channel is constant")
    return (v - lo) / (hi - lo)


def bin_cutoffs(bins: int = OTSU_BINS) -> np.ndarray:
    return np.arange(bins) / (bins - 1)


def histogram_bins(unit_values, bins: int = OTSU_BINS) -> np.ndarray:
    """Bin index of each value in [0, 1].

    A value lands in bin ``k`` exactly when ``cutoff[k-1] < v <= cutoff[k]``
    with ``cutoff[k] = k / (bins - 1)``, so bins ``0..k`` are precisely the
    values that ``binarize(v, cutoff[k])`` sends to background.
    """
    return np.searchsorted(bin_cutoffs(bins)[:-1], unit_values, side="left")


def otsu_threshold(channel, bins: int = OTSU_BINS) -> float:
    """Otsu threshold of a channel after min/max rescaling to [0, 1].

    The returned threshold is a bin cutoff ``k / (bins - 1)``; the lowest
    cutoff wins ties. Comparisons are carried out on exact integers.
    """
    unit = rescale_unit(channel).ravel()
    hist = np.bincount(histogram_bins(unit, bins), minlength=bins)
    counts = [int(c) for c in np.cumsum(hist)]
    sums = [int(s) for s in np.cumsum(hist * np.arange(bins))]
    n, total = counts[-1], sums[-1]

    # between-class variance at cutoff k is proportional to
    # (n*S0 - n0*S)^2 / (n0 * n1); compare as cross-multiplied integers
    best_k, best_num, best_den = None, 0, 1
    for k in range(bins - 1):
        n0 = counts[k]
        n1 = n - n0
        if n0 == 0 or n1 == 0:
            continue
        num = (n * sums[k] - n0 * total) ** 2
        den = n0 * n1
        if best_k is None or num * best_den > best_num * den:
            best_k, best_num, best_den = k, num, den
    return float(bin_cutoffs(bins)[best_k])


def binarize(unit_values, t: float) -> BinaryMask:
    return BinaryMask(np.asarray(unit_values, dtype=np.float64) > t)


def _channel_mask(channel: np.ndarray) -> np.ndarray:
    try:
        unit = rescale_unit(channel)
    except DegenerateChannel:
        return np.zeros(channel.shape, dtype=bool)
    return binarize(unit, otsu_threshold(channel)).bits


def skin_mask(lab: LabImage) -> BinaryMask:
    """OR of the Otsu-binarised a* and b* planes; the lighter class is skin."""
    return BinaryMask(_channel_mask(lab.a) | _channel_mask(lab.b))


def label_components(mask: BinaryMask) -> tuple[np.ndarray, int]:
    """8-connected labels numbered in raster-scan order of first pixel."""
    raw, count = ndimage.label(mask.bits, structure=_EIGHT)
    if count == 0:
        return raw, 0
    flat = raw.ravel()
    found, first = np.unique(flat, return_index=True)
    order = [lab for _, lab in sorted(zip(first[found > 0], found[found > 0]))]
    remap = np.zeros(count + 1, dtype=raw.dtype)
    remap[order] = np.arange(1, count + 1)
    return remap[raw], count


def connected_components(mask: BinaryMask) -> list[Component]:
    labels, _ = label_components(mask)
    return _components_from_labels(labels)


def _components_from_labels(labels: np.ndarray) -> list[Component]:
    comps = []
    for idx, slc in enumerate(ndimage.find_objects(labels), start=1):
        region = labels[slc] == idx
        ys, xs = slc
        comps.append(Component(
            label=idx,
            pixel_count=int(region.sum()),
            hole_count=0,
            bbox=(xs.start, ys.start, xs.stop - 1, ys.stop - 1),
            region=region,
        ))
    return comps


def _region_of(mask: BinaryMask, comp: Component) -> np.ndarray:
    if comp.region is not None:
        return comp.region
    # recover the component by relabelling its bbox window
    x0, y0, x1, y1 = comp.bbox
    window = mask.bits[y0:y1 + 1, x0:x1 + 1]
    labels, _ = ndimage.label(window, structure=_EIGHT)
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    return labels == int(np.argmax(sizes))


def count_holes(mask: BinaryMask, comp: Component) -> int:
    """Number of 4-connected background regions enclosed by the component."""
    x0, y0, x1, y1 = comp.bbox
    if x1 - x0 < 2 or y1 - y0 < 2:
        return 0
    region = _region_of(mask, comp)
    background = ~np.pad(region, 1, constant_values=False)
    labels, count = ndimage.label(background, structure=_FOUR)
    # the padding frame joins every border-touching region into one label
    return count - 1


def with_holes(mask: BinaryMask, comps: list[Component]) -> list[Component]:
    return [dataclasses.replace(c, hole_count=count_holes(mask, c)) for c in comps]


def select_face(components: list[Component]) -> Component:
    holed = [c for c in components if c.hole_count >= 1]
    if not holed:
        raise NoFaceFound("no skin region contains a hole")
    return min(holed, key=lambda c: (-c.pixel_count, c.label))


def detect_face(img: RgbImage, size: int = FACE_SIZE) -> DetectionResult:
    mask = skin_mask(srgb_to_lab(img))
    labels, _ = label_components(mask)
    face = select_face(with_holes(mask, _components_from_labels(labels)))
    gray = crop(rgb_to_gray(img), face.bbox)
    return DetectionResult(
        face=resize(gray, size, size),
        bbox=face.bbox,
        component=face,
        mask=mask,
        labels=labels,
    )


def mask_to_gray(mask: BinaryMask) -> GrayImage:
    return GrayImage(mask.bits.astype(np.uint8) * 255)


def labels_to_gray(labels: np.ndarray) -> GrayImage:
    """Spread component labels over 1..255 so neighbours are distinguishable."""
    out = np.zeros(labels.shape, dtype=np.uint8)
    fg = labels > 0
    out[fg] = 1 + (labels[fg] * 97) % 255
    return GrayImage(out)

"""Deterministic synthetic portraits for tests, demos and desk-scale evaluation.

A portrait is a skin-tone ellipse carrying dark eye, brow and mouth patches
(these become holes in the skin mask) on a cool-toned background.  Each
identity fixes the facial layout and skin tone; individual shots vary the
placement, scale, background and lighting.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NoFaceFound
from .facedetect import detect_face
from .imagecore import GrayImage, RgbImage, write_pgm, write_ppm

# near-neutral or bluish: a* within a few units of 0 and b* <= 0, like the features
BACKGROUNDS = [
    (90, 110, 130),
    (128, 128, 128),
    (60, 70, 85),
    (150, 165, 175),
    (70, 90, 110),
    (180, 185, 195),
    (45, 50, 60),
    (110, 125, 150),
    (85, 100, 100),
    (160, 160, 170),
]
FEATURE_COLOR = (30, 30, 38)


@dataclass(frozen=True)
class Identity:
    label: str
    skin: tuple[float, float, float]
    aspect: float
    eye_y: float
    eye_dx: float
    eye_rx: float
    eye_ry: float
    brow_gap: float
    brow_h: float
    mouth_y: float
    mouth_w: float
    mouth_h: float
    nose_len: float
    shade_freq: float
    shade_phase: float


@dataclass(frozen=True)
class Portrait:
    image: RgbImage
    face_bbox: tuple[int, int, int, int]
    decoy_bbox: tuple[int, int, int, int] | None = None


def random_identity(rng: np.random.Generator, label: str) -> Identity:
    base = np.array([230.0, 165.0, 130.0]) * rng.uniform(0.78, 1.05)
    return Identity(
        label=label,
        skin=tuple(np.clip(base, 0, 250)),
        aspect=rng.uniform(1.15, 1.45),
        eye_y=rng.uniform(-0.32, -0.12),
        eye_dx=rng.uniform(0.28, 0.45),
        eye_rx=rng.uniform(0.10, 0.17),
        eye_ry=rng.uniform(0.06, 0.11),
        brow_gap=rng.uniform(0.08, 0.16),
        brow_h=rng.uniform(0.035, 0.06),
        mouth_y=rng.uniform(0.38, 0.55),
        mouth_w=rng.uniform(0.22, 0.42),
        mouth_h=rng.uniform(0.05, 0.11),
        nose_len=rng.uniform(0.15, 0.3),
        shade_freq=rng.uniform(0.6, 1.6),
        shade_phase=rng.uniform(0, 2 * np.pi),
    )


def make_identities(n: int, seed: int = 0) -> list[Identity]:
    rng = np.random.default_rng(seed)
    return [random_identity(rng, f"id{i:02d}") for i in range(n)]


def _background(rng, width, height, color=None) -> np.ndarray:
    if color is None:
        color = BACKGROUNDS[rng.integers(len(BACKGROUNDS))]
    yy, xx = np.mgrid[0:height, 0:width]
    angle = rng.uniform(0, 2 * np.pi)
    ramp = (np.cos(angle) * xx / width + np.sin(angle) * yy / height)
    gain = 1.0 + rng.uniform(0.0, 0.25) * (ramp - ramp.mean())
    return np.asarray(color, dtype=np.float64)[None, None, :] * gain[..., None]


def render_portrait(
    identity: Identity,
    rng: np.random.Generator,
    width: int = 640,
    height: int = 480,
    *,
    face_rx: float | None = None,
    center: tuple[float, float] | None = None,
    background=None,
    lighting: float = 1.0,
    noise_sigma: float = 3.0,
    decoy: bool = False,
) -> Portrait:
    """Draw one shot of ``identity``; returns the image and the true face extent.

    Noise and the optional hand decoy come from their own child streams of
    ``rng``, so the same seed gives the same face and noise with or without
    the decoy.
    """
    noise_rng, hand_rng = rng.spawn(2)
    canvas = _background(rng, width, height, background)

    rx = face_rx if face_rx is not None else rng.uniform(0.10, 0.15) * width
    ry = rx * identity.aspect
    if center is None:
        cx = rng.uniform(rx + 4, width - rx - 4)
        cy = rng.uniform(ry + 4, height - ry - 4)
    else:
        cx, cy = center

    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    u = (xx - cx) / rx
    v = (yy - cy) / ry
    face = u ** 2 + v ** 2 <= 1.0

    skin = np.asarray(identity.skin)
    shade = 1.0 + 0.12 * np.sin(identity.shade_freq * np.pi * u + identity.shade_phase) * np.cos(
        identity.shade_freq * np.pi * v)
    nose = (np.abs(u) < 0.08) & (v > identity.eye_y + 0.05) & (v < identity.eye_y + 0.05 + identity.nose_len)
    shade = np.where(nose, shade * 0.82, shade)
    canvas[face] = skin * shade[face][:, None]

    features = np.zeros_like(face)
    for side in (-1, 1):
        ex = side * identity.eye_dx
        features |= ((u - ex) / identity.eye_rx) ** 2 + ((v - identity.eye_y) / identity.eye_ry) ** 2 <= 1
        by = identity.eye_y - identity.eye_ry - identity.brow_gap
        features |= (np.abs(u - ex) <= identity.eye_rx * 1.2) & (np.abs(v - by) <= identity.brow_h / 2)
    features |= ((u / (identity.mouth_w / 2)) ** 2 + ((v - identity.mouth_y) / (identity.mouth_h / 2)) ** 2) <= 1
    canvas[features & face] = FEATURE_COLOR

    decoy_bbox = None
    if decoy:
        # a solid skin rectangle on the wider side of the face, 4 px clear of it
        hw = hand_rng.uniform(0.45, 0.6) * rx
        hh = min(hand_rng.uniform(0.6, 0.8) * ry, height / 2 - 4)
        left_room, right_room = cx - rx - 4, width - (cx + rx) - 4
        if left_room >= right_room:
            lo, hi = hw + 2, cx - rx - 4 - hw
        else:
            lo, hi = cx + rx + 4 + hw, width - hw - 3
        hx = hand_rng.uniform(lo, max(lo, hi))
        hy = hand_rng.uniform(hh + 2, height - hh - 3)
        hand = (np.abs(xx - hx) <= hw) & (np.abs(yy - hy) <= hh) & ~face
        canvas[hand] = skin
        ys, xs = np.nonzero(hand)
        decoy_bbox = (int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))

    canvas = canvas * lighting
    if noise_sigma > 0:
        canvas = canvas + noise_rng.normal(0.0, noise_sigma, canvas.shape)
    pixels = np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8)

    ys, xs = np.nonzero(face)
    bbox = (int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))
    return Portrait(image=RgbImage(pixels), face_bbox=bbox, decoy_bbox=decoy_bbox)


def perturb(pixels: np.ndarray, sigma: float, rng: np.random.Generator, gain: float = 1.0) -> np.ndarray:
    """Global gain then additive Gaussian noise on an 8-bit raster, re-quantised."""
    values = pixels.astype(np.float64) * gain
    if sigma > 0:
        values = values + rng.normal(0.0, sigma, values.shape)
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def add_noise(img: RgbImage, sigma: float, rng: np.random.Generator, gain: float = 1.0) -> RgbImage:
    return RgbImage(perturb(img.data, sigma, rng, gain))


def _clean_face(person: Identity, rng: np.random.Generator, width: int, height: int):
    """Render shots until detection succeeds; returns the portrait and the 128x128 face."""
    for _ in range(20):
        shot = render_portrait(person, rng, width, height, lighting=rng.uniform(0.9, 1.1))
        try:
            return shot, detect_face(shot.image).face
        except NoFaceFound:
            continue
    raise NoFaceFound(f"could not render a detectable shot of {person.label}")


def write_dataset(
    out_dir,
    *,
    identities: int = 10,
    refs: int = 5,
    probes: int = 5,
    sigma: float = 10.0,
    gain_range: tuple[float, float] | None = None,
    seed: int = 0,
    cropped: bool = True,
    width: int = 320,
    height: int = 240,
) -> Path:
    """Render a reference/probe dataset plus a ``role<TAB>label<TAB>path`` manifest.

    Probe ``j`` of an identity is reference ``j % refs`` with additive noise
    of standard deviation ``sigma`` (and a random global gain drawn from
    ``gain_range`` when given).  With ``cropped`` the files are the detected
    128x128 grey faces (PGM); otherwise whole portraits (PPM) and the noise is
    applied to the portrait.  Returns the manifest path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    people = make_identities(identities, seed=seed)
    lines = []
    for person in people:
        shots = []
        for j in range(refs):
            if cropped:
                _, face = _clean_face(person, rng, width, height)
                path = out / f"{person.label}_ref{j}.pgm"
                write_pgm(path, face)
                shots.append(face.data)
            else:
                shot = render_portrait(person, rng, width, height, lighting=rng.uniform(0.9, 1.1))
                path = out / f"{person.label}_ref{j}.ppm"
                write_ppm(path, shot.image)
                shots.append(shot.image.data)
            lines.append(f"ref\t{person.label}\t{path.name}")
        for j in range(probes):
            gain = 1.0 if gain_range is None else rng.uniform(*gain_range)
            pixels = perturb(shots[j % refs], sigma, rng, gain)
            if cropped:
                path = out / f"{person.label}_probe{j}.pgm"
                write_pgm(path, GrayImage(pixels))
            else:
                path = out / f"{person.label}_probe{j}.ppm"
                write_ppm(path, RgbImage(pixels))
            lines.append(f"probe\t{person.label}\t{path.name}")
    manifest = out / "manifest.tsv"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest

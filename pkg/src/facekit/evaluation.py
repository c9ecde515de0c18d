"""Closed-set identification experiments: rank-1 rate per DWT level and arm."""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DatasetError, EmptyReport, FacekitError
from .facedetect import FACE_SIZE, detect_face
from .imagecore import GrayImage, read_image, resize, rgb_to_gray
from .recognition import coefficient_count, enroll, identify, probe_template

log = logging.getLogger(__name__)

ARMS = ("raw", "normalized")
DEFAULT_LEVELS = (1, 2, 3, 4, 5)


@dataclass
class Dataset:
    identities: list[str]
    references: dict[str, list[Path]]
    probes: dict[str, list[Path]]

    def reference_items(self) -> list[tuple[str, Path]]:
        return [(label, p) for label in self.identities for p in self.references.get(label, [])]

    def probe_items(self) -> list[tuple[str, Path]]:
        return [(label, p) for label in self.identities for p in self.probes.get(label, [])]


@dataclass(frozen=True)
class EvalRow:
    level: int
    coefficients: int
    arm: str
    correct: int
    total: int

    @property
    def rate(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass
class EvalReport:
    rows: list[EvalRow]
    errors: list[str] = field(default_factory=list)

    def rate(self, level: int, arm: str) -> float:
        for row in self.rows:
            if row.level == level and row.arm == arm:
                return row.rate
        raise KeyError((level, arm))

    def levels(self) -> list[int]:
        return sorted({r.level for r in self.rows})

    def arms(self) -> list[str]:
        return [a for a in ARMS if any(r.arm == a for r in self.rows)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["level", "coeffs", "arm", "correct", "total", "rate"])
        for r in self.rows:
            writer.writerow([r.level, r.coefficients, r.arm, r.correct, r.total, f"{r.rate:.3f}"])
        return buf.getvalue()

    def format_table(self) -> str:
        arms = self.arms()
        header = ["Level", "Coefficients"] + [f"Rate ({a})" for a in arms]
        lines = [header]
        for level in self.levels():
            cells = [f"Level {level}", str(coefficient_count(level))]
            cells += [f"{self.rate(level, a) * 100:.1f}%" for a in arms]
            lines.append(cells)
        widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
        return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in lines)


def read_manifest(path) -> Dataset:
    """Parse ``role<TAB>label<TAB>path`` lines; relative paths resolve against the manifest."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read manifest {path}: {exc}") from None
    identities, refs, probes = [], {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DatasetError(f"{path}:{lineno}: expected role<TAB>label<TAB>path")
        role, label, item = (p.strip() for p in parts)
        if role not in ("ref", "probe"):
            raise DatasetError(f"{path}:{lineno}: unknown role {role!r}")
        if label not in refs:
            identities.append(label)
            refs[label], probes[label] = [], []
        item_path = Path(item)
        if not item_path.is_absolute():
            item_path = path.parent / item_path
        (refs if role == "ref" else probes)[label].append(item_path)
    return Dataset(identities=identities, references=refs, probes=probes)


def thread_count() -> int:
    try:
        n = int(os.environ.get("FACEKIT_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def load_face(path, precropped: bool = False) -> GrayImage:
    """Read an image and return the 128x128 grey face it contributes."""
    img = read_image(path)
    if precropped:
        gray = rgb_to_gray(img)
        if (gray.width, gray.height) != (FACE_SIZE, FACE_SIZE):
            gray = resize(gray, FACE_SIZE, FACE_SIZE)
        return gray
    return detect_face(img).face


def _load_all(items, precropped, threads):
    def work(item):
        label, path = item
        try:
            return load_face(path, precropped), None
        except (OSError, FacekitError) as exc:
            return None, f"{path}: {type(exc).__name__}: {exc}"

    if threads <= 1:
        return [work(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, items))


def run_experiment(
    dataset: Dataset,
    levels=DEFAULT_LEVELS,
    arms=ARMS,
    precropped: bool = False,
    threads: int | None = None,
) -> EvalReport:
    """Enroll references and identify every probe, per level and per arm.

    Unreadable or undetectable items are logged in ``report.errors``; a bad
    probe counts as incorrect and a bad reference is left out of the gallery.
    """
    threads = thread_count() if threads is None else threads
    ref_items = dataset.reference_items()
    probe_items = dataset.probe_items()
    errors = []

    refs = []
    for (label, _), (face, err) in zip(ref_items, _load_all(ref_items, precropped, threads)):
        if err:
            errors.append(f"ref {err}")
        else:
            refs.append((label, face))
    probes = []
    for (label, _), (face, err) in zip(probe_items, _load_all(probe_items, precropped, threads)):
        if err:
            errors.append(f"probe {err}")
        probes.append((label, face))
    for msg in errors:
        log.warning("%s", msg)

    rows = []
    for level in levels:
        for arm in arms:
            normalized = arm == "normalized"
            correct = 0
            if refs:
                gallery = enroll(refs, level, use_normalization=normalized)
                for label, face in probes:
                    if face is None:
                        continue
                    try:
                        match = identify(probe_template(face, gallery, normalized), gallery)
                    except FacekitError as exc:
                        errors.append(f"probe {label}: {type(exc).__name__}: {exc}")
                        continue
                    correct += match.identity == label
            rows.append(EvalRow(level, coefficient_count(level), arm, correct, len(probes)))
    return EvalReport(rows=rows, errors=errors)


def best_level(report: EvalReport) -> int:
    """Level with the highest normalised-arm rate; ties go to the smaller level."""
    if not report.rows:
        raise EmptyReport("report has no rows")
    arm = "normalized" if any(r.arm == "normalized" for r in report.rows) else report.rows[0].arm
    rows = [r for r in report.rows if r.arm == arm]
    return min(rows, key=lambda r: (-r.rate, r.level)).level


def write_csv(report: EvalReport, path) -> None:
    Path(path).write_text(report.to_csv())

"""facekit command line.

Exit status: 0 success, 1 I/O or format error, 2 no face found.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import FacekitError, NoFaceFound
from .evaluation import DEFAULT_LEVELS, best_level, load_face, read_manifest, run_experiment, write_csv
from .facedetect import detect_face, labels_to_gray, mask_to_gray
from .imagecore import read_image, write_pgm
from .recognition import MAX_LEVEL, MIN_LEVEL, enroll, identify, load_gallery, probe_template, save_gallery

EXIT_OK, EXIT_ERROR, EXIT_NO_FACE = 0, 1, 2

log = logging.getLogger("facekit")


class _Parser(argparse.ArgumentParser):
    # usage errors are format errors, keep 2 reserved for "no face"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _level(text: str) -> int:
    value = int(text)
    if not MIN_LEVEL <= value <= MAX_LEVEL:
        raise argparse.ArgumentTypeError(f"level must be in {MIN_LEVEL}..{MAX_LEVEL}")
    return value


def _levels(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(_level(lo), _level(hi) + 1))
        elif part:
            out.append(_level(part))
    if not out:
        raise argparse.ArgumentTypeError("no levels given")
    return out


def cmd_detect(args) -> int:
    path = Path(args.image)
    img = read_image(path)
    try:
        result = detect_face(img)
    except NoFaceFound as exc:
        print(f"{path}: no face found ({exc})", file=sys.stderr)
        return EXIT_NO_FACE
    out_dir = Path(args.out_dir) if args.out_dir else path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    face_path = out_dir / f"{path.stem}.face.pgm"
    write_pgm(face_path, result.face)
    if args.debug_dir:
        debug = Path(args.debug_dir)
        debug.mkdir(parents=True, exist_ok=True)
        write_pgm(debug / f"{path.stem}.mask.pgm", mask_to_gray(result.mask))
        write_pgm(debug / f"{path.stem}.labels.pgm", labels_to_gray(result.labels))
        from .plotting import plot_detection

        plot_detection(img, result, debug / f"{path.stem}.detect.png")
    x0, y0, x1, y1 = result.bbox
    print(f"{face_path}\t{x0}\t{y0}\t{x1}\t{y1}\t{result.component.hole_count}")
    return EXIT_OK


def cmd_enroll(args) -> int:
    dataset = read_manifest(args.manifest)
    items = dataset.reference_items()
    if not items:
        print(f"{args.manifest}: no ref entries", file=sys.stderr)
        return EXIT_ERROR
    faces = []
    for label, path in items:
        try:
            faces.append((label, load_face(path, args.precropped)))
        except NoFaceFound as exc:
            print(f"{path}: no face found ({exc})", file=sys.stderr)
            return EXIT_NO_FACE
    gallery = enroll(faces, args.level, use_normalization=args.normalize)
    save_gallery(gallery, args.gallery)
    print(f"templates\t{len(gallery)}\treference_average\t{gallery.reference_average:.4f}")
    return EXIT_OK


def cmd_identify(args) -> int:
    gallery = load_gallery(args.gallery, normalized=args.normalize)
    try:
        face = load_face(args.image, args.precropped)
    except NoFaceFound as exc:
        print(f"{args.image}: no face found ({exc})", file=sys.stderr)
        return EXIT_NO_FACE
    match = identify(probe_template(face, gallery), gallery)
    runner_up = "-" if match.runner_up_distance is None else repr(match.runner_up_distance)
    print(f"{match.identity}\t{match.distance!r}\t{runner_up}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    dataset = read_manifest(args.manifest)
    arms = ("raw", "normalized") if args.normalize else ("raw",)
    report = run_experiment(dataset, args.levels, arms, precropped=args.precropped)
    print(report.format_table())
    print(f"best level\t{best_level(report)}")
    for msg in report.errors:
        print(f"warning: {msg}", file=sys.stderr)
    if args.csv:
        csv_path = Path(args.csv)
        write_csv(report, csv_path)
        if not args.no_figure:
            from .plotting import plot_report

            plot_report(report, csv_path.with_suffix(".png"))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import write_dataset

    manifest = write_dataset(
        args.out_dir,
        identities=args.identities,
        refs=args.refs,
        probes=args.probes,
        sigma=args.sigma,
        seed=args.seed,
        cropped=not args.full_frame,
    )
    print(manifest)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="facekit", description="Face detection and Haar-DWT face recognition.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def norm_flag(p):
        p.add_argument("--no-normalize", dest="normalize", action="store_false",
                       help="skip mean-intensity normalisation")

    def precropped_flag(p):
        p.add_argument("--precropped", action="store_true",
                       help="inputs are already cropped faces; skip detection")

    p = sub.add_parser("detect", help="extract the 128x128 face from an image")
    p.add_argument("image")
    p.add_argument("--out-dir", help="where to write <stem>.face.pgm (default: next to the input)")
    p.add_argument("--debug-dir", help="also write skin mask, component labels and a figure")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("enroll", help="build a gallery from the ref rows of a manifest")
    p.add_argument("manifest")
    p.add_argument("--gallery", required=True)
    p.add_argument("--level", type=_level, default=3)
    norm_flag(p)
    precropped_flag(p)
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("identify", help="print the nearest enrolled identity")
    p.add_argument("image")
    p.add_argument("--gallery", required=True)
    norm_flag(p)
    precropped_flag(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("evaluate", help="rank-1 rate per level, raw and normalised")
    p.add_argument("manifest")
    p.add_argument("--levels", type=_levels, default=list(DEFAULT_LEVELS))
    p.add_argument("--csv", help="write the report as CSV (and a PNG chart beside it)")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG chart")
    norm_flag(p)
    precropped_flag(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic reference/probe dataset")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--identities", type=int, default=10)
    p.add_argument("--refs", type=int, default=5)
    p.add_argument("--probes", type=int, default=5)
    p.add_argument("--sigma", type=float, default=10.0)
    p.add_argument("--full-frame", action="store_true",
                   help="write whole portraits instead of cropped faces")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NoFaceFound as exc:
        print(f"error: no face found ({exc})", file=sys.stderr)
        return EXIT_NO_FACE
    except (OSError, FacekitError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

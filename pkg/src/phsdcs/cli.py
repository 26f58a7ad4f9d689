"""Command-line front end.

Subcommands: ``mask``, ``measure``, ``reconstruct``, ``evaluate``, ``compare``.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import io as pio
from .core import Image, NumericalError, psnr
from .pipeline import RunConfig, default_mask, psnr_deltas, run_grid
from .sensing import measure, radial_mask

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("phsdcs")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _add_mask_args(p, size=False):
    if size:
        p.add_argument("--size", type=_positive_int, required=True, help="grid size n (power of two)")
    p.add_argument("--lines", type=_positive_int, default=50, help="radial lines (default: %(default)s)")
    p.add_argument("--points-per-line", "--points", dest="points_per_line", type=_positive_int,
                   default=100, help="samples per line (default: %(default)s)")
    p.add_argument("--hermitian", action=argparse.BooleanOptionalAction, default=True,
                   help="add conjugate-symmetric indices (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default: %(default)s)")


def _add_input_args(p):
    p.add_argument("--input", required=True, help="PGM (P5) or FITS image")
    p.add_argument("--transpose", action="store_true", help="swap the t and y axes")
    p.add_argument("--crop", type=_positive_int, default=None,
                   help="center-crop to at most this power-of-two size")
    p.add_argument("--mask", default=None, help="mask file (overrides --lines/--points-per-line)")


def _add_run_args(p, basis_default="both"):
    _add_input_args(p)
    _add_mask_args(p)
    p.add_argument("--output-dir", "--out", dest="output_dir", required=True)
    p.add_argument("--basis", choices=("phsd", "daub2d", "both"), default=basis_default,
                   help="sparsifying basis (default: %(default)s)")
    p.add_argument("--order", type=_positive_int, default=2, help="wavelet order p (default: %(default)s)")
    p.add_argument("--levels", type=_nonneg_int, default=4, help="decomposition depth (default: %(default)s)")
    p.add_argument("--y-scale", type=_positive_float, default=1.0,
                   help="scale of the Fourier exponent (default: %(default)s)")
    p.add_argument("--solver", choices=("bp", "lasso", "both"), default="both",
                   help="solver (default: %(default)s)")
    p.add_argument("--mu", type=_positive_float, default=1.0, help="Lasso penalty (default: %(default)s)")
    p.add_argument("--gamma", type=_positive_float, default=100.0,
                   help="basis pursuit prox scale (default: %(default)s)")
    p.add_argument("--iterations", type=_positive_int, default=10, help="solver iterations (default: %(default)s)")
    p.add_argument("--timing", action="store_true",
                   help="record wall time in the CSV (makes reports non-reproducible)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phsdcs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mask", help="write a radial-line Fourier mask")
    _add_mask_args(p, size=True)
    p.add_argument("--output", required=True, help="mask file to write")

    p = sub.add_parser("measure", help="measure an image through a mask")
    _add_input_args(p)
    _add_mask_args(p)
    p.add_argument("--output", required=True, help="measurement file to write")

    p = sub.add_parser("reconstruct", help="CS reconstruction with the selected bases/solvers")
    _add_run_args(p, basis_default="phsd")

    p = sub.add_parser("evaluate", help="PSNR between two images")
    p.add_argument("reference")
    p.add_argument("test")

    p = sub.add_parser("compare", help="PHSD vs Daubechies under one shared mask")
    _add_run_args(p)
    return parser


def _run_config(args) -> RunConfig:
    return RunConfig(
        input=args.input, output_dir=args.output_dir, basis=args.basis, order=args.order,
        levels=args.levels, y_scale=args.y_scale, lines=args.lines,
        points_per_line=args.points_per_line, hermitian=args.hermitian, mask=args.mask,
        solver=args.solver, mu=args.mu, gamma=args.gamma, iterations=args.iterations,
        transpose=args.transpose, seed=args.seed, crop=args.crop, timing=args.timing,
    )


def _load(args):
    img, offset = pio.read_image(args.input, args.crop)
    crop = "" if offset == (0, 0) and args.crop is None else f"{offset[0]}:{offset[1]}:{img.height}x{img.width}"
    if args.transpose:
        img = Image(img.pixels.T, img.bit_depth)
    return img, crop


def _load_mask(args, img):
    if args.mask:
        with open(args.mask, "rb") as fh:
            mask = pio.read_mask(fh.read())
        if mask.dims != img.shape:
            raise ValueError(f"mask dims {mask.dims} do not match image {img.shape}")
        return mask
    return default_mask(img, args)


def _write(path, data: bytes):
    with open(path, "wb") as fh:
        fh.write(data)


def cmd_mask(args) -> int:
    mask = radial_mask(args.size, args.lines, args.points_per_line, args.hermitian, args.seed)
    _write(args.output, pio.write_mask(mask))
    print(f"M = {mask.m}")
    return EXIT_OK


def cmd_measure(args) -> int:
    img, _ = _load(args)
    mask = _load_mask(args, img)
    meas = measure(img, mask)
    _write(args.output, pio.write_measurements(meas))
    print(f"M = {mask.m}  mask_id = {mask.mask_id}")
    return EXIT_OK


def _stem(path):
    return os.path.splitext(os.path.basename(path))[0]


def _run(args, csv_name, with_delta):
    cfg = _run_config(args)
    img, crop = _load(args)
    mask = _load_mask(args, img)
    os.makedirs(cfg.output_dir, exist_ok=True)
    _write(os.path.join(cfg.output_dir, "mask.txt"), pio.write_mask(mask))

    image_id = _stem(cfg.input)
    runs = run_grid(img, mask, cfg, image_id, crop)
    for run in runs:
        if run.image is None:
            continue
        stem = f"{image_id}_{run.report.basis_tag}_{run.report.method}"
        out = run.image.pixels.T if cfg.transpose else run.image.pixels
        _write(os.path.join(cfg.output_dir, stem + ".pgm"), pio.write_pgm(Image(out, run.image.bit_depth)))
        _write(os.path.join(cfg.output_dir, stem + "_trace.csv"),
               pio.write_trace_csv(run.result.objective_trace, run.result.residual_trace))
        print(f"{run.report.basis_tag:10s} {run.report.method:6s} M={mask.m} "
              f"PSNR={pio.format_value(round(run.report.psnr_db, 4))} dB")

    reports = [r.report for r in runs]
    path = os.path.join(cfg.output_dir, csv_name)
    if with_delta:
        _write(path, pio.write_report_csv(reports, {"psnr_delta_db": psnr_deltas(runs)}))
    else:
        exists = os.path.exists(path)
        with open(path, "ab") as fh:
            fh.write(pio.write_report_csv(reports, header=not exists))

    failed = [r.report.error for r in runs if r.report.error]
    if failed:
        for msg in failed:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_NUMERIC if any(m.startswith(("NumericalError", "FloatingPointError", "LinAlgError"))
                                   for m in failed) else EXIT_DATA
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    return _run(args, "report.csv", with_delta=False)


def cmd_compare(args) -> int:
    return _run(args, "compare.csv", with_delta=True)


def cmd_evaluate(args) -> int:
    ref, _ = pio.read_image(args.reference)
    test, _ = pio.read_image(args.test)
    print(pio.format_value(psnr(ref, test)))
    return EXIT_OK


COMMANDS = {
    "mask": cmd_mask,
    "measure": cmd_measure,
    "reconstruct": cmd_reconstruct,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

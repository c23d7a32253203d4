"""``capsule-codec`` command line.

Data goes to stdout (or ``-o``) as comma-separated rows with a header;
diagnostics go to stderr. Exit status: 0 ok, 1 usage, 2 bad input data,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from contextlib import contextmanager
from pathlib import Path

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextmanager
def _out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _floats(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _config(args):
    from .config import RunConfig, load_config

    return load_config(args.config) if args.config else RunConfig()


def _tables(args, cfg):
    from .transform import lossless_tables, load_tables

    if getattr(args, "lossless", False):
        return lossless_tables()
    if getattr(args, "tables", None):
        return load_tables(args.tables)
    return cfg.tables


def _controller(args, cfg):
    from .controller import ControllerConfig

    c = cfg.controller
    return ControllerConfig(
        args.nominal_fps if args.nominal_fps is not None else c.nominal_fps,
        args.reduced_fps if args.reduced_fps is not None else c.reduced_fps,
        args.threshold if args.threshold is not None else c.cr_threshold,
    )


# -- commands --------------------------------------------------------------------

ENCODE_COLUMNS = ["input", "output", "width", "height", "bits_original", "bits_compressed", "cr", "zero_ac_fraction", "psnr", "encode_ms"]


def cmd_encode(args) -> int:
    from .codec import decode_frame, encode_frame_stats
    from .frame import load_frame
    from .metrics import mse, psnr

    cfg = _config(args)
    tables = _tables(args, cfg)
    frame = load_frame(args.input)
    stream, st = encode_frame_stats(frame, tables)
    Path(args.output).write_bytes(stream.to_bytes())
    rec = decode_frame(stream, tables)
    p = psnr(mse(frame.cropped(), rec.cropped()))
    with _out(args.stats) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ENCODE_COLUMNS)
        w.writerow(
            [args.input, args.output, frame.orig_width, frame.orig_height, st.bits_original, st.bits_compressed,
             f"{st.cr:.6f}", f"{st.zero_ac_fraction:.6f}", "inf" if p == float("inf") else f"{p:.4f}", f"{st.duration_s * 1000:.3f}"]
        )
    return EXIT_OK


def cmd_decode(args) -> int:
    from .codec import CompressedStream, decode_frame_counted
    from .frame import store_frame

    cfg = _config(args)
    stream = CompressedStream.from_bytes(Path(args.input).read_bytes())
    frame, clamped = decode_frame_counted(stream, _tables(args, cfg))
    store_frame(frame, args.output, args.format, crop=not args.padded)
    if clamped:
        print(f"{args.input}: {clamped} samples clamped to [0, 255]", file=sys.stderr)
    return EXIT_OK


def cmd_metrics(args) -> int:
    from .codec import decode_frame, encode_frame_stats
    from .frame import load_frame
    from .metrics import frame_metrics, write_metrics_csv

    cfg = _config(args)
    tables = _tables(args, cfg)
    rows = []
    if args.reconstructed:
        if len(args.inputs) != len(args.reconstructed):
            raise UsageError("--reconstructed needs one file per input")
        if args.compressed_bits is None:
            raise UsageError("--reconstructed needs --compressed-bits")
    for i, path in enumerate(args.inputs):
        frame = load_frame(path)
        if args.reconstructed:
            rec = load_frame(args.reconstructed[i]).cropped()
            bits = args.compressed_bits
        else:
            stream, st = encode_frame_stats(frame, tables)
            rec = decode_frame(stream, tables).cropped()
            bits = st.bits_compressed
        rows.append(frame_metrics(path, frame.cropped(), rec, bits))
    with _out(args.output) as fh:
        write_metrics_csv(rows, fh)
    return EXIT_OK


def cmd_mosaic(args) -> int:
    from .frame import load_rgb, mosaic_rggb, store_frame

    store_frame(mosaic_rggb(load_rgb(args.input)), args.output, args.format, crop=True)
    return EXIT_OK


def cmd_bubbles(args) -> int:
    from . import bubbles as bb
    from .frame import load_frame, load_rgb, save_rgb

    cfg = _config(args)
    params = cfg.hough
    reports = []
    for path in args.inputs:
        p = Path(path)
        img = load_frame(p) if p.suffix.lower() in (".pgm", ".cbay", ".raw") else load_rgb(p)
        rep = bb.analyze(img, str(path), params)
        reports.append(rep)
        if args.annotate:
            out_dir = Path(args.annotate)
            out_dir.mkdir(parents=True, exist_ok=True)
            base = bb.to_grayscale(img) if not hasattr(img, "ndim") or img.ndim == 2 else img
            save_rgb(bb.annotate(base, rep.circles), out_dir / (p.stem + "_circles.ppm"))
    with _out(args.output) as fh:
        bb.write_reports_csv(reports, fh)
    if args.aggregate:
        Path(args.aggregate).write_text(bb.format_aggregate(args.label, bb.aggregate(reports)))
    return EXIT_OK


def _traces(paths):
    from .controller import StudyTrace

    return [StudyTrace.load(p) for p in paths]


def cmd_simulate(args) -> int:
    from .energy import batch_simulate, write_reports_csv

    cfg = _config(args)
    traces = _traces(args.traces)
    reps = batch_simulate(traces, [_controller(args, cfg)], cfg.energy, cfg.runtime, [Path(p).stem for p in args.traces])
    with _out(args.output) as fh:
        write_reports_csv(reps, fh)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .controller import sweep, write_sweep_csv

    cfg = _config(args)
    traces = _traces(args.traces)
    nominal = args.nominal_fps if args.nominal_fps is not None else cfg.controller.nominal_fps
    cells = sweep(traces, args.thresholds or cfg.thresholds, args.rates or cfg.rates, nominal, cfg.energy, cfg.runtime)
    with _out(args.output) as fh:
        write_sweep_csv(cells, fh)
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import write_corpus

    cfg = _config(args)
    s = cfg.synth
    t0 = time.perf_counter()
    out = write_corpus(
        args.output,
        args.kind,
        args.count if args.count is not None else s.count,
        args.seed if args.seed is not None else s.seed,
        args.size if args.size is not None else s.size,
    )
    print(f"wrote {out / 'manifest.csv'} in {time.perf_counter() - t0:.2f} s", file=sys.stderr)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="capsule-codec", description="RAW Bayer capsule-image codec and study tools")
    ap.add_argument("--config", help="INI run configuration (flags override it)")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def tables_flags(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--lossless", action="store_true", help="all quantisation shifts zero")
        g.add_argument("--tables", help="quantisation table file (luma=/chroma= lines)")

    p = sub.add_parser("encode", help="compress a Bayer frame (PGM or CBAY)")
    p.add_argument("input")
    p.add_argument("output")
    tables_flags(p)
    p.add_argument("--stats", help="write the stats row here instead of stdout")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decompress to PGM or CBAY")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--tables", help="table file for streams with external tables")
    p.add_argument("--format", choices=("pgm", "raw"), default="pgm")
    p.add_argument("--padded", action="store_true", help="keep the 8x8 padding")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("metrics", help="CR / MSE / PSNR per frame")
    p.add_argument("inputs", nargs="+")
    tables_flags(p)
    p.add_argument("--reconstructed", nargs="+", help="compare against these frames instead of re-encoding")
    p.add_argument("--compressed-bits", type=int, help="compressed size used with --reconstructed")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("mosaic", help="RGB image -> RGGB Bayer frame")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--format", choices=("pgm", "raw"), default="pgm")
    p.set_defaults(func=cmd_mosaic)

    p = sub.add_parser("bubbles", help="detect bubbles and report coverage")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output")
    p.add_argument("--annotate", metavar="DIR", help="write images with the circles drawn")
    p.add_argument("--aggregate", metavar="FILE", help="write a dataset summary row")
    p.add_argument("--label", default="images", help="dataset label for --aggregate")
    p.set_defaults(func=cmd_bubbles)

    def ctrl_flags(p, single=True):
        p.add_argument("--nominal-fps", type=float)
        if single:
            p.add_argument("--reduced-fps", type=float)
            p.add_argument("--threshold", type=float)

    p = sub.add_parser("simulate", help="study energy for one controller setting")
    p.add_argument("traces", nargs="+")
    ctrl_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="missed pathologies and energy over a threshold x rate grid")
    p.add_argument("traces", nargs="+")
    ctrl_flags(p, single=False)
    p.add_argument("--thresholds", type=_floats)
    p.add_argument("--rates", type=_floats, help="reduced frame rates")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="write a seeded synthetic corpus")
    p.add_argument("kind", choices=("tissue", "bubbles", "ladder", "traces"))
    p.add_argument("output")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--size", type=int)
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    from .codec import CodecError
    from .config import ConfigError
    from .controller import TraceFormatError
    from .entropy import CorruptStreamError
    from .frame import FrameFormatError

    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"capsule-codec {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FrameFormatError, CodecError, CorruptStreamError, TraceFormatError, ConfigError, ValueError) as e:
        msg = f"{e.filename}: {e.strerror}" if isinstance(e, OSError) and e.filename else str(e)
        print(f"capsule-codec {args.command}: {msg}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001 - anything else is our bug
        print(f"capsule-codec {args.command}: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

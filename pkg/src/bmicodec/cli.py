"""Command-line surface: mask-gen, encode, decode, metrics, bench, report.

Exit codes: 0 success, 2 usage, 3 I/O or file-format error, 4 invariant or
shape error, 5 solver divergence. Failures print a single machine-parseable
line ``ERROR <code>: <message>`` to stderr.

Multi-channel (P6 PPM) inputs are split to channels at this layer, encoded
to one measurement per channel (suffixes .c0/.c1/.c2), and recombined by
decode when all three measurements and a .ppm output are given. The library
and the container formats stay single-channel.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import container
from .encoder import bench_encode, encode, write_bench_csv
from .errors import (
    BadMagic,
    CodecError,
    Malformed,
    NonFiniteState,
    UnsupportedDepth,
    UnsupportedVersion,
)
from .maskgen import MaskSpec, generate
from .metrics import psnr, ssim
from .solvers import SolverConfig, decode_measurement
from .types import BlockGrid, Image

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INVARIANT = 4
EXIT_DIVERGENCE = 5

_IO_ERRORS = (Malformed, BadMagic, UnsupportedVersion, UnsupportedDepth)

_IMAGE_SUFFIXES = (".pgm", ".f32")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"ERROR Usage: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_grid(text: str) -> BlockGrid:
    try:
        rows, cols = text.lower().split("x")
        return BlockGrid(int(rows), int(cols))
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"grid must look like RxC, got {text!r}") from None


def _parse_eta(text: str):
    parts = [float(p) for p in text.split(",")]
    return parts[0] if len(parts) == 1 else parts


def _parse_resolutions(text: str) -> list[tuple[int, int]]:
    out = []
    for item in text.split(","):
        if "x" in item.lower():
            h, w = item.lower().split("x")
            out.append((int(h), int(w)))
        else:
            side = int(item)
            out.append((side, side))
    return out


def build_parser() -> tuple[_Parser, dict]:
    parser = _Parser(prog="bmi", description="Block-modulated imaging codec")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    p = subs["mask-gen"] = sub.add_parser("mask-gen", help="generate a photomask file")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = subs["encode"] = sub.add_parser("encode", help="compress image(s) into measurement(s)")
    p.add_argument("--image", required=True, help="image file or directory")
    p.add_argument("--mask", required=True, help="mask file (.bmik)")
    p.add_argument("--grid", type=_parse_grid, required=True, metavar="RxC")
    p.add_argument("--pad", action="store_true", help="zero-pad indivisible edges")
    p.add_argument("--embed-mask", action="store_true", help="store the bitmap, not the seed")
    p.add_argument("--out", required=True, help="measurement file or directory")
    p.add_argument("--jobs", type=int, default=None, help="worker pool size for directories")

    p = subs["decode"] = sub.add_parser("decode", help="reconstruct image(s) from measurement(s)")
    p.add_argument("--measurement", required=True, help="file, comma list, or directory")
    p.add_argument("--mask", default=None, help="override mask file (.bmik)")
    p.add_argument("--algorithm", choices=("gap", "admm"), default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--eta", type=_parse_eta, default=None, metavar="V[,V...]")
    p.add_argument("--tv-weight", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--preset", choices=("stages10",), default=None)
    p.add_argument("--tolerant", action="store_true",
                   help="substitute a tiny eta at never-observed positions instead of failing")
    p.add_argument("--out", required=True, help="image file or directory")
    p.add_argument("--trace", default=None, help="write per-iteration CSV here")
    p.add_argument("--jobs", type=int, default=None)

    p = subs["metrics"] = sub.add_parser("metrics", help="PSNR/SSIM between two images")
    p.add_argument("--reference", required=True)
    p.add_argument("--test", required=True)

    p = subs["bench"] = sub.add_parser("bench", help="time the encoder across resolutions")
    p.add_argument("--resolutions", type=_parse_resolutions, required=True,
                   metavar="N[,N|HxW...]")
    p.add_argument("--grid", type=_parse_grid, required=True, metavar="RxC")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV destination")
    p.add_argument("--plot", default=None, help="also render the scaling figure here")

    p = subs["report"] = sub.add_parser("report", help="render figures from CSV outputs")
    p.add_argument("--bench", default=None, help="bench CSV")
    p.add_argument("--trace", default=None, help="decode trace CSV")
    p.add_argument("--out-dir", required=True)

    for p in subs.values():
        p.add_argument("--config", default=None, help="key=value file; flags win")
    return parser, subs


def _load_config(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise Malformed(lineno, f"config line {lineno} is not key=value: {line!r}")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _apply_config(parser, subs, argv, args):
    overrides = _load_config(args.config)
    sub = subs[args.command]
    converted = {}
    for action in sub._actions:
        if action.dest not in overrides:
            continue
        raw = overrides[action.dest]
        if isinstance(action, argparse._StoreTrueAction):
            converted[action.dest] = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            converted[action.dest] = action.type(raw)
        else:
            converted[action.dest] = raw
    sub.set_defaults(**converted)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# P6 helpers (CLI-layer color support)
# ---------------------------------------------------------------------------

def _read_ppm(path) -> list[Image]:
    buf = Path(path).read_bytes()
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = container._pgm_token(buf, pos)
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedDepth(f"P6 maxval {maxval} unsupported (8-bit only)")
    pos += 1
    expected = width * height * 3
    raster = buf[pos : pos + expected]
    if len(raster) < expected:
        raise Malformed(pos + len(raster), f"raster truncated: want {expected} bytes")
    rgb = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)
    return [Image(rgb[:, :, c].astype(np.float32) / np.float32(255)) for c in range(3)]


def _write_ppm(channels: list[Image], path) -> None:
    h, w = channels[0].height, channels[0].width
    rgb = np.stack(
        [np.rint(np.clip(c.data, 0, 1) * 255).astype(np.uint8) for c in channels], axis=-1
    )
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode() + rgb.tobytes())


def _channel_path(path: Path, channel: int) -> Path:
    return path.with_name(f"{path.stem}.c{channel}{path.suffix}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_mask_gen(args) -> int:
    mask = generate(MaskSpec(args.height, args.width, args.density, args.seed))
    container.write_mask(mask, args.out)
    print(args.out)
    return 0


def _iter_images(directory: Path) -> list[Path]:
    return sorted(
        p for p in directory.iterdir() if p.suffix in _IMAGE_SUFFIXES + (".ppm",)
    )


def _encode_one(image_path: Path, mask, args, out_path: Path) -> list[Path]:
    if image_path.suffix == ".ppm":
        written = []
        for c, chan in enumerate(_read_ppm(image_path)):
            m = encode(chan, mask, args.grid, pad=args.pad, embed_mask=args.embed_mask)
            target = _channel_path(out_path, c)
            container.write_measurement(m, target)
            written.append(target)
        return written
    image = container.read_image(image_path)
    m = encode(image, mask, args.grid, pad=args.pad, embed_mask=args.embed_mask)
    container.write_measurement(m, out_path)
    return [out_path]


def _cmd_encode(args) -> int:
    mask = container.read_mask(args.mask)
    src = Path(args.image)
    if src.is_dir():
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        jobs = args.jobs or os.cpu_count() or 1
        inputs = _iter_images(src)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_encode_one, p, mask, args, out_dir / (p.stem + ".bmim"))
                for p in inputs
            ]
            for f in futures:
                for written in f.result():
                    print(written)
    else:
        for written in _encode_one(src, mask, args, Path(args.out)):
            print(written)
    return 0


def _build_config(args) -> SolverConfig:
    cfg = SolverConfig.preset(args.preset) if args.preset else SolverConfig()
    updates = {}
    if args.algorithm is not None:
        updates["algorithm"] = args.algorithm
    if args.iters is not None:
        updates["max_iters"] = args.iters
    if args.eta is not None:
        updates["eta_schedule"] = args.eta
    if args.tv_weight is not None:
        updates["tv_weight"] = args.tv_weight
    if args.rho is not None:
        updates["rho"] = args.rho
    if args.tolerant:
        updates["tolerant"] = True
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _decode_one(measurement_path: Path, cfg, mask, out_path: Path, trace_path=None):
    m = container.read_measurement(measurement_path)
    image, trace = decode_measurement(m, cfg, mask=mask)
    container.write_image(image, out_path)
    if trace_path:
        trace.write_csv(trace_path)
    return out_path


def _cmd_decode(args) -> int:
    cfg = _build_config(args)
    mask = container.read_mask(args.mask) if args.mask else None
    src = Path(args.measurement)

    if "," in args.measurement:
        paths = [Path(p) for p in args.measurement.split(",")]
        out = Path(args.out)
        if out.suffix == ".ppm":
            if len(paths) != 3:
                raise Malformed(0, f"P6 output needs 3 channel measurements, got {len(paths)}")
            channels = []
            for p in paths:
                m = container.read_measurement(p)
                image, _ = decode_measurement(m, cfg, mask=mask)
                channels.append(image)
            _write_ppm(channels, out)
            print(out)
            return 0
        raise Malformed(0, "multiple measurements require a .ppm output")

    if src.is_dir():
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        jobs = args.jobs or os.cpu_count() or 1
        inputs = sorted(src.glob("*.bmim"))
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_decode_one, p, cfg, mask, out_dir / (p.stem + ".pgm"))
                for p in inputs
            ]
            for f in futures:
                print(f.result())
    else:
        print(_decode_one(src, cfg, mask, Path(args.out), args.trace))
    return 0


def _cmd_metrics(args) -> int:
    ref = container.read_image(args.reference)
    test = container.read_image(args.test)
    print("psnr_db,ssim")
    print(f"{psnr(ref, test):.4f},{ssim(ref, test):.6f}")
    return 0


def _cmd_bench(args) -> int:
    from . import report  # matplotlib import stays off the hot path

    rows = bench_encode(args.resolutions, args.grid, args.repeats, seed=args.seed)
    write_bench_csv(rows, args.out)
    print(args.out)
    if args.plot:
        report.render_bench_figure(args.out, args.plot)
        print(args.plot)
    return 0


def _cmd_report(args) -> int:
    from . import report

    if args.bench is None and args.trace is None:
        raise Malformed(0, "report needs --bench and/or --trace")
    for path in report.render_report(args.out_dir, bench_csv=args.bench, trace_csv=args.trace):
        print(path)
    return 0


_COMMANDS = {
    "mask-gen": _cmd_mask_gen,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "metrics": _cmd_metrics,
    "bench": _cmd_bench,
    "report": _cmd_report,
}


def _exit_code(err: Exception) -> int:
    if isinstance(err, NonFiniteState):
        return EXIT_DIVERGENCE
    if isinstance(err, _IO_ERRORS) or isinstance(err, OSError):
        return EXIT_IO
    return EXIT_INVARIANT


def main(argv=None) -> int:
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = _apply_config(parser, subs, argv, args)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (CodecError, OSError) as err:
        code = getattr(err, "code", type(err).__name__)
        print(f"ERROR {code}: {err}", file=sys.stderr)
        return _exit_code(err)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

"""Bit-exact file formats: PGM and raw-float images, BMIM measurements,
BMIK masks.

All multi-byte container fields are little-endian with fixed layouts (frozen
in docs/FORMATS.md). PGM follows the netpbm binary spec: big-endian samples,
maxval deciding the byte width. A parse either yields a fully validated
object or raises a structured error carrying the byte offset; partial
objects never escape.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    InvariantViolation,
    Malformed,
    UnsupportedDepth,
    UnsupportedVersion,
)
from .types import BlockGrid, Image, Mask, Measurement

MEASUREMENT_MAGIC = b"BMIM"
MASK_MAGIC = b"BMIK"
CONTAINER_VERSION = 1

FLAG_MASK_EMBEDDED = 0x1
FLAG_PADDED = 0x2

# magic, version, flags, orig_h, orig_w, grid_rows, grid_cols,
# block_h, block_w, mask_seed, mask_density -- 40 bytes total
_MEASUREMENT_HEADER = struct.Struct("<4sHHIIHHIIQf")
# magic, version, h, w, prng_id, seed, density -- 28 bytes total
_MASK_HEADER = struct.Struct("<4sHIIHQf")

MEASUREMENT_HEADER_SIZE = _MEASUREMENT_HEADER.size
MASK_HEADER_SIZE = _MASK_HEADER.size


# ---------------------------------------------------------------------------
# images
# ---------------------------------------------------------------------------

def _pgm_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    """Next header token, skipping whitespace and # comments."""
    n = len(buf)
    while pos < n:
        ch = buf[pos : pos + 1]
        if ch == b"#":
            while pos < n and buf[pos : pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise Malformed(pos, "truncated header")
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
        pos += 1
    return buf[start:pos], pos


def _read_pgm(buf: bytes, path: str) -> Image:
    if buf[:2] != b"P5":
        raise Malformed(0, f"not a binary PGM (magic {buf[:2]!r})")
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = _pgm_token(buf, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise Malformed(pos - len(tok), f"non-numeric {name} {tok!r}") from None
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise Malformed(2, f"non-positive dimensions {width}x{height}")
    if maxval <= 0 or maxval > 65535:
        raise UnsupportedDepth(f"maxval {maxval} outside [1, 65535]")
    if pos >= len(buf) or not buf[pos : pos + 1].isspace():
        raise Malformed(pos, "missing whitespace before raster")
    pos += 1
    sample_bytes = 1 if maxval < 256 else 2
    expected = width * height * sample_bytes
    raster = buf[pos : pos + expected]
    if len(raster) < expected:
        raise Malformed(pos + len(raster), f"raster truncated: want {expected} bytes")
    dtype = np.uint8 if sample_bytes == 1 else np.dtype(">u2")
    samples = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    if int(samples.max()) > maxval:
        raise Malformed(pos, f"sample exceeds maxval {maxval}")
    return Image(samples.astype(np.float32) / np.float32(maxval))


def _dims_sidecar(path: Path) -> Path:
    return Path(str(path) + ".dims")


def _read_raw(path: Path) -> Image:
    sidecar = _dims_sidecar(path)
    if not sidecar.exists():
        raise Malformed(0, f"missing dimensions sidecar {sidecar.name}")
    parts = sidecar.read_text().split()
    if len(parts) != 2:
        raise Malformed(0, f"sidecar must hold 'height width', got {parts!r}")
    try:
        h, w = int(parts[0]), int(parts[1])
    except ValueError:
        raise Malformed(0, f"non-numeric sidecar dimensions {parts!r}") from None
    buf = path.read_bytes()
    expected = h * w * 4
    if len(buf) != expected:
        raise Malformed(len(buf), f"payload is {len(buf)} bytes, want {expected}")
    data = np.frombuffer(buf, dtype="<f4").reshape(h, w)
    bad = ~np.isfinite(data) | (data < 0.0) | (data > 1.0)
    if bad.any():
        first = int(np.flatnonzero(bad)[0])
        raise Malformed(first * 4, f"sample {data.flat[first]} outside [0, 1]")
    return Image(data)


def read_image(path) -> Image:
    """Load a PGM (sniffed by magic) or raw-float image, normalized to [0,1]."""
    p = Path(path)
    buf = p.read_bytes()
    if buf[:2] == b"P5":
        return _read_pgm(buf, str(p))
    if _dims_sidecar(p).exists():
        return _read_raw(p)
    raise Malformed(0, "unrecognized image format (not P5, no .dims sidecar)")


def write_image(image: Image, path, depth: int = 8) -> None:
    """Write PGM (.pgm, quantized to depth bits) or raw float32 (.f32)."""
    p = Path(path)
    if p.suffix == ".f32":
        p.write_bytes(image.data.astype("<f4").tobytes())
        _dims_sidecar(p).write_text(f"{image.height} {image.width}\n")
        return
    if depth == 8:
        maxval, dtype = 255, np.uint8
    elif depth == 16:
        maxval, dtype = 65535, np.dtype(">u2")
    else:
        raise UnsupportedDepth(f"depth must be 8 or 16, got {depth}")
    samples = np.rint(np.clip(image.data, 0.0, 1.0) * maxval).astype(dtype)
    header = f"P5\n{image.width} {image.height}\n{maxval}\n".encode()
    p.write_bytes(header + samples.tobytes())


# ---------------------------------------------------------------------------
# bit packing
# ---------------------------------------------------------------------------

def _pack_bits(bits: np.ndarray) -> bytes:
    """Row-major, MSB-first, each row padded to a byte boundary."""
    return np.packbits(bits, axis=1).tobytes()


def _unpack_bits(buf: bytes, offset: int, h: int, w: int) -> np.ndarray:
    row_bytes = (w + 7) // 8
    expected = row_bytes * h
    chunk = buf[offset : offset + expected]
    if len(chunk) < expected:
        raise Malformed(offset + len(chunk), f"mask bits truncated: want {expected} bytes")
    rows = np.frombuffer(chunk, dtype=np.uint8).reshape(h, row_bytes)
    return np.unpackbits(rows, axis=1)[:, :w]


# ---------------------------------------------------------------------------
# measurements
# ---------------------------------------------------------------------------

def write_measurement(m: Measurement, path) -> None:
    embedded = m.mask is not None
    flags = (FLAG_MASK_EMBEDDED if embedded else 0) | (FLAG_PADDED if m.is_padded else 0)
    header = _MEASUREMENT_HEADER.pack(
        MEASUREMENT_MAGIC,
        CONTAINER_VERSION,
        flags,
        m.original_height,
        m.original_width,
        m.grid.rows,
        m.grid.cols,
        m.block_height,
        m.block_width,
        (m.mask_seed if not embedded else 0) & 0xFFFFFFFFFFFFFFFF,
        m.mask_density if not embedded else 0.0,
    )
    payload = m.data.astype("<f4").tobytes()
    tail = _pack_bits(m.mask.bits) if embedded else b""
    Path(path).write_bytes(header + payload + tail)


def read_measurement(path) -> Measurement:
    buf = Path(path).read_bytes()
    if len(buf) < MEASUREMENT_HEADER_SIZE:
        raise Malformed(len(buf), f"header truncated: want {MEASUREMENT_HEADER_SIZE} bytes")
    (
        magic,
        version,
        flags,
        orig_h,
        orig_w,
        grid_rows,
        grid_cols,
        block_h,
        block_w,
        seed,
        density,
    ) = _MEASUREMENT_HEADER.unpack_from(buf)
    if magic != MEASUREMENT_MAGIC:
        raise BadMagic(MEASUREMENT_MAGIC, magic)
    if version != CONTAINER_VERSION:
        raise UnsupportedVersion(version)
    if grid_rows < 1 or grid_cols < 1:
        raise InvariantViolation("grid", f"{grid_rows}x{grid_cols}")
    if block_h < 1 or block_w < 1:
        raise InvariantViolation("block", f"{block_h}x{block_w}")
    padded = bool(flags & FLAG_PADDED)
    if (block_h * grid_rows != orig_h or block_w * grid_cols != orig_w) != padded:
        raise InvariantViolation("flags", "padded flag inconsistent with dimensions")
    if block_h * grid_rows < orig_h or block_w * grid_cols < orig_w:
        raise InvariantViolation("block", "padded extent smaller than original")

    offset = MEASUREMENT_HEADER_SIZE
    payload_bytes = block_h * block_w * 4
    payload = buf[offset : offset + payload_bytes]
    if len(payload) < payload_bytes:
        raise Malformed(offset + len(payload), f"payload truncated: want {payload_bytes} bytes")
    data = np.frombuffer(payload, dtype="<f4").reshape(block_h, block_w)
    offset += payload_bytes

    embedded = bool(flags & FLAG_MASK_EMBEDDED)
    if embedded:
        bits = _unpack_bits(buf, offset, orig_h, orig_w)
        m = Measurement(
            data=data,
            grid=BlockGrid(grid_rows, grid_cols),
            original_height=orig_h,
            original_width=orig_w,
            mask=Mask(bits),
        )
    else:
        if not 0.0 < density < 1.0:
            raise InvariantViolation("mask_density", f"{density} not in (0, 1)")
        m = Measurement(
            data=data,
            grid=BlockGrid(grid_rows, grid_cols),
            original_height=orig_h,
            original_width=orig_w,
            mask_seed=seed,
            mask_density=float(density),
        )
    m.validate()
    return m


# ---------------------------------------------------------------------------
# masks
# ---------------------------------------------------------------------------

def write_mask(mask: Mask, path) -> None:
    header = _MASK_HEADER.pack(
        MASK_MAGIC,
        CONTAINER_VERSION,
        mask.height,
        mask.width,
        mask.prng_id,
        (mask.seed if mask.seed is not None else 0) & 0xFFFFFFFFFFFFFFFF,
        mask.density if mask.density is not None else 0.0,
    )
    Path(path).write_bytes(header + _pack_bits(mask.bits))


def read_mask(path) -> Mask:
    buf = Path(path).read_bytes()
    if len(buf) < MASK_HEADER_SIZE:
        raise Malformed(len(buf), f"header truncated: want {MASK_HEADER_SIZE} bytes")
    magic, version, h, w, prng_id, seed, density = _MASK_HEADER.unpack_from(buf)
    if magic != MASK_MAGIC:
        raise BadMagic(MASK_MAGIC, magic)
    if version != CONTAINER_VERSION:
        raise UnsupportedVersion(version)
    if h < 1 or w < 1:
        raise InvariantViolation("dimensions", f"{h}x{w}")
    if prng_id != 0 and not 0.0 < density < 1.0:
        raise InvariantViolation("density", f"{density} not in (0, 1) with PRNG id {prng_id}")
    bits = _unpack_bits(buf, MASK_HEADER_SIZE, h, w)
    if prng_id == 0:
        return Mask(bits)
    return Mask(bits, seed=seed, density=float(density), prng_id=prng_id)

"""File formats: binary PGM, primary-HDU FITS (read only), mask files, CSV reports."""

from __future__ import annotations

import csv
import io as _stdio
import math
import re
from dataclasses import asdict, dataclass, fields

import numpy as np

from .core import Image
from .sensing import MeasurementVector, SamplingMask

FITS_BLOCK = 2880
FITS_CARD = 80


class FormatError(ValueError):
    """Malformed or unsupported file content."""


# -- PGM ----------------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _pgm_header(data: bytes):
    tokens = []
    pos = 0
    for _ in range(4):
        m = _PGM_TOKEN.match(data, pos)
        if m is None:
            raise FormatError("malformed PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    if pos >= len(data) or data[pos:pos + 1] not in (b" ", b"\n", b"\r", b"\t"):
        raise FormatError("malformed PGM header: missing separator before raster")
    return tokens, pos + 1


def read_pgm(data: bytes) -> Image:
    """Decode a binary (P5) PGM with maxval 255 or 65535."""
    magic = data[:2]
    if magic in (b"P2", b"P1", b"P3", b"P4", b"P6"):
        raise FormatError(f"unsupported variant {magic.decode()}: only binary P5 is read")
    if magic != b"P5":
        raise FormatError("not a PGM file (missing P5 magic)")
    tokens, offset = _pgm_header(data)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError("malformed PGM header: non-integer field") from None
    if width < 1 or height < 1:
        raise FormatError(f"bad PGM dimensions {width}x{height}")
    if maxval == 255:
        dtype, depth = np.dtype("u1"), 8
    elif maxval == 65535:
        dtype, depth = np.dtype(">u2"), 16
    else:
        raise FormatError(f"unsupported maxval {maxval} (need 255 or 65535)")
    need = width * height * dtype.itemsize
    raster = data[offset:offset + need]
    if len(raster) < need:
        raise FormatError(f"truncated PGM payload: {len(raster)} of {need} bytes")
    pixels = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return Image(pixels.astype(np.float64), depth)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def write_pgm(img: Image) -> bytes:
    maxval = int(img.peak)
    px = _round_half_away(np.clip(img.pixels, 0, maxval))
    dtype = "u1" if img.bit_depth == 8 else ">u2"
    header = f"P5\n{img.width} {img.height}\n{maxval}\n".encode("ascii")
    return header + px.astype(dtype).tobytes()


# -- FITS ---------------------------------------------------------------------

_FITS_DTYPES = {8: ">u1", 16: ">i2", 32: ">i4", -32: ">f4", -64: ">f8"}


def _parse_card_value(raw: str):
    raw = raw.strip()
    if raw.startswith("'"):
        end = raw.find("'", 1)
        while end != -1 and raw[end + 1:end + 2] == "'":
            end = raw.find("'", end + 2)
        return raw[1:end].replace("''", "'").rstrip() if end != -1 else raw[1:]
    value = raw.split("/", 1)[0].strip()
    if value in ("T", "F"):
        return value == "T"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value.replace("D", "E"))
    except ValueError:
        return value


def parse_fits_header(data: bytes, offset: int = 0):
    """Parse 80-character cards until END; return (header dict, data offset)."""
    header: dict[str, object] = {}
    pos = offset
    while True:
        block = data[pos:pos + FITS_BLOCK]
        if len(block) < FITS_BLOCK:
            raise FormatError("missing END card (header truncated)")
        pos += FITS_BLOCK
        for i in range(0, FITS_BLOCK, FITS_CARD):
            card = block[i:i + FITS_CARD].decode("ascii", errors="replace")
            key = card[:8].strip()
            if key == "END":
                return header, pos
            if card[8:10] == "= " and key not in header:
                header[key] = _parse_card_value(card[10:])


def center_crop_pow2(img: Image, max_size: int | None = None):
    """Center-crop each axis to the largest power of two <= min(size, max_size).

    Returns the cropped image and the ``(row, col)`` offset of the crop.
    """
    def target(n):
        limit = n if max_size is None else min(n, max_size)
        return 1 << (int(limit).bit_length() - 1)

    h, w = img.shape
    th, tw = target(h), target(w)
    r0, c0 = (h - th) // 2, (w - tw) // 2
    if (th, tw) == (h, w):
        return img, (0, 0)
    return Image(img.pixels[r0:r0 + th, c0:c0 + tw], img.bit_depth), (r0, c0)


def read_fits_primary(data: bytes) -> Image:
    """Read a 2-D primary HDU; BSCALE/BZERO applied, values kept in physical units.

    BITPIX 8 images get ``bit_depth`` 8, all others 16 (PSNR peak only).
    """
    if data[:FITS_CARD].decode("ascii", errors="replace")[:8].strip() == "XTENSION":
        raise FormatError("file starts with an extension, not a primary HDU")
    header, offset = parse_fits_header(data)
    if header.get("SIMPLE") is not True:
        raise FormatError("not a FITS primary HDU (SIMPLE != T)")
    bitpix = header.get("BITPIX")
    if bitpix not in _FITS_DTYPES:
        raise FormatError(f"unsupported BITPIX {bitpix}")
    naxis = header.get("NAXIS")
    if naxis != 2:
        raise FormatError(f"unsupported NAXIS {naxis} (need 2)")
    try:
        width, height = int(header["NAXIS1"]), int(header["NAXIS2"])
    except KeyError as exc:
        raise FormatError(f"missing {exc.args[0]} card") from None
    dtype = np.dtype(_FITS_DTYPES[bitpix])
    need = width * height * dtype.itemsize
    raw = data[offset:offset + need]
    if len(raw) < need:
        raise FormatError(f"truncated FITS data: {len(raw)} of {need} bytes")

    end = offset + -(-need // FITS_BLOCK) * FITS_BLOCK
    rest = data[end:end + FITS_CARD].decode("ascii", errors="replace")
    if rest.startswith("XTENSION"):
        raise FormatError("FITS extensions present; only single-HDU files are supported")

    values = np.frombuffer(raw, dtype=dtype).reshape(height, width).astype(np.float64)
    bscale = float(header.get("BSCALE", 1.0))
    bzero = float(header.get("BZERO", 0.0))
    values = bscale * values + bzero
    if not np.all(np.isfinite(values)):
        raise FormatError("FITS data contains non-finite values (blank pixels)")
    return Image(values, 8 if bitpix == 8 else 16)


def read_image(path: str, max_size: int | None = None):
    """Load a PGM or FITS file, center-cropped to power-of-two dimensions."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:6] == b"SIMPLE":
        img = read_fits_primary(data)
    else:
        img = read_pgm(data)
    return center_crop_pow2(img, max_size)


# -- masks and measurements -----------------------------------------------------

def write_mask(mask: SamplingMask) -> bytes:
    return mask.to_text().encode("ascii")


def read_mask(data: bytes) -> SamplingMask:
    lines = data.decode("ascii").splitlines()
    if not lines:
        raise FormatError("empty mask file")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "mask":
        raise FormatError(f"bad mask header {lines[0]!r}")
    try:
        n_t, n_y, m = int(head[1]), int(head[2]), int(head[4])
    except ValueError:
        raise FormatError(f"bad mask header {lines[0]!r}") from None
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != m:
        raise FormatError(f"mask header declares {m} indices, found {len(body)}")
    idx = np.empty((m, 2), dtype=np.int64)
    for i, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != 2:
            raise FormatError(f"malformed mask row {i + 2}: {ln!r}")
        try:
            idx[i] = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"malformed mask row {i + 2}: {ln!r}") from None
    try:
        return SamplingMask((n_t, n_y), head[3], idx)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def write_measurements(meas: MeasurementVector) -> bytes:
    rows = [f"measurements {len(meas)} {meas.mask_id}"]
    rows.extend(f"{v.real:.17g} {v.imag:.17g}" for v in meas.values)
    return ("\n".join(rows) + "\n").encode("ascii")


def read_measurements(data: bytes) -> MeasurementVector:
    lines = data.decode("ascii").splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 3 or head[0] != "measurements":
        raise FormatError("bad measurement header")
    m = int(head[1])
    body = [ln.split() for ln in lines[1:] if ln.strip()]
    if len(body) != m or any(len(b) != 2 for b in body):
        raise FormatError(f"expected {m} rows of 're im'")
    vals = np.array([complex(float(a), float(b)) for a, b in body])
    return MeasurementVector(vals, head[2])


# -- reports --------------------------------------------------------------------

@dataclass
class ExperimentReport:
    image_id: str
    basis_tag: str
    method: str
    lines: int | None
    points_per_line: int | None
    hermitian: bool
    realized_m: int
    mask_id: str
    n: int
    iterations: int
    mu: float
    gamma: float
    psnr_db: float | None = None
    final_residual: float | None = None
    kkt_residual: float | None = None
    significant_k: int | None = None
    operator_norm: float | None = None
    lambda_clamped: int = 0
    crop: str = ""
    wall_time_seconds: float | None = None
    error: str = ""


REPORT_FIELDS = tuple(f.name for f in fields(ExperimentReport))


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def report_rows(reports, extra: dict | None = None):
    """Header plus formatted rows; ``extra`` maps column -> per-row values."""
    extra = extra or {}
    header = list(REPORT_FIELDS) + list(extra)
    rows = [header]
    for i, rep in enumerate(reports):
        d = asdict(rep)
        rows.append([format_value(d[k]) for k in REPORT_FIELDS]
                    + [format_value(col[i]) for col in extra.values()])
    return rows


def _csv_bytes(rows) -> bytes:
    buf = _stdio.StringIO()
    csv.writer(buf, lineterminator="\r\n").writerows(rows)
    return buf.getvalue().encode("utf-8")


def write_report_csv(reports, extra: dict | None = None, header: bool = True) -> bytes:
    rows = report_rows(reports, extra)
    return _csv_bytes(rows if header else rows[1:])


def write_trace_csv(objective, residual) -> bytes:
    rows = [["iteration", "objective", "residual"]]
    rows += [[str(i + 1), format_value(float(o)), format_value(float(r))]
             for i, (o, r) in enumerate(zip(objective, residual))]
    return _csv_bytes(rows)

"""Image codecs (PPM/PGM, 24-bit BMP), manifests, coefficient banks and result CSVs."""

from __future__ import annotations

import csv
import logging
import math
import re
import struct
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from tnle.errors import ParseError
from tnle.model import CoefficientBank, CoefficientSet
from tnle.tensor import Tensor3

log = logging.getLogger(__name__)

BANK_MAGIC = "tnle-bank"
BANK_VERSION = 1
RESULT_HEADER = ("image_id", "sigma_true", "method", "sigma_hat", "abs_error", "s_used", "n", "M1", "seed")
METRIC_HEADER = ("sigma_true", "method", "n_samples", "rmse_spread", "rmse_truth", "mae", "mae_truth")


# -- images -------------------------------------------------------------------

def _pnm_header(buf: bytes, path, count: int):
    """Parse ``count`` whitespace-separated header integers after the magic number."""
    pos = 2
    values = []
    while len(values) < count:
        while pos < len(buf) and (buf[pos:pos + 1].isspace() or buf[pos:pos + 1] == b"#"):
            if buf[pos:pos + 1] == b"#":
                while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < len(buf) and buf[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise ParseError("corrupt image: bad PNM header", path)
        values.append(int(buf[start:pos]))
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise ParseError("corrupt image: bad PNM header", path)
    return values, pos + 1


def _decode_pnm(buf: bytes, path) -> np.ndarray:
    magic = buf[:2]
    (width, height, maxval), pos = _pnm_header(buf, path, 3)
    if maxval != 255:
        raise ParseError(f"unsupported depth: maxval {maxval}", path)
    if width < 1 or height < 1:
        raise ParseError("corrupt image: empty dimensions", path)
    channels = 3 if magic in (b"P6", b"P3") else 1
    count = width * height * channels
    if magic in (b"P6", b"P5"):
        payload = buf[pos:pos + count]
        if len(payload) < count:
            raise ParseError("corrupt image: truncated pixel data", path)
        pix = np.frombuffer(payload, dtype=np.uint8)
    else:
        tokens = re.sub(rb"#[^\n\r]*", b" ", buf[pos:]).split()
        if len(tokens) < count:
            raise ParseError("corrupt image: truncated pixel data", path)
        try:
            pix = np.array([int(t) for t in tokens[:count]])
        except ValueError:
            raise ParseError("corrupt image: non-numeric pixel value", path) from None
        if pix.min(initial=0) < 0 or pix.max(initial=0) > 255:
            raise ParseError("corrupt image: pixel value out of range", path)
    return pix.reshape(height, width, channels).astype(np.float64)


def _decode_bmp(buf: bytes, path) -> np.ndarray:
    if len(buf) < 54:
        raise ParseError("corrupt image: truncated BMP header", path)
    offset = struct.unpack_from("<I", buf, 10)[0]
    width, height = struct.unpack_from("<ii", buf, 18)
    bpp, compression = struct.unpack_from("<HI", buf, 28)
    if compression != 0:
        raise ParseError("unsupported format: compressed BMP", path)
    if bpp != 24:
        raise ParseError(f"unsupported depth: {bpp}-bit BMP", path)
    if width < 1 or height == 0:
        raise ParseError("corrupt image: empty dimensions", path)
    rows = abs(height)
    stride = (3 * width + 3) & ~3
    if len(buf) < offset + stride * rows:
        raise ParseError("corrupt image: truncated pixel data", path)
    raw = np.frombuffer(buf, dtype=np.uint8, count=stride * rows, offset=offset)
    img = raw.reshape(rows, stride)[:, :3 * width].reshape(rows, width, 3)[:, :, ::-1]
    if height > 0:
        img = img[::-1]
    return img.astype(np.float64)


def decode_image(path) -> Tensor3:
    """Read a PPM (P6/P3), PGM (P5/P2) or uncompressed 24-bit BMP into an n1 x n2 x 3 tensor.

    Intensities stay on the 0..255 scale; slices 1, 2, 3 are R, G, B.
    Grayscale inputs are replicated to three channels.
    """
    path = Path(path)
    buf = path.read_bytes()
    magic = buf[:2]
    if magic in (b"P6", b"P3", b"P5", b"P2"):
        img = _decode_pnm(buf, path)
    elif magic == b"BM":
        img = _decode_bmp(buf, path)
    else:
        raise ParseError(f"unsupported format (magic {magic!r})", path)
    if img.shape[2] == 1:
        log.warning("%s: grayscale image replicated to 3 channels", path)
        img = np.repeat(img, 3, axis=2)
    return Tensor3.from_hwc(img)


def _to_bytes(t: Tensor3) -> np.ndarray:
    if t.n3 != 3:
        raise ValueError("only 3-channel tensors can be encoded")
    if not np.all(np.isfinite(t.data)):
        raise ValueError("cannot encode non-finite intensities")
    # round half away from zero, then clamp: 254.5 -> 255
    vals = np.floor(t.to_hwc() + 0.5)
    return np.clip(vals, 0, 255).astype(np.uint8)


def encode_image(t: Tensor3, path) -> None:
    """Write a binary PPM (P6). Values are rounded to nearest and clamped to 0..255."""
    pix = _to_bytes(t)
    header = f"P6\n{t.n2} {t.n1}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pix.tobytes())


def encode_bmp(t: Tensor3, path) -> None:
    """Write an uncompressed bottom-up 24-bit BMP."""
    pix = _to_bytes(t)[::-1, :, ::-1]
    h, w = pix.shape[:2]
    stride = (3 * w + 3) & ~3
    body = np.zeros((h, stride), dtype=np.uint8)
    body[:, :3 * w] = pix.reshape(h, 3 * w)
    size = 54 + body.size
    header = struct.pack("<2sIHHI", b"BM", size, 0, 0, 54)
    dib = struct.pack("<IiiHHIIiiII", 40, w, h, 1, 24, 0, body.size, 2835, 2835, 0, 0)
    Path(path).write_bytes(header + dib + body.tobytes())


# -- manifests ----------------------------------------------------------------

@dataclass(frozen=True)
class Manifest:
    entries: tuple
    base_dir: Optional[Path] = None

    def paths(self) -> list[Path]:
        base = self.base_dir or Path(".")
        return [p if p.is_absolute() else base / p for p in map(Path, self.entries)]


def read_manifest(path, base_dir=None) -> Manifest:
    """One image path per line; ``#`` comments and blank lines are skipped.

    Relative entries resolve against ``base_dir``, defaulting to the manifest's directory.
    """
    path = Path(path)
    entries = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            entries.append(line)
    return Manifest(tuple(entries), Path(base_dir) if base_dir is not None else path.parent)


# -- coefficient banks ----------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_bank(bank: CoefficientBank, path, comment: Optional[str] = None) -> None:
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines.append(f"{BANK_MAGIC} v{BANK_VERSION} M1={bank.M1} n={bank.n}")
    for e in bank.entries:
        lines.append(" ".join([_fmt(e.sigma_ref)] + [_fmt(v) for v in e.theta]))
    if bank.pooled is not None:
        lines.append(" ".join(["pooled"] + [_fmt(v) for v in bank.pooled.theta]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _floats(tokens, path, lineno) -> list[float]:
    try:
        vals = [float(t) for t in tokens]
    except ValueError:
        raise ParseError(f"non-numeric value in {' '.join(tokens)!r}", path, lineno) from None
    if not all(math.isfinite(v) for v in vals):
        raise ParseError("non-finite coefficient", path, lineno)
    return vals


def read_bank(path) -> CoefficientBank:
    path = Path(path)
    header = None
    entries = []
    pooled = None
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        tokens = text.split()
        if header is None:
            if tokens[0] != BANK_MAGIC:
                raise ParseError("malformed header: expected 'tnle-bank v1 M1=<int> n=<int>'", path, lineno)
            m = re.fullmatch(r"tnle-bank v(\d+) M1=(\d+) n=(\d+)", " ".join(tokens))
            if m is None:
                raise ParseError("malformed header: expected 'tnle-bank v1 M1=<int> n=<int>'", path, lineno)
            if int(m.group(1)) != BANK_VERSION:
                raise ParseError(f"unsupported version v{m.group(1)}", path, lineno)
            header = (int(m.group(2)), int(m.group(3)))
            continue
        n = header[1]
        if len(tokens) != n + 2:
            raise ParseError(f"expected {n + 2} fields, got {len(tokens)}", path, lineno)
        if tokens[0] == "pooled":
            if pooled is not None:
                raise ParseError("duplicate pooled line", path, lineno)
            pooled = CoefficientSet(_floats(tokens[1:], path, lineno))
        else:
            vals = _floats(tokens, path, lineno)
            entries.append(CoefficientSet(vals[1:], vals[0]))
    if header is None:
        raise ParseError("malformed header: file has no bank header", path)
    try:
        return CoefficientBank(header[0], header[1], tuple(entries), pooled)
    except ValueError as exc:
        raise ParseError(str(exc), path) from None


# -- result tables --------------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    image_id: str
    sigma_true: float
    method: str
    sigma_hat: float
    abs_error: float
    s_used: int
    n: int
    M1: int
    seed: int


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results(rows: Iterable[ResultRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for row in rows:
            w.writerow([_cell(v) for v in astuple(row)])


def read_results(path) -> list[ResultRow]:
    path = Path(path)
    types = [f.type for f in fields(ResultRow)]
    conv = {"str": str, "float": float, "int": int}
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != RESULT_HEADER:
            raise ParseError("malformed header in results CSV", path, 1)
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(RESULT_HEADER):
                raise ParseError(f"expected {len(RESULT_HEADER)} fields, got {len(rec)}", path, lineno)
            try:
                out.append(ResultRow(*[conv[t](v) for t, v in zip(types, rec)]))
            except ValueError:
                raise ParseError("non-numeric value", path, lineno) from None
    return out


def write_metrics(metrics: dict, path) -> None:
    """``metrics`` maps (method, sigma_true) to a MetricReport."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_HEADER)
        for (method, sigma), m in sorted(metrics.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            w.writerow([_cell(float(sigma)), method, m.n_samples, _cell(m.rmse_spread),
                        _cell(m.rmse_truth), _cell(m.mae), _cell(m.mae_truth)])

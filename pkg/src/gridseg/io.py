"""Raster and mask file formats.

Supported inputs: 8-bit PGM (P2/P5) and PPM (P3/P6), plus a small
multi-band float container with the ASCII header ``bands <w> <h> <b>``
followed by b row-major float32 little-endian planes.

read_raster scales PGM/PPM samples to [0, 1] by their maxval; the bands
format carries raw floats.  Masks are written as PGM with the label as
the literal gray level (maxval = max label, at least 1).  For ground
truth the gray level equal to ``uncertain`` (2 by convention) reads back
as label -1.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import FormatError, InvalidParameterError
from .graph import RasterImage

BANDS_MAGIC = b"bands"


def _read_pnm_tokens(fh, count):
    """Read whitespace-separated header tokens, skipping # comments."""
    tokens = []
    while len(tokens) < count:
        line = fh.readline()
        if not line:
            raise FormatError("truncated PNM header")
        hash_pos = line.find(b"#")
        if hash_pos >= 0:
            line = line[:hash_pos]
        tokens.extend(line.split())
    return tokens[:count]


def _read_pnm(path):
    """Returns (magic, width, height, maxval, samples int array)."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
        if magic not in (b"P2", b"P5", b"P3", b"P6"):
            raise FormatError(f"{path}: unsupported PNM magic {magic!r}")
        w, h, maxval = (int(t) for t in _read_pnm_tokens(fh, 3))
        if w < 1 or h < 1 or not 0 < maxval < 65536:
            raise FormatError(f"{path}: bad PNM dimensions or maxval")
        channels = 3 if magic in (b"P3", b"P6") else 1
        count = w * h * channels
        if magic in (b"P5", b"P6"):
            if maxval > 255:
                raise FormatError(f"{path}: 16-bit binary PNM not supported")
            data = np.frombuffer(fh.read(count), dtype=np.uint8)
            if data.size != count:
                raise FormatError(f"{path}: truncated PNM pixel data")
            samples = data.astype(np.int64)
        else:
            text = fh.read().split()
            if len(text) < count:
                raise FormatError(f"{path}: truncated PNM pixel data")
            samples = np.array([int(t) for t in text[:count]], dtype=np.int64)
        if samples.max(initial=0) > maxval:
            raise FormatError(f"{path}: sample exceeds declared maxval")
    return magic, w, h, maxval, samples


def read_raster(path) -> RasterImage:
    """Load a PGM/PPM (scaled to [0, 1]) or ``bands`` file (raw floats)."""
    with open(path, "rb") as fh:
        magic = fh.read(5)
    if magic == BANDS_MAGIC:
        return read_bands(path)
    magic_pnm, w, h, maxval, samples = _read_pnm(path)
    scaled = samples.astype(np.float64) / maxval
    if magic_pnm in (b"P3", b"P6"):
        return RasterImage.from_array(scaled.reshape(h, w, 3))
    return RasterImage.from_array(scaled.reshape(h, w))


def write_pgm(path, plane, maxval: int = 255) -> None:
    """Write a [0, 1]-scaled 2-D array as binary 8-bit PGM."""
    a = np.asarray(plane, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidParameterError(f"write_pgm expects a 2-D array, got ndim={a.ndim}")
    if not 0 < maxval < 256:
        raise InvalidParameterError(f"maxval must be in [1, 255], got {maxval}")
    samples = np.clip(np.rint(a * maxval), 0, maxval).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{a.shape[1]} {a.shape[0]}\n{maxval}\n".encode("ascii"))
        fh.write(samples.tobytes())


def write_ppm(path, rgb) -> None:
    """Write a [0, 1]-scaled (height, width, 3) array as binary PPM."""
    a = np.asarray(rgb, dtype=np.float64)
    if a.ndim != 3 or a.shape[2] != 3:
        raise InvalidParameterError(f"write_ppm expects (h, w, 3), got {a.shape}")
    samples = np.clip(np.rint(a * 255), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{a.shape[1]} {a.shape[0]}\n255\n".encode("ascii"))
        fh.write(samples.tobytes())


def read_bands(path) -> RasterImage:
    with open(path, "rb") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != BANDS_MAGIC:
            raise FormatError(f"{path}: expected header 'bands <w> <h> <b>'")
        try:
            w, h, b = int(header[1]), int(header[2]), int(header[3])
        except ValueError as exc:
            raise FormatError(f"{path}: malformed bands header") from exc
        if w < 1 or h < 1 or b < 1:
            raise FormatError(f"{path}: non-positive bands dimensions")
        count = w * h * b
        data = np.frombuffer(fh.read(4 * count), dtype="<f4")
        if data.size != count:
            raise FormatError(f"{path}: truncated bands payload")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after bands payload")
    return RasterImage(width=w, height=h, bands=b,
                       data=data.astype(np.float64).reshape(b, h, w))


def write_bands(path, img: RasterImage) -> None:
    with open(path, "wb") as fh:
        fh.write(f"bands {img.width} {img.height} {img.bands}\n".encode("ascii"))
        fh.write(img.data.astype("<f4").tobytes())


def write_mask(path, mask) -> None:
    """Write integer labels as PGM gray levels (maxval = max label, min 1)."""
    labels = np.asarray(mask.labels if hasattr(mask, "labels") else mask)
    if labels.ndim != 2:
        raise InvalidParameterError(f"mask must be 2-D, got ndim={labels.ndim}")
    if labels.min(initial=0) < 0:
        raise InvalidParameterError("cannot write negative labels; resolve uncertain pixels first")
    maxval = max(1, int(labels.max(initial=0)))
    if maxval > 255:
        raise InvalidParameterError(f"labels up to {maxval} exceed 8-bit PGM range")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{labels.shape[1]} {labels.shape[0]}\n{maxval}\n".encode("ascii"))
        fh.write(labels.astype(np.uint8).tobytes())


def read_mask(path, uncertain: int | None = None) -> np.ndarray:
    """Read a label PGM; gray levels are labels, optionally one maps to -1."""
    magic, w, h, maxval, samples = _read_pnm(path)
    if magic in (b"P3", b"P6"):
        raise FormatError(f"{path}: masks must be single-band PGM")
    labels = samples.reshape(h, w)
    if uncertain is not None:
        labels = np.where(labels == uncertain, -1, labels)
    return labels


def write_sidecar(path, payload: dict) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_sidecar(path) -> dict:
    with open(path, "r", encoding="ascii") as fh:
        return json.load(fh)

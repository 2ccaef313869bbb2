"""On-disk formats: the SCUB cube container, filter-bank CSV and 16-bit PGM.

SCUB layout (all little-endian)::

    offset  size  field
    0       4     magic b"SCUB"
    4       1     version (1)
    5       4     height   (uint32)
    9       4     width    (uint32)
    13      4     bands    (uint32)
    17      8     lambda_min_nm (float64, 0 for multispectral)
    25      8     lambda_max_nm (float64, 0 for multispectral)
    33      1     kind (0 hyperspectral, 1 multispectral)
    34      ...   height*width*bands float32, band-sequential
"""

from __future__ import annotations

import csv
import os
import struct

import numpy as np

from .spectral import FilterBank, HyperCube, MultiCube, SpectralGrid

MAGIC = b"SCUB"
VERSION = 1
KIND_HYPER = 0
KIND_MULTI = 1
HEADER = struct.Struct("<4sBIIIddB")
HEADER_SIZE = HEADER.size
GRID_TOLERANCE_NM = 1e-6


class FormatError(ValueError):
    """Malformed file content.  ``offset`` is a byte offset, ``row``/``column`` CSV cells."""

    def __init__(self, message: str, *, offset=None, row=None, column=None):
        where = []
        if offset is not None:
            where.append(f"byte offset {offset}")
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.offset = offset
        self.row = row
        self.column = column


def write_cube(path, cube: HyperCube | MultiCube) -> None:
    """Write a cube as SCUB.  Samples are stored as float32."""
    if isinstance(cube, HyperCube):
        kind, lmin, lmax = KIND_HYPER, cube.grid.lambda_min, cube.grid.lambda_max
    elif isinstance(cube, MultiCube):
        kind, lmin, lmax = KIND_MULTI, 0.0, 0.0
    else:
        raise TypeError(f"cannot write {type(cube).__name__} as a cube")
    h, w, b = cube.data.shape
    header = HEADER.pack(MAGIC, VERSION, h, w, b, lmin, lmax, kind)
    payload = np.ascontiguousarray(cube.data.transpose(2, 0, 1), dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_cube(path) -> HyperCube | MultiCube:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER_SIZE:
        raise FormatError(
            f"truncated header: expected {HEADER_SIZE} bytes, got {len(raw)}", offset=len(raw)
        )
    magic, version, h, w, b, lmin, lmax, kind = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if h * w * b == 0:
        raise FormatError(f"empty cube {h}x{w}x{b}", offset=5)
    if kind not in (KIND_HYPER, KIND_MULTI):
        raise FormatError(f"unknown cube kind {kind}", offset=33)
    expected = HEADER_SIZE + 4 * h * w * b
    if len(raw) != expected:
        raise FormatError(
            f"payload size mismatch: expected {expected} bytes in total, got {len(raw)}",
            offset=min(len(raw), expected),
        )
    data = np.frombuffer(raw, dtype="<f4", offset=HEADER_SIZE).reshape(b, h, w)
    data = data.transpose(1, 2, 0).astype(np.float64)
    try:
        if kind == KIND_MULTI:
            return MultiCube(data)
        return HyperCube(SpectralGrid(lmin, lmax, b), data)
    except ValueError as exc:
        raise FormatError(f"invalid cube content: {exc}", offset=HEADER_SIZE) from exc


def _parse_row(cells, row):
    values = []
    for col, cell in enumerate(cells):
        try:
            v = float(cell)
        except ValueError:
            raise FormatError(f"non-numeric cell {cell!r}", row=row, column=col) from None
        if not np.isfinite(v):
            raise FormatError(f"non-finite cell {cell!r}", row=row, column=col)
        values.append(v)
    return values


def read_filter_csv(path) -> FilterBank:
    """Read a filter bank: first row wavelengths (nm), then one row per filter."""
    with open(path, newline="", encoding="ascii", errors="strict") as fh:
        try:
            rows = [r for r in csv.reader(fh)]
        except (UnicodeDecodeError, csv.Error) as exc:
            raise FormatError(f"unreadable CSV: {exc}") from exc
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise FormatError("need a wavelength row and at least one filter row", row=len(rows))
    lam = np.array(_parse_row(rows[0], 0))
    n = lam.size
    if n < 3:
        raise FormatError(f"need at least 3 wavelengths, got {n}", row=0)
    gaps = np.diff(lam)
    if np.any(gaps <= 0):
        col = int(np.argmax(gaps <= 0)) + 1
        raise FormatError("wavelengths must be strictly ascending", row=0, column=col)
    nominal = (lam[-1] - lam[0]) / (n - 1)
    dev = np.abs(lam - (lam[0] + nominal * np.arange(n)))
    if np.any(dev > GRID_TOLERANCE_NM):
        col = int(np.argmax(dev > GRID_TOLERANCE_NM))
        raise FormatError("wavelength grid is not uniform", row=0, column=col)
    responses = []
    for i, cells in enumerate(rows[1:], start=1):
        if len(cells) != n:
            raise FormatError(f"ragged row: {len(cells)} cells, expected {n}", row=i)
        values = _parse_row(cells, i)
        neg = [j for j, v in enumerate(values) if v < 0]
        if neg:
            raise FormatError("negative filter response", row=i, column=neg[0])
        responses.append(values)
    try:
        return FilterBank(SpectralGrid(lam[0], lam[-1], n), np.array(responses))
    except ValueError as exc:
        raise FormatError(f"invalid filter bank: {exc}") from exc


def write_filter_csv(path, bank: FilterBank) -> None:
    rows = [bank.grid.wavelengths, *bank.responses]
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def render_channel_pgm(cube: HyperCube | MultiCube, band: int, path) -> None:
    """Write one band as a binary 16-bit PGM scaled from ``[0, cube max]``."""
    n = cube.data.shape[2]
    if not 0 <= band < n:
        raise ValueError(f"band {band} out of range for a cube with {n} bands")
    plane = cube.data[:, :, band]
    peak = float(cube.data.max())
    if peak > 0:
        scaled = np.rint(np.clip(plane, 0, None) / peak * 65535.0)
    else:
        scaled = np.zeros_like(plane)
    pixels = np.clip(scaled, 0, 65535).astype(">u2")
    h, w = plane.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read back a binary PGM written by :func:`render_channel_pgm`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    parts = raw.split(maxsplit=4)
    if len(parts) < 4 or parts[0] != b"P5":
        raise FormatError("not a binary PGM", offset=0)
    try:
        w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    except ValueError:
        raise FormatError("bad PGM header", offset=0) from None
    dtype = ">u2" if maxval > 255 else "u1"
    size = w * h * np.dtype(dtype).itemsize
    body = raw[len(raw) - size :] if len(raw) >= size else b""
    if len(body) != size:
        raise FormatError(f"truncated PGM: expected {size} pixel bytes", offset=len(raw))
    return np.frombuffer(body, dtype=dtype).reshape(h, w)


def sidecar(path, suffix: str) -> str:
    return os.fspath(path) + suffix

"""Grayscale image container and PGM/PNG file I/O."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ImageFormatError(ValueError):
    """Raised for files that are not valid 8-bit grayscale images."""


@dataclass(frozen=True)
class GrayImage:
    """Rectangular 8-bit brightness matrix; row 0 is the top row as displayed."""

    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"pixels must be a 2-D matrix, got shape {px.shape}")
        if px.shape[0] < 2 or px.shape[1] < 1:
            raise ValueError(f"image must be at least 2x1, got {px.shape}")
        if px.dtype != np.uint8:
            if not np.issubdtype(px.dtype, np.integer):
                raise ValueError(f"pixel values must be integers, got dtype {px.dtype}")
            if px.min() < 0 or px.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def rows(self) -> int:
        return self.pixels.shape[0]

    @property
    def cols(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


def pgm_write(image: GrayImage, path) -> None:
    """Write a binary PGM (P5, maxval 255) file."""
    header = f"P5\n{image.cols} {image.rows}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.pixels.tobytes())


def _read_pgm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Read `count` whitespace-separated integer tokens, skipping # comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last token (per the PGM spec, raster follows it).
    """
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise ImageFormatError("truncated PGM header")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise ImageFormatError("unterminated PGM comment")
            pos = nl + 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            try:
                tokens.append(int(data[pos:end]))
            except ValueError:
                raise ImageFormatError(f"bad PGM header token {data[pos:end]!r}") from None
            pos = end
            if len(tokens) == count:
                if pos >= len(data) or not data[pos : pos + 1].isspace():
                    raise ImageFormatError("PGM header not terminated by whitespace")
                pos += 1
    return tokens, pos


def pgm_read(path) -> GrayImage:
    """Read a binary PGM (P5) file with maxval 255."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ImageFormatError("not a binary PGM (missing P5 magic)")
    (cols, rows, maxval), offset = _read_pgm_tokens(data[2:], 3)
    offset += 2
    if maxval != 255:
        raise ImageFormatError(f"unsupported PGM maxval {maxval} (need 255)")
    raster = data[offset : offset + rows * cols]
    if len(raster) != rows * cols:
        raise ImageFormatError("PGM raster shorter than header promises")
    return GrayImage(np.frombuffer(raster, dtype=np.uint8).reshape(rows, cols))


def png_read(path) -> GrayImage:
    """Read an 8-bit grayscale PNG (requires Pillow)."""
    try:
        from PIL import Image
    except ImportError:  # pragma: no cover - depends on install extras
        raise ImageFormatError("PNG support requires Pillow (pip install soundsight[png])")
    with Image.open(path) as im:
        if im.mode != "L":
            im = im.convert("L")
        return GrayImage(np.asarray(im, dtype=np.uint8))


def image_read(path) -> GrayImage:
    """Read a grayscale image, dispatching on file suffix (.pgm or .png)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".png":
        return png_read(path)
    return pgm_read(path)

"""Binary pattern masks: container type, validation, file I/O, resampling.

A mask is a row-major boolean grid; pixel (col=x, row=y) has its center at
integer coordinates (x, y).  Foreground pixels carry the pattern.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateShape, EmptyMask, MaskFileError

MIN_SIDE = 8
MIN_FOREGROUND = 16
FOREGROUND_LEVEL = 128  # file values >= this are foreground

_EIGHT_CONN = np.ones((3, 3), dtype=int)


@dataclass
class ShapeMask:
    """A segmented pattern as a binary raster.

    data is indexed [row, col]; pixel_scale is meters per pixel and only
    matters once a mask is placed on a 3D surface.
    """

    data: np.ndarray
    pixel_scale: float = 1.0
    n_components: int = field(init=False, default=0)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=bool)
        if self.data.ndim != 2:
            raise DegenerateShape("mask data must be a 2-D grid")
        h, w = self.data.shape
        if w < MIN_SIDE or h < MIN_SIDE:
            raise DegenerateShape(f"mask {w}x{h} smaller than {MIN_SIDE}x{MIN_SIDE}")
        n_fg = int(self.data.sum())
        if n_fg == 0:
            raise EmptyMask("mask has no foreground pixels")
        if n_fg < MIN_FOREGROUND:
            raise DegenerateShape(f"only {n_fg} foreground pixels (< {MIN_FOREGROUND})")
        _, self.n_components = ndimage.label(self.data, structure=_EIGHT_CONN)

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def multi_component(self):
        return self.n_components > 1

    def foreground_count(self):
        return int(self.data.sum())


def read_mask(path, pixel_scale=1.0):
    """Load a mask from a PGM (P2/P5) or grayscale PNG file."""
    try:
        with open(path, "rb") as fh:
            magic = fh.read(2)
    except OSError as exc:
        raise MaskFileError(f"cannot read {path}: {exc}") from exc
    if magic in (b"P2", b"P5"):
        grid = _read_pgm(path)
    elif magic == b"\x89P":
        grid = _read_png(path)
    else:
        raise MaskFileError(f"{path}: not a PGM or PNG file")
    return ShapeMask(grid >= FOREGROUND_LEVEL, pixel_scale=pixel_scale)


def _read_pgm(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    # header: magic, width, height, maxval, separated by whitespace/comments
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MaskFileError(f"{path}: truncated PGM header")
        tokens.append(raw[start:pos])
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise MaskFileError(f"{path}: bad PGM header") from exc
    if maxval <= 0 or maxval > 255:
        raise MaskFileError(f"{path}: unsupported PGM maxval {maxval}")
    if magic == b"P5":
        body = raw[pos + 1 :]
        if len(body) < width * height:
            raise MaskFileError(f"{path}: PGM pixel data truncated")
        grid = np.frombuffer(body[: width * height], dtype=np.uint8)
    else:  # P2, ascii
        values = raw[pos:].split()
        if len(values) < width * height:
            raise MaskFileError(f"{path}: PGM pixel data truncated")
        grid = np.array([int(v) for v in values[: width * height]], dtype=np.int32)
    grid = grid.reshape(height, width).astype(np.float64)
    if maxval != 255:
        grid = grid * (255.0 / maxval)
    return grid


def _read_png(path):
    from PIL import Image

    with Image.open(path) as img:
        grid = np.asarray(img.convert("L"), dtype=np.float64)
    return grid


def write_pgm(path, mask):
    """Write a mask (or boolean grid) as a binary PGM, foreground = 255."""
    data = mask.data if isinstance(mask, ShapeMask) else np.asarray(mask, dtype=bool)
    h, w = data.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    body = np.where(data, 255, 0).astype(np.uint8).tobytes()
    with open(path, "wb") as fh:
        fh.write(header + body)


def rescale_mask(mask, factor):
    """Uniformly rescale a mask (bilinear on the 0/1 field, re-threshold)."""
    grid = ndimage.zoom(mask.data.astype(np.float64), factor, order=1)
    return ShapeMask(grid >= 0.5, pixel_scale=mask.pixel_scale / factor)


def rotate_mask(mask, degrees):
    """Rotate a mask about its foreground centroid, counterclockwise on screen.

    Bilinear resampling with re-threshold at 0.5.  The output canvas is
    sized to hold the full sweep circle around the centroid, so nothing
    is clipped whatever the angle.
    """
    ys, xs = np.nonzero(mask.data)
    cx, cy = xs.mean(), ys.mean()
    reach = int(np.ceil(np.hypot(xs - cx, ys - cy).max())) + 2
    side = 2 * reach + 1
    rad = np.deg2rad(degrees)
    c, s = np.cos(rad), np.sin(rad)
    grid = np.arange(side, dtype=np.float64) - reach
    gx, gy = np.meshgrid(grid, grid)
    # screen-CCW rotation in y-down pixel coords: inverse map uses angle -deg
    src_x = c * gx - s * gy + cx
    src_y = s * gx + c * gy + cy
    vals = ndimage.map_coordinates(
        mask.data.astype(np.float64), [src_y.ravel(), src_x.ravel()], order=1, cval=0.0
    ).reshape(side, side)
    return ShapeMask(vals >= 0.5, pixel_scale=mask.pixel_scale)

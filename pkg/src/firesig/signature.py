"""Rotating-line aspect-ratio signatures of binary shape masks.

A line anchored at the shape centroid sweeps a full turn in 1-degree steps.
At each angle the extent of the shape envelope along the line is measured
and the 360 extents are normalized by the largest one, giving a
scale-invariant 360-sample shape descriptor.

Angle convention: theta = 0 points toward the top of the image and theta
increases counterclockwise as seen by the viewer.
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateShape
from .mask import ShapeMask

N_ANGLES = 360
MARCH_STEP = 0.25  # pixels, sampling step along the sweeping line
HIT_LEVEL = 0.5  # bilinear foreground threshold


class ChordMode(enum.Enum):
    """How the line extent is measured at each angle.

    RAY_ENVELOPE: distance from the centroid to the farthest foreground
    hit along the one-sided ray.  Not 180-degree periodic, so it can tell
    up-heavy shapes from down-heavy ones.

    FULL_LINE_ENVELOPE: span between the two outermost foreground hits of
    the full line through the centroid.  180-degree periodic by
    construction.
    """

    RAY_ENVELOPE = "ray"
    FULL_LINE_ENVELOPE = "line"


@dataclass
class AspectSignature:
    values: np.ndarray  # 360 aspect ratios in [0, 1], max is exactly 1
    centroid: tuple  # (x, y) pixel coordinates
    max_chord: float  # pixels, the normalizer
    mode: ChordMode = ChordMode.RAY_ENVELOPE
    multi_component: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)


def compute_centroid(mask):
    """Arithmetic mean (x, y) of the foreground pixel centers.

    Accepts a ShapeMask or a plain boolean grid.
    """
    from .errors import EmptyMask

    grid = mask.data if isinstance(mask, ShapeMask) else np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(grid)
    if len(xs) == 0:
        raise EmptyMask("no foreground pixels")
    return float(xs.mean()), float(ys.mean())


def _direction(theta_deg):
    """Unit vector(s) for angles in degrees, image-up zero, CCW positive."""
    rad = np.deg2rad(np.asarray(theta_deg, dtype=np.float64))
    return -np.sin(rad), -np.cos(rad)


def _march_values(grid, centroid, thetas, t_grid):
    """Bilinear samples of the mask along rays.

    Rows follow thetas, columns follow t_grid (distances from centroid).
    """
    dx, dy = _direction(thetas)
    cx, cy = centroid
    px = cx + np.outer(dx, t_grid)
    py = cy + np.outer(dy, t_grid)
    vals = ndimage.map_coordinates(
        grid, [py.ravel(), px.ravel()], order=1, cval=0.0, mode="constant"
    )
    return vals.reshape(px.shape)


def _ray_extents(vals, t_grid):
    """Per-row (first_hit, last_hit) distances; NaN where a ray misses.

    The winning samples are refined by interpolating the threshold
    crossing within their march step, so the reported extent is not
    quantized to the step grid.
    """
    hits = vals >= HIT_LEVEL
    rows = np.arange(len(vals))
    any_hit = hits.any(axis=1)
    first_idx = np.argmax(hits, axis=1)
    last_idx = hits.shape[1] - 1 - np.argmax(hits[:, ::-1], axis=1)

    first = t_grid[first_idx].astype(np.float64)
    inner = first_idx > 0
    v_hit = vals[rows[inner], first_idx[inner]]
    v_out = vals[rows[inner], first_idx[inner] - 1]
    first[inner] -= MARCH_STEP * (v_hit - HIT_LEVEL) / (v_hit - v_out)

    last = t_grid[last_idx].astype(np.float64)
    outer = last_idx < hits.shape[1] - 1
    v_hit = vals[rows[outer], last_idx[outer]]
    v_out = vals[rows[outer], last_idx[outer] + 1]
    last[outer] += MARCH_STEP * (v_hit - HIT_LEVEL) / (v_hit - v_out)

    return np.where(any_hit, first, np.nan), np.where(any_hit, last, np.nan)


def chord_lengths(mask: ShapeMask, centroid, thetas, mode=ChordMode.RAY_ENVELOPE):
    """Envelope extents for an array of angles (degrees), in pixels.

    The line is marched outward from the centroid at MARCH_STEP-pixel
    steps with a bilinear foreground test; the farthest hit wins, so
    interior holes of non-convex shapes do not shorten the chord.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    grid = mask.data.astype(np.float64)
    cx, cy = centroid
    # march only as far as the foreground bounding box can reach
    ys, xs = np.nonzero(mask.data)
    r_max = max(
        np.hypot(cx - x, cy - y)
        for x in (xs.min() - 1.0, xs.max() + 1.0)
        for y in (ys.min() - 1.0, ys.max() + 1.0)
    )
    t_grid = np.arange(0.0, r_max + MARCH_STEP, MARCH_STEP)

    fwd_first, fwd_last = _ray_extents(
        _march_values(grid, centroid, thetas, t_grid), t_grid
    )
    if mode is ChordMode.RAY_ENVELOPE:
        return np.where(np.isnan(fwd_last), 0.0, fwd_last)

    bwd_first, bwd_last = _ray_extents(
        _march_values(grid, centroid, thetas + 180.0, t_grid), t_grid
    )
    # signed positions along the line: forward hits at +t, backward at -t
    hi = np.where(np.isnan(fwd_last), -bwd_first, fwd_last)
    lo = np.where(np.isnan(bwd_last), fwd_first, -bwd_last)
    span = hi - lo
    return np.where(np.isnan(span), 0.0, span)


def chord_length(mask: ShapeMask, centroid, theta, mode=ChordMode.RAY_ENVELOPE):
    """Envelope extent at a single angle (degrees), in pixels."""
    return float(chord_lengths(mask, centroid, [theta], mode)[0])


def aspect_signature(mask: ShapeMask, mode=ChordMode.RAY_ENVELOPE):
    """Sweep the full turn at 1-degree resolution and normalize.

    Raises DegenerateShape when no angle meets the foreground.
    """
    centroid = compute_centroid(mask)
    thetas = np.arange(N_ANGLES, dtype=np.float64)
    chords = chord_lengths(mask, centroid, thetas, mode)
    max_chord = float(chords.max())
    if max_chord <= 0.0:
        raise DegenerateShape("all sweep angles miss the foreground")
    return AspectSignature(
        values=chords / max_chord,
        centroid=centroid,
        max_chord=max_chord,
        mode=mode,
        multi_component=mask.multi_component,
    )


def write_signature_csv(path, sig: AspectSignature):
    """CSV with header theta,aspect_ratio and one row per degree."""
    lines = ["theta,aspect_ratio"]
    for theta in range(N_ANGLES):
        lines.append(f"{theta},{sig.values[theta]:.9f}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_signature_csv(path):
    values = np.zeros(N_ANGLES)
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "theta,aspect_ratio":
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in fh:
            theta_s, val_s = line.strip().split(",")
            values[int(theta_s)] = float(val_s)
    return values

"""Synthetic labeled fire-pattern masks for the seven shape families.

Eight generators (both triangle orientations) produce canonical upright
outlines which are then roughened: boundary resampling, per-vertex radial
noise, a low-frequency horizontal warp, small rotation jitter, even-odd
rasterization and Gaussian edge smoothing.  Shapes stay gravity-anchored;
only the small jitter rotates them.

Triangle orientation follows the widening direction of the plume: a
TRIANGLE_UP pattern widens upward (apex at the bottom), the inverted-cone
TRIANGLE_DOWN widens downward (apex at the top).
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateShape
from .mask import ShapeMask, write_pgm

BOUNDARY_POINTS = 256
MAX_RETRIES = 10
_RETRY_SLOTS = 16  # > MAX_RETRIES, keeps per-sample substream keys disjoint


class PatternClass(enum.Enum):
    CIRCLE = "circle"
    HALF_CIRCLE = "half_circle"
    HOURGLASS = "hourglass"
    RECTANGLE = "rectangle"
    TRIANGLE_UP = "triangle_up"
    TRIANGLE_DOWN = "triangle_down"
    V_SHAPE = "v_shape"
    U_SHAPE = "u_shape"


GENERATOR_CLASSES = list(PatternClass)

# 7-class evaluation grouping: both triangle orientations fold together
GROUP_LABELS = {
    PatternClass.CIRCLE: "circle",
    PatternClass.HALF_CIRCLE: "half_circle",
    PatternClass.HOURGLASS: "hourglass",
    PatternClass.RECTANGLE: "rectangle",
    PatternClass.TRIANGLE_UP: "triangle",
    PatternClass.TRIANGLE_DOWN: "triangle",
    PatternClass.V_SHAPE: "v_shape",
    PatternClass.U_SHAPE: "u_shape",
}


@dataclass
class SynthConfig:
    canvas: int = 256
    n_per_class: int = 10
    seed: int = 0
    noise_amplitude: float = 0.06  # fraction of local radius
    smoothing_sigma: float = 2.0  # pixels
    distortion_amplitude: float = 0.08  # fraction of mean radius
    rotation_jitter: float = 5.0  # degrees, +/-
    scale_range: tuple = (0.55, 0.90)  # of canvas
    # strength of per-sample proportion variation (0 = canonical outlines
    # only); real surveys mix e.g. squat and columnar rectangles, so the
    # class distributions genuinely overlap like the reported ones do
    shape_jitter: float = 1.0

    def __post_init__(self):
        if self.canvas < 16:
            raise ValueError("canvas too small")
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be >= 1")
        for name in ("noise_amplitude", "smoothing_sigma", "distortion_amplitude"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.rotation_jitter < 0:
            raise ValueError("rotation_jitter must be >= 0")
        if not 0 <= self.shape_jitter <= 2:
            raise ValueError("shape_jitter must be in [0, 2]")
        lo, hi = self.scale_range
        if not (0 < lo <= hi <= 1):
            raise ValueError("scale_range must sit inside (0, 1]")

    def clean(self):
        """Copy with every stochastic perturbation switched off."""
        import dataclasses

        return dataclasses.replace(
            self,
            noise_amplitude=0.0,
            distortion_amplitude=0.0,
            rotation_jitter=0.0,
            shape_jitter=0.0,
        )


@dataclass
class GeneratedSample:
    mask: ShapeMask
    pattern_class: PatternClass
    index: int
    seed_offset: int
    scale: float
    rotation: float

    @property
    def filename(self):
        return f"{self.pattern_class.value}_{self.index:04d}.pgm"


# canonical shape proportions; per-sample variation multiplies or offsets
# these within the bounds drawn in _draw_proportions
CANONICAL = {
    "circle_stretch": 1.0,  # vertical/horizontal axis ratio
    "half_circle_sweep": 180.0,  # degrees of arc
    "hourglass_half_width": 0.33,  # of size
    "hourglass_waist": 0.075,  # half waist width, of size (waist = 0.15*scale)
    "rectangle_aspect": 2.2,  # height / width
    "triangle_apex": 50.0,  # degrees
    "v_leg_width": 0.22,  # of size
    "v_opening": 70.0,  # degrees
    "u_aspect": 1.3,  # outer box height / width
    "u_notch_width": 0.5,  # of box width
    "u_notch_depth": 0.6,  # of box height
}


def base_polygon(pattern_class, scale, canvas=256):
    """Canonical upright outline, vertices in canvas pixel coordinates.

    Each shape fits a box of size ~scale*canvas centered on the canvas.
    Image convention: y grows downward, so "top" vertices have small y.
    """
    return _polygon(pattern_class, scale, canvas, CANONICAL)


def _polygon(pattern_class, scale, canvas, prop):
    size = scale * canvas
    cx = cy = (canvas - 1) / 2.0

    if pattern_class is PatternClass.CIRCLE:
        phi = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
        stretch = prop["circle_stretch"]
        pts = np.column_stack([np.cos(phi), np.sin(phi) * stretch]) * (size / 2.0)
    elif pattern_class is PatternClass.HALF_CIRCLE:
        # dome on top, flat side closing the bottom; sweep 180 = half disk
        r = size / 2.0
        half_sweep = np.deg2rad(prop["half_circle_sweep"]) / 2.0
        phi = np.linspace(np.pi / 2 - half_sweep, np.pi / 2 + half_sweep, 33)
        arc = np.column_stack([np.cos(phi), -np.sin(phi)]) * r
        arc[:, 1] -= arc[:, 1].mean()
        pts = arc[::-1]
    elif pattern_class is PatternClass.HOURGLASS:
        half_w = prop["hourglass_half_width"] * size
        waist = prop["hourglass_waist"] * size
        half_h = size / 2.0
        pts = np.array(
            [
                (-half_w, -half_h),
                (half_w, -half_h),
                (waist, 0.0),
                (half_w, half_h),
                (-half_w, half_h),
                (-waist, 0.0),
            ]
        )
    elif pattern_class is PatternClass.RECTANGLE:
        half_h = size / 2.0
        half_w = half_h / prop["rectangle_aspect"]
        pts = np.array(
            [(-half_w, -half_h), (half_w, -half_h), (half_w, half_h), (-half_w, half_h)]
        )
    elif pattern_class in (PatternClass.TRIANGLE_UP, PatternClass.TRIANGLE_DOWN):
        half_h = size / 2.0
        half_base = size * np.tan(np.deg2rad(prop["triangle_apex"] / 2.0))
        if pattern_class is PatternClass.TRIANGLE_UP:
            # widens upward: base on top, apex at the bottom
            pts = np.array([(-half_base, -half_h), (half_base, -half_h), (0.0, half_h)])
        else:
            pts = np.array([(0.0, -half_h), (half_base, half_h), (-half_base, half_h)])
    elif pattern_class is PatternClass.V_SHAPE:
        pts = _v_polygon(size, prop["v_leg_width"], prop["v_opening"])
    elif pattern_class is PatternClass.U_SHAPE:
        pts = _u_polygon(
            size, prop["u_aspect"], prop["u_notch_width"], prop["u_notch_depth"]
        )
    else:  # pragma: no cover
        raise ValueError(f"unknown pattern class {pattern_class}")

    return pts + np.array([cx, cy])


# plausibility interval of each proportion at full jitter; the endpoints
# deliberately reach class-degeneration points (a barely-there U notch is
# a rectangle, a fully thickened V is a triangle) so class distributions
# overlap the way the survey data does
PROPORTION_RANGES = {
    "circle_stretch": (0.68, 1.45),
    "half_circle_sweep": (85.0, 350.0),
    "hourglass_half_width": (0.24, 0.47),
    "rectangle_aspect": (1.05, 4.00),
    "triangle_apex": (22.0, 100.0),
    "v_leg_width": (0.07, 0.47),
    "v_opening": (40.0, 108.0),
    "u_aspect": (0.90, 2.60),
    "u_notch_width": (0.07, 0.85),
    "u_notch_depth": (0.03, 0.85),
}
_HOURGLASS_WAIST_RATIO = (0.03, 0.97)  # waist as fraction of half width


def _draw_proportions(rng, jitter):
    """Per-sample proportion draw, jitter interpolating toward canonical.

    At jitter 1 each proportion is uniform over its plausibility range;
    at 0 the canonical value is returned.  Every parameter is drawn for
    every sample (the draw count stays constant across classes); the
    hourglass waist is relative to its already-drawn half width.
    """
    prop = dict(CANONICAL)
    if jitter <= 0:
        return prop

    def draw(name):
        lo, hi = PROPORTION_RANGES[name]
        return float(CANONICAL[name] + (rng.uniform(lo, hi) - CANONICAL[name]) * jitter)

    for name in PROPORTION_RANGES:
        prop[name] = draw(name)
    ratio_c = CANONICAL["hourglass_waist"] / CANONICAL["hourglass_half_width"]
    lo, hi = _HOURGLASS_WAIST_RATIO
    ratio = ratio_c + (rng.uniform(lo, hi) - ratio_c) * jitter
    prop["hourglass_waist"] = float(ratio * prop["hourglass_half_width"])
    return prop


def _v_polygon(size, leg_width, opening_deg):
    """Two legs meeting at a bottom vertex, opening upward."""
    half_open = np.deg2rad(opening_deg) / 2.0
    sin_o, cos_o = np.sin(half_open), np.cos(half_open)
    width = leg_width * size
    half_w = size / 2.0  # outer top corners at +/- half_w
    height = half_w / np.tan(half_open)
    y_bottom = height / 2.0
    y_top = -height / 2.0
    inner_apex_y = y_bottom - width / sin_o
    # inner edge top intersection with the flat cut at y_top
    t = (y_bottom - y_top - width * sin_o) / cos_o
    inner_top_x = t * sin_o - width * cos_o
    return np.array(
        [
            (0.0, y_bottom),
            (half_w, y_top),
            (inner_top_x, y_top),
            (0.0, inner_apex_y),
            (-inner_top_x, y_top),
            (-half_w, y_top),
        ]
    )


def _u_polygon(size, aspect, notch_width, notch_depth):
    """Outer box minus a centered top-opening rectangular notch."""
    half_h = size / 2.0
    half_w = half_h / aspect
    notch_half = notch_width * half_w
    notch_floor = -half_h + notch_depth * size
    return np.array(
        [
            (-half_w, half_h),
            (half_w, half_h),
            (half_w, -half_h),
            (notch_half, -half_h),
            (notch_half, notch_floor),
            (-notch_half, notch_floor),
            (-notch_half, -half_h),
            (-half_w, -half_h),
        ]
    )


def resample_boundary(poly, n_points=BOUNDARY_POINTS):
    """Resample a closed polygon to n_points at uniform arc length."""
    closed = np.vstack([poly, poly[:1]])
    seg = np.diff(closed, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = cum[-1]
    targets = np.linspace(0.0, total, n_points, endpoint=False)
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(seg_len) - 1)
    frac = (targets - cum[idx]) / np.where(seg_len[idx] > 0, seg_len[idx], 1.0)
    return closed[idx] + seg[idx] * frac[:, None]


def rasterize_polygon(poly, canvas):
    """Even-odd scanline fill of a closed polygon on a canvas x canvas grid.

    A pixel is foreground when a rightward ray from its center (integer
    coordinates) crosses the boundary an odd number of times.
    """
    h = w = canvas
    x1 = poly[:, 0]
    y1 = poly[:, 1]
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)

    ylo = np.minimum(y1, y2)
    yhi = np.maximum(y1, y2)
    row_start = np.maximum(np.ceil(ylo), 0).astype(int)
    row_stop = np.minimum(np.ceil(yhi) - 1, h - 1).astype(int)  # half-open span
    counts = np.maximum(row_stop - row_start + 1, 0)
    keep = (counts > 0) & (y1 != y2)
    if not keep.any():
        return np.zeros((h, w), dtype=bool)

    counts = counts[keep]
    starts = row_start[keep]
    ex1, ey1 = x1[keep], y1[keep]
    slope = (x2[keep] - ex1) / (y2[keep] - ey1)

    rows = np.repeat(starts, counts) + _ragged_arange(counts)
    x_int = np.repeat(ex1, counts) + (rows - np.repeat(ey1, counts)) * np.repeat(
        slope, counts
    )
    cols = np.clip(np.ceil(x_int), 0, w).astype(int)

    events = np.zeros((h, w + 1), dtype=np.int32)
    np.add.at(events, (rows, cols), 1)
    crossings = np.cumsum(events[:, ::-1], axis=1)[:, ::-1]
    return (crossings[:, 1:] % 2) == 1


def _ragged_arange(counts):
    """concatenate(arange(c) for c in counts) without a Python loop."""
    total = int(counts.sum())
    out = np.arange(total)
    offsets = np.repeat(np.cumsum(counts) - counts, counts)
    return out - offsets


def perturb_and_rasterize(poly, cfg, rng, rotation_deg=None):
    """Roughen one outline and rasterize it to a ShapeMask.

    Fixed pipeline: resample boundary, radial vertex noise, horizontal
    sine warp, rotation jitter, even-odd fill, Gaussian blur with
    re-threshold.  rotation_deg overrides the jitter draw when given.
    """
    pts = resample_boundary(np.asarray(poly, dtype=np.float64))
    center = pts.mean(axis=0)

    radial = pts - center
    local_r = np.hypot(radial[:, 0], radial[:, 1])
    if cfg.noise_amplitude > 0:
        noise = rng.uniform(-cfg.noise_amplitude, cfg.noise_amplitude, len(pts))
        safe_r = np.where(local_r > 0, local_r, 1.0)
        pts = pts + radial / safe_r[:, None] * (noise * local_r)[:, None]

    if cfg.distortion_amplitude > 0:
        amp = cfg.distortion_amplitude * local_r.mean()
        wavelength = cfg.canvas / 2.0
        pts[:, 0] += amp * np.sin(2.0 * np.pi * pts[:, 1] / wavelength)

    if rotation_deg is None:
        rotation_deg = (
            rng.uniform(-cfg.rotation_jitter, cfg.rotation_jitter)
            if cfg.rotation_jitter > 0
            else 0.0
        )
    if rotation_deg != 0.0:
        rad = np.deg2rad(rotation_deg)
        c, s = np.cos(rad), np.sin(rad)
        rel = pts - center
        # screen-CCW rotation in y-down coordinates
        pts = np.column_stack(
            [c * rel[:, 0] + s * rel[:, 1], -s * rel[:, 0] + c * rel[:, 1]]
        ) + center

    grid = rasterize_polygon(pts, cfg.canvas)
    if cfg.smoothing_sigma > 0:
        field = ndimage.gaussian_filter(
            grid.astype(np.float64), cfg.smoothing_sigma, mode="constant", cval=0.0
        )
        grid = field >= 0.5
    return ShapeMask(grid)  # raises DegenerateShape on tiny remnants


def _sample_rng(seed, sample_key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, sample_key])))


def _make_sample(cfg, class_index, sample_index):
    cls = GENERATOR_CLASSES[class_index]
    flat = class_index * cfg.n_per_class + sample_index
    for attempt in range(MAX_RETRIES):
        key = flat * _RETRY_SLOTS + attempt
        rng = _sample_rng(cfg.seed, key)
        scale = rng.uniform(*cfg.scale_range)
        rotation = (
            rng.uniform(-cfg.rotation_jitter, cfg.rotation_jitter)
            if cfg.rotation_jitter > 0
            else 0.0
        )
        prop = _draw_proportions(rng, cfg.shape_jitter)
        poly = _polygon(cls, scale, cfg.canvas, prop)
        try:
            mask = perturb_and_rasterize(poly, cfg, rng, rotation_deg=rotation)
        except DegenerateShape:
            continue
        return GeneratedSample(
            mask=mask,
            pattern_class=cls,
            index=sample_index,
            seed_offset=key,
            scale=scale,
            rotation=rotation,
        )
    raise DegenerateShape(
        f"{cls.value}[{sample_index}]: no valid mask in {MAX_RETRIES} attempts"
    )


def generate_dataset(cfg, n_threads=1):
    """Generate the balanced dataset described by cfg.

    Returns a list of GeneratedSample in class-major, index-minor order.
    Every sample is drawn from its own seed substream, so the output is
    identical regardless of generation order or thread count; a
    degenerate draw is retried on the next substream slot, at most
    MAX_RETRIES times.
    """
    jobs = [
        (ci, si)
        for ci in range(len(GENERATOR_CLASSES))
        for si in range(cfg.n_per_class)
    ]
    if n_threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            return list(pool.map(lambda job: _make_sample(cfg, *job), jobs))
    return [_make_sample(cfg, ci, si) for ci, si in jobs]


MANIFEST_HEADER = "filename,class,seed_offset,scale,rotation"


def write_dataset(samples, out_dir):
    """Write PGM masks plus the provenance manifest into out_dir."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    lines = [MANIFEST_HEADER]
    for s in samples:
        write_pgm(os.path.join(out_dir, s.filename), s.mask)
        lines.append(
            f"{s.filename},{s.pattern_class.value},{s.seed_offset},"
            f"{s.scale!r},{s.rotation!r}"
        )
    with open(os.path.join(out_dir, "manifest.csv"), "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(data_dir):
    """Read a generated dataset back; returns (masks, classes, manifest rows)."""
    import os

    from .mask import read_mask

    manifest_path = os.path.join(data_dir, "manifest.csv")
    masks, classes, rows = [], [], []
    with open(manifest_path, encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != MANIFEST_HEADER:
            raise ValueError(f"{manifest_path}: unexpected header {header!r}")
        for line in fh:
            fname, cls_name, seed_offset, scale, rotation = line.strip().split(",")
            masks.append(read_mask(os.path.join(data_dir, fname)))
            classes.append(PatternClass(cls_name))
            rows.append(
                {
                    "filename": fname,
                    "class": cls_name,
                    "seed_offset": int(seed_offset),
                    "scale": float(scale),
                    "rotation": float(rotation),
                }
            )
    return masks, classes, rows

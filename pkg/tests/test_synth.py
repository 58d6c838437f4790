import numpy as np
import pytest
from scipy import ndimage

from firesig.errors import DegenerateShape
from firesig.features import detect_extrema
from firesig.mask import write_pgm
from firesig.signature import aspect_signature, compute_centroid
from firesig.synth import (
    CANONICAL,
    GENERATOR_CLASSES,
    GROUP_LABELS,
    PatternClass,
    SynthConfig,
    _draw_proportions,
    _make_sample,
    base_polygon,
    generate_dataset,
    load_dataset,
    perturb_and_rasterize,
    rasterize_polygon,
    resample_boundary,
    write_dataset,
)


def test_circle_polygon_construction():
    poly = base_polygon(PatternClass.CIRCLE, 0.8, 256)
    center = np.array([127.5, 127.5])
    radii = np.linalg.norm(poly - center, axis=1)
    assert len(poly) == 64
    assert np.abs(radii - 0.4 * 256).max() < 1e-9


def test_rectangle_polygon_construction():
    poly = base_polygon(PatternClass.RECTANGLE, 0.7, 256)
    assert len(poly) == 4
    w = poly[:, 0].max() - poly[:, 0].min()
    h = poly[:, 1].max() - poly[:, 1].min()
    assert h / w == pytest.approx(2.2, abs=1e-9)


def test_hourglass_centroid_centered():
    poly = base_polygon(PatternClass.HOURGLASS, 0.8, 256)
    grid = rasterize_polygon(poly, 256)
    cx, _ = compute_centroid(grid)
    assert abs(cx - 127.5) <= 1.0


def test_triangle_orientations():
    # TRIANGLE_UP widens upward: wide row count at small y (image top)
    up = rasterize_polygon(base_polygon(PatternClass.TRIANGLE_UP, 0.8, 128), 128)
    down = rasterize_polygon(base_polygon(PatternClass.TRIANGLE_DOWN, 0.8, 128), 128)
    up_rows = up.sum(axis=1)
    down_rows = down.sum(axis=1)
    top = slice(10, 40)
    bottom = slice(88, 118)
    assert up_rows[top].sum() > up_rows[bottom].sum()
    assert down_rows[top].sum() < down_rows[bottom].sum()


def test_resample_boundary_uniform():
    square = np.array([(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)])
    pts = resample_boundary(square, 64)
    assert pts.shape == (64, 2)
    seg = np.diff(np.vstack([pts, pts[:1]]), axis=0)
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    assert np.abs(lengths - 40.0 / 64).max() < 1e-9


def test_even_odd_fill_hollow_shape():
    # self-overlapping bow-tie style ring: even-odd leaves the middle empty
    outer = [(10, 10), (50, 10), (50, 50), (10, 50)]
    inner = [(20, 20), (40, 20), (40, 40), (20, 40)]
    poly = np.array(outer + [outer[0]] + inner[::-1] + [inner[0]], dtype=float)
    grid = rasterize_polygon(poly, 64)
    assert grid[15, 30]  # between outer and inner boundary
    assert not grid[30, 30]  # inside the inner boundary: crossed twice


def test_identity_pipeline_matches_plain_rasterization():
    cfg = SynthConfig(
        noise_amplitude=0.0,
        smoothing_sigma=0.0,
        distortion_amplitude=0.0,
        rotation_jitter=0.0,
        shape_jitter=0.0,
    )
    rng = np.random.default_rng(0)
    for cls in (PatternClass.RECTANGLE, PatternClass.U_SHAPE, PatternClass.V_SHAPE):
        poly = base_polygon(cls, 0.8, cfg.canvas)
        direct = rasterize_polygon(resample_boundary(poly), cfg.canvas)
        piped = perturb_and_rasterize(poly, cfg, rng)
        assert np.array_equal(piped.data, direct)


def test_same_seed_identical_bytes(tmp_path):
    cfg = SynthConfig(n_per_class=2, seed=123)
    a = generate_dataset(cfg)
    b = generate_dataset(cfg)
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.mask.data, sb.mask.data)
        assert sa.seed_offset == sb.seed_offset
        assert sa.scale == sb.scale and sa.rotation == sb.rotation
    pa, pb = tmp_path / "a.pgm", tmp_path / "b.pgm"
    write_pgm(pa, a[0].mask)
    write_pgm(pb, b[0].mask)
    assert pa.read_bytes() == pb.read_bytes()


def test_thread_count_does_not_change_output():
    cfg = SynthConfig(n_per_class=2, seed=9)
    serial = generate_dataset(cfg, n_threads=1)
    threaded = generate_dataset(cfg, n_threads=4)
    for sa, sb in zip(serial, threaded):
        assert np.array_equal(sa.mask.data, sb.mask.data)


def test_dataset_counting_and_manifest(tmp_path):
    cfg = SynthConfig(n_per_class=3, seed=7)
    samples = generate_dataset(cfg)
    assert len(samples) == 24  # 8 generator classes
    out = tmp_path / "d"
    write_dataset(samples, out)
    manifest = (out / "manifest.csv").read_text().splitlines()
    assert manifest[0] == "filename,class,seed_offset,scale,rotation"
    assert len(manifest) == 25
    masks, classes, rows = load_dataset(out)
    assert len(masks) == 24
    assert classes[0] is PatternClass.CIRCLE
    assert np.array_equal(masks[5].data, samples[5].mask.data)

    out2 = tmp_path / "d2"
    write_dataset(generate_dataset(cfg), out2)
    assert (out / "manifest.csv").read_bytes() == (out2 / "manifest.csv").read_bytes()


def test_group_labels_cover_all_classes():
    assert set(GROUP_LABELS) == set(GENERATOR_CLASSES)
    assert GROUP_LABELS[PatternClass.TRIANGLE_UP] == "triangle"
    assert GROUP_LABELS[PatternClass.TRIANGLE_DOWN] == "triangle"
    assert len(set(GROUP_LABELS.values())) == 7


def test_proportions_at_zero_jitter_are_canonical():
    rng = np.random.default_rng(0)
    assert _draw_proportions(rng, 0.0) == CANONICAL


def test_degenerate_scale_raises():
    cfg = SynthConfig(n_per_class=1, seed=0, scale_range=(0.008, 0.009))
    with pytest.raises(DegenerateShape):
        generate_dataset(cfg)


def test_triangle_down_mean_signature_counts():
    # defaults; the averaged curve over 100 samples shows 2 peaks, 3 valleys
    cfg = SynthConfig(n_per_class=100, seed=11)
    ci = GENERATOR_CLASSES.index(PatternClass.TRIANGLE_DOWN)
    sigs = []
    for si in range(cfg.n_per_class):
        sample = _make_sample(cfg, ci, si)
        sigs.append(aspect_signature(sample.mask).values)
    mean_sig = np.mean(sigs, axis=0)
    peaks, valleys = detect_extrema(mean_sig)
    assert len(peaks) == 2
    assert len(valleys) == 3


def test_clean_mean_curves_qualitative():
    # clean per-class mean curves show the canonical structure: a flat
    # circle line, four rectangle peaks, an M-shaped half-circle curve
    cfg = SynthConfig(n_per_class=20, seed=13).clean()
    curves = {}
    for cls in (PatternClass.CIRCLE, PatternClass.RECTANGLE, PatternClass.HALF_CIRCLE):
        ci = GENERATOR_CLASSES.index(cls)
        sigs = [
            aspect_signature(_make_sample(cfg, ci, si).mask).values
            for si in range(cfg.n_per_class)
        ]
        curves[cls] = np.mean(sigs, axis=0)

    flat = curves[PatternClass.CIRCLE]
    assert flat.max() - flat.min() < 0.05

    peaks, _ = detect_extrema(curves[PatternClass.RECTANGLE])
    assert len(peaks) == 4

    peaks, valleys = detect_extrema(curves[PatternClass.HALF_CIRCLE])
    assert len(peaks) == 2
    assert len(valleys) == 1
    assert peaks[0].angle < valleys[0].angle < peaks[1].angle  # the M dip


def _hausdorff(a, b):
    da = ndimage.distance_transform_edt(~a)
    db = ndimage.distance_transform_edt(~b)
    return max(da[b].max() if b.any() else 0.0, db[a].max() if a.any() else 0.0)


def test_perturbation_boundedness():
    cfg = SynthConfig(n_per_class=7, seed=21, shape_jitter=0.0)
    bound = (
        cfg.noise_amplitude
        + cfg.distortion_amplitude
        + 3.0 * cfg.smoothing_sigma / cfg.canvas
    ) * cfg.canvas
    clean = cfg.clean()
    checked = 0
    for ci, cls in enumerate(GENERATOR_CLASSES):
        for si in range(cfg.n_per_class):
            perturbed = _make_sample(cfg, ci, si)
            base = _make_sample(clean, ci, si)
            assert perturbed.scale == base.scale
            d = _hausdorff(perturbed.mask.data, base.mask.data)
            assert d <= bound, f"{cls.value}[{si}]: hausdorff {d:.1f} > {bound:.1f}"
            checked += 1
            if checked >= 50:
                return

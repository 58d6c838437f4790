import numpy as np
import pytest

from firesig.cloud import PointCloud, read_ply, read_xyz, write_ply
from firesig.errors import (
    DanglingReference,
    DegenerateBasis,
    EmptyProjection,
    NoPlanesFound,
    ClipWarning,
)
from firesig.mask import ShapeMask
from firesig.scene3d import (
    FurnitureBox,
    GraphConfig,
    PlanarSegment,
    ProjectedPattern,
    SegmentKind,
    SegmentationConfig,
    build_scene_graph,
    plane_basis,
    plane_to_image,
    project_mask,
    segment_planes,
)

from oracles import box_room


def make_cloud(points, gravity=None):
    return PointCloud(points=np.asarray(points, dtype=np.float64), gravity=gravity)


def manual_segment(points, normal, offset, kind=SegmentKind.WALL, eps=0.02):
    points = np.asarray(points, dtype=np.float64)
    u, v = plane_basis(np.asarray(normal, dtype=np.float64), np.array([0.0, 0.0, 1.0]), kind)
    return PlanarSegment(
        id=f"{kind.value.lower()}_0",
        kind=kind,
        normal=np.asarray(normal, dtype=np.float64),
        offset=float(offset),
        inlier_indices=np.arange(len(points)),
        points=points,
        basis_u=u,
        basis_v=v,
        origin=points.mean(axis=0),
        inlier_eps=eps,
    )


def wall_grid(width=4.0, height=3.0, density=20.0, x=0.0, noise=0.0, seed=0):
    """Regular grid on the plane x = const, y in [0,width], z in [0,height]."""
    ny, nz = int(width * density), int(height * density)
    y = (np.arange(ny) + 0.5) / density
    z = (np.arange(nz) + 0.5) / density
    gy, gz = np.meshgrid(y, z)
    pts = np.column_stack([np.full(gy.size, x), gy.ravel(), gz.ravel()])
    if noise > 0:
        pts[:, 0] += np.random.default_rng(seed).normal(0, noise, len(pts))
    return pts


# ---------------------------------------------------------------------------
# cloud parsing
# ---------------------------------------------------------------------------


def test_ply_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    pts = rng.uniform(-2, 2, (150, 3))
    colors = rng.integers(0, 255, (150, 3)).astype(np.uint8)
    path = tmp_path / "c.ply"
    write_ply(path, pts, colors)
    cloud = read_ply(path)
    assert len(cloud) == 150
    assert np.abs(cloud.points - pts).max() < 1e-5
    assert np.array_equal(cloud.colors, colors)
    assert np.array_equal(cloud.gravity, [0, 0, 1])


def test_xyz_read(tmp_path):
    pts = np.arange(360.0).reshape(120, 3)
    path = tmp_path / "c.xyz"
    np.savetxt(path, pts)
    cloud = read_xyz(path)
    assert np.abs(cloud.points - pts).max() < 1e-9


def test_ply_rejects_garbage(tmp_path):
    path = tmp_path / "bad.ply"
    path.write_text("not a ply\n1 2 3\n")
    with pytest.raises(ValueError):
        read_ply(path)


def test_cloud_invariants():
    with pytest.raises(ValueError):
        make_cloud(np.full((120, 3), np.nan))
    with pytest.raises(ValueError):
        PointCloud(points=np.zeros((10, 2)))


# ---------------------------------------------------------------------------
# plane segmentation
# ---------------------------------------------------------------------------


def test_single_noiseless_plane():
    cloud = make_cloud(wall_grid(x=0.0))  # plane x = 0... actually z? no: x=0
    segs = segment_planes(cloud, SegmentationConfig(seed=1))
    assert len(segs) == 1
    seg = segs[0]
    assert abs(abs(seg.normal[0]) - 1.0) < 1e-9
    assert abs(seg.offset) < 1e-9
    assert seg.kind is SegmentKind.WALL
    assert len(seg.inlier_indices) == len(cloud)


def test_horizontal_plane_z0_kind_and_fit():
    pts = wall_grid(x=0.0)[:, [1, 2, 0]]  # permute to z = 0 plane
    segs = segment_planes(make_cloud(pts), SegmentationConfig(seed=3))
    assert len(segs) == 1
    assert abs(abs(segs[0].normal[2]) - 1.0) < 1e-9
    assert abs(segs[0].offset) < 1e-9
    assert segs[0].kind is SegmentKind.FLOOR


def test_too_few_points_rejected():
    with pytest.raises(NoPlanesFound):
        segment_planes(make_cloud(np.random.default_rng(0).uniform(0, 1, (99, 3))))


def test_pure_noise_has_no_planes():
    rng = np.random.default_rng(2)
    cloud = make_cloud(rng.uniform(0, 5, (2000, 3)))
    with pytest.raises(NoPlanesFound):
        segment_planes(cloud, SegmentationConfig(seed=0, min_inlier_frac=0.2))


def test_box_room_recovery_with_outliers():
    points, truth = box_room(points_per_m2=120, noise=0.005, outlier_frac=0.2, seed=5)
    segs = segment_planes(make_cloud(points), SegmentationConfig(seed=11))
    assert len(segs) == 6
    kinds = sorted(s.kind.value for s in segs)
    assert kinds == ["CEILING", "FLOOR", "WALL", "WALL", "WALL", "WALL"]
    for seg in segs:
        best = max(abs(float(seg.normal @ n)) for n, _ in truth.values())
        angle = np.degrees(np.arccos(min(best, 1.0)))
        assert angle <= 2.0, f"{seg.id}: normal off by {angle:.2f} degrees"
        rms = float(np.sqrt(np.mean(seg.plane_distance(seg.points) ** 2)))
        assert rms <= seg.inlier_eps


def test_segmentation_deterministic():
    points, _ = box_room(points_per_m2=60, seed=8)
    a = segment_planes(make_cloud(points), SegmentationConfig(seed=4))
    b = segment_planes(make_cloud(points), SegmentationConfig(seed=4))
    assert [s.id for s in a] == [s.id for s in b]
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.inlier_indices, sb.inlier_indices)
        assert np.array_equal(sa.normal, sb.normal)


# ---------------------------------------------------------------------------
# charts
# ---------------------------------------------------------------------------


def test_chart_round_trip_wall_point():
    seg = manual_segment(wall_grid(), normal=[1.0, 0.0, 0.0], offset=0.0)
    chart = plane_to_image(seg, resolution=100.0)
    col, row = chart.to_pixel(np.array([[0.0, 1.0, 2.0]]))
    back = chart.pixel_to_world(np.round(col), np.round(row))[0]
    assert np.linalg.norm(back - [0.0, 1.0, 2.0]) <= 1.0 / 100.0
    # v axis follows world up: moving up in z decreases the row index
    col2, row2 = chart.to_pixel(np.array([[0.0, 1.0, 2.5]]))
    assert row2[0] < row[0]
    assert col2[0] == pytest.approx(col[0], abs=1e-9)


def test_chart_scale():
    seg = manual_segment(wall_grid(), normal=[1.0, 0.0, 0.0], offset=0.0)
    chart = plane_to_image(seg, resolution=100.0)
    ca, ra = chart.to_pixel(np.array([[0.0, 1.0, 1.0]]))
    cb, rb = chart.to_pixel(np.array([[0.0, 2.0, 1.0]]))
    dist = np.hypot(cb[0] - ca[0], rb[0] - ra[0])
    assert dist == pytest.approx(100.0, abs=1.0)


def test_chart_dimensions_match_extent():
    seg = manual_segment(wall_grid(width=4.0, height=3.0, density=20), [1, 0, 0], 0.0)
    chart = plane_to_image(seg, resolution=50.0)
    rows, cols = chart.shape
    # grid spans (n-1)/density in each direction
    assert abs(cols - (4.0 - 1 / 20) * 50) <= 2
    assert abs(rows - (3.0 - 1 / 20) * 50) <= 2


def test_chart_round_trip_all_inliers():
    points, _ = box_room(points_per_m2=40, noise=0.005, outlier_frac=0.1, seed=9)
    segs = segment_planes(make_cloud(points), SegmentationConfig(seed=2))
    res = 100.0
    for seg in segs:
        chart = plane_to_image(seg, resolution=res)
        col, row = chart.to_pixel(seg.points)
        back = chart.pixel_to_world(np.round(col), np.round(row))
        err = np.linalg.norm(back - seg.points, axis=1)
        assert err.max() < 1.0 / res + seg.inlier_eps


def test_degenerate_basis_for_wall_claim():
    with pytest.raises(DegenerateBasis):
        plane_basis(np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, 1.0]), SegmentKind.WALL)
    # a floor with the same geometry is fine
    u, v = plane_basis(
        np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, 1.0]), SegmentKind.FLOOR
    )
    assert abs(u @ v) < 1e-12


# ---------------------------------------------------------------------------
# mask projection
# ---------------------------------------------------------------------------


def disk_mask(size=100, radius=None):
    radius = radius or size * 0.45
    yy, xx = np.mgrid[0:size, 0:size]
    c = (size - 1) / 2.0
    return ShapeMask((xx - c) ** 2 + (yy - c) ** 2 <= radius**2)


def test_full_mask_saturates_segment():
    seg = manual_segment(wall_grid(), [1.0, 0.0, 0.0], 0.0)
    full = ShapeMask(np.ones((64, 64), dtype=bool))
    # mask covers the whole bounding rectangle (and a bit beyond: clip
    # warning expected): 64 px at 1/16 m/px = 4 m
    with pytest.warns(ClipWarning):
        pattern = project_mask(seg, full, (0.0, 3.0, 1.0 / 16.0))
    assert len(pattern.point_indices) == len(seg.points)


def test_projection_off_segment_is_empty():
    seg = manual_segment(wall_grid(), [1.0, 0.0, 0.0], 0.0)
    with pytest.warns(ClipWarning):
        with pytest.raises(EmptyProjection):
            project_mask(seg, disk_mask(), (10.0, 2.0, 0.005))


def test_disk_footprint_area():
    # dense wall, 400 points per square meter; disk radius 0.5 m
    seg = manual_segment(wall_grid(density=20.0), [1.0, 0.0, 0.0], 0.0)
    mask = disk_mask(size=100, radius=50.0)  # exactly 1 m footprint at 0.01 m/px
    pattern = project_mask(seg, mask, (1.0, 2.5, 0.01), pattern_id="p0")
    area_true = np.pi * 0.25
    assert pattern.area_m2 == pytest.approx(area_true, rel=0.05)
    # marked-point density gives the same answer
    assert len(pattern.point_indices) / 400.0 == pytest.approx(area_true, rel=0.05)
    # refine-alignment snapped everything exactly onto the plane
    assert np.abs(pattern.points @ seg.normal + seg.offset).max() < 1e-12
    assert np.allclose(pattern.centroid, pattern.points.mean(axis=0))


def test_projection_snap_gates_outliers():
    pts = wall_grid()
    pts[::7, 0] += 0.06  # 3x the default eps: must be discarded
    seg = manual_segment(pts, [1.0, 0.0, 0.0], 0.0)
    full = ShapeMask(np.ones((64, 64), dtype=bool))
    with pytest.warns(ClipWarning):
        pattern = project_mask(seg, full, (0.0, 3.0, 1.0 / 16.0))
    assert len(pattern.point_indices) == len(pts) - len(pts[::7])


# ---------------------------------------------------------------------------
# scene graph
# ---------------------------------------------------------------------------


def synthetic_pattern(pid, points, host="wall_0", label="v_shape"):
    points = np.asarray(points, dtype=np.float64)
    return ProjectedPattern(
        id=pid,
        source=f"{pid}.pgm",
        label=label,
        probability=None,
        probabilities={},
        host_segment=host,
        point_indices=np.arange(len(points)),
        points=points,
        centroid=points.mean(axis=0),
        area_m2=0.5,
    )


def test_minimal_graph():
    seg = manual_segment(wall_grid(), [1.0, 0.0, 0.0], 0.0)
    pattern = synthetic_pattern("pattern_0", [[0.0, 1.0, 1.0], [0.0, 1.2, 1.1]])
    graph = build_scene_graph([seg], [pattern])
    assert len(graph.nodes) == 2
    assert len(graph.edges) == 1
    edge = graph.edges[0]
    assert edge.relation == "ON"
    assert {edge.a, edge.b} == {"pattern_0", "wall_0"}


def test_dangling_host_reference():
    seg = manual_segment(wall_grid(), [1.0, 0.0, 0.0], 0.0)
    pattern = synthetic_pattern("pattern_0", [[0.0, 1.0, 1.0]], host="wall_9")
    with pytest.raises(DanglingReference):
        build_scene_graph([seg], [pattern])


def test_above_edge_arithmetic():
    seg = manual_segment(wall_grid(), [1.0, 0.0, 0.0], 0.0)
    pattern = synthetic_pattern(
        "pattern_0", [[0.1, -0.1, 1.0], [-0.1, 0.1, 1.0]], host="wall_0"
    )
    box = FurnitureBox("crate", center=[0.0, 0.0, 0.0], half_extents=[0.5, 0.5, 0.2])
    graph = build_scene_graph([seg], [pattern], [box])
    above = [e for e in graph.edges if e.relation == "ABOVE"]
    assert len(above) == 1
    assert above[0].a == "pattern_0" and above[0].b == "furniture_0"
    assert above[0].distance_m == pytest.approx(1.0, abs=1e-12)
    near = [e for e in graph.edges if e.relation == "NEAR"]
    assert len(near) == 1  # same pair, distance 1.0 < default 1.5


def test_near_edges_respect_tau():
    seg = manual_segment(wall_grid(), [1.0, 0.0, 0.0], 0.0)
    p1 = synthetic_pattern("pattern_0", [[0.0, 1.0, 1.0]])
    p2 = synthetic_pattern("pattern_1", [[0.0, 2.0, 1.0]])
    graph = build_scene_graph([seg], [p1, p2], cfg=GraphConfig(near_tau=1.5))
    assert any(e.relation == "NEAR" for e in graph.edges)
    tight = build_scene_graph([seg], [p1, p2], cfg=GraphConfig(near_tau=0.5))
    assert not any(e.relation == "NEAR" for e in tight.edges)


def test_pattern_nodes_have_single_on_edge():
    points, _ = box_room(points_per_m2=60, seed=10)
    segs = segment_planes(make_cloud(points), SegmentationConfig(seed=6))
    walls = [s for s in segs if s.kind is SegmentKind.WALL]
    patterns = [
        synthetic_pattern(f"pattern_{i}", w.points[:25], host=w.id)
        for i, w in enumerate(walls[:2])
    ]
    boxes = [
        FurnitureBox("sofa", [2.0, 1.0, 0.4], [0.8, 0.4, 0.4]),
        FurnitureBox("shelf", [3.5, 4.0, 1.0], [0.3, 0.5, 1.0]),
    ]
    graph = build_scene_graph(segs, patterns, boxes)
    for p in patterns:
        on = [e for e in graph.edges if e.relation == "ON" and p.id in (e.a, e.b)]
        assert len(on) == 1

    # distances: brute-force oracle, symmetry, triangle inequality
    nodes = {n.id: n.centroid for n in graph.nodes}
    pairs = graph.all_pair_distances()
    assert len(pairs) == len(nodes) * (len(nodes) - 1) // 2
    lookup = {}
    for ida, idb, d in pairs:
        exact = float(np.linalg.norm(nodes[ida] - nodes[idb]))
        assert abs(d - exact) <= 1e-9
        lookup[(ida, idb)] = d
        lookup[(idb, ida)] = d
    ids = sorted(nodes)
    for a in ids:
        for b in ids:
            for c in ids:
                if len({a, b, c}) == 3:
                    assert lookup[(a, c)] <= lookup[(a, b)] + lookup[(b, c)] + 1e-9


def test_graph_json_shape():
    seg = manual_segment(wall_grid(), [1.0, 0.0, 0.0], 0.0)
    pattern = synthetic_pattern("pattern_0", [[0.0, 1.0, 1.0]])
    graph = build_scene_graph([seg], [pattern])
    doc = graph.to_dict()
    assert set(doc) == {"nodes", "edges"}
    assert set(doc["nodes"][0]) == {"id", "kind", "label", "centroid", "attributes"}
    assert set(doc["edges"][0]) == {"a", "b", "distance_m", "relation"}
    csv = graph.distances_csv().splitlines()
    assert csv[0] == "id_a,id_b,distance_m"
    assert len(csv) == 2  # one pair


def test_rigid_motion_equivariance():
    points, _ = box_room(points_per_m2=80, noise=0.004, outlier_frac=0.15, seed=12)
    cfg = SegmentationConfig(seed=3)

    def pipeline(pts, boxes):
        segs = segment_planes(make_cloud(pts), cfg)
        walls = sorted(
            [s for s in segs if s.kind is SegmentKind.WALL], key=lambda s: s.id
        )
        patterns = [synthetic_pattern("pattern_0", walls[0].points[:40], walls[0].id)]
        return segs, build_scene_graph(segs, patterns, boxes)

    boxes = [FurnitureBox("sofa", [2.0, 1.0, 0.4], [0.8, 0.4, 0.4])]
    segs_a, graph_a = pipeline(points, boxes)

    # rotate 90 degrees about z and translate; boxes stay axis-aligned
    R = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    t = np.array([4.0, -2.0, 1.0])
    moved = points @ R.T + t
    boxes_m = [
        FurnitureBox("sofa", R @ np.array([2.0, 1.0, 0.4]) + t, [0.4, 0.8, 0.4])
    ]
    segs_b, graph_b = pipeline(moved, boxes_m)

    assert [s.id for s in segs_a] == [s.id for s in segs_b]
    da = {(e.a, e.b, e.relation): e.distance_m for e in graph_a.edges}
    db = {(e.a, e.b, e.relation): e.distance_m for e in graph_b.edges}
    assert set(da) == set(db)
    for key, d in da.items():
        assert abs(d - db[key]) <= 1e-6


def test_segmentation_config_validation():
    with pytest.raises(ValueError):
        SegmentationConfig(inlier_eps=0.0)
    with pytest.raises(ValueError):
        SegmentationConfig(min_inlier_frac=1.5)
    with pytest.raises(ValueError):
        GraphConfig(near_tau=0.0)

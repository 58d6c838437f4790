"""Plane segmentation, 2D-mask projection onto surfaces, and scene graphs.

A room cloud is decomposed into planar segments by sequential robust
fitting; each segment carries an orthographic in-plane chart whose v axis
follows gravity-up, so mask "up" stays world "up".  Classified masks are
projected onto segments, snapped exactly onto the plane, and everything
is linked into a scene graph with pairwise Euclidean distances.
"""

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClipWarning,
    DanglingReference,
    DegenerateBasis,
    EmptyProjection,
    NoPlanesFound,
)

RANSAC_ITERATIONS = 2000
_CHUNK = 256  # candidate planes scored per vectorized batch
ADJACENCY_GAP = 0.1  # meters between segment bounding boxes


class SegmentKind(enum.Enum):
    WALL = "WALL"
    FLOOR = "FLOOR"
    CEILING = "CEILING"
    OTHER = "OTHER"


@dataclass
class SegmentationConfig:
    inlier_eps: float = 0.02  # meters
    min_inlier_frac: float = 0.05  # of the original cloud
    max_planes: int = 12
    seed: int = 0
    iterations: int = RANSAC_ITERATIONS

    def __post_init__(self):
        if self.inlier_eps <= 0:
            raise ValueError("inlier_eps must be > 0")
        if not 0 < self.min_inlier_frac <= 1:
            raise ValueError("min_inlier_frac must be in (0, 1]")
        if self.max_planes < 1:
            raise ValueError("max_planes must be >= 1")


@dataclass
class PlanarSegment:
    id: str
    kind: SegmentKind
    normal: np.ndarray  # unit, n . p + d = 0 for inliers
    offset: float
    inlier_indices: np.ndarray  # indices into the source cloud
    points: np.ndarray  # the inlier coordinates
    basis_u: np.ndarray
    basis_v: np.ndarray  # gravity-up projected into the plane
    origin: np.ndarray
    inlier_eps: float
    u_range: tuple = field(default=None)
    v_range: tuple = field(default=None)

    def __post_init__(self):
        if self.u_range is None or self.v_range is None:
            # anchor the chart at the bounding rectangle's lower-left so
            # u runs 0..width from the left edge and v 0..height upward
            u, v = self.chart_coords(self.points)
            self.origin = (
                self.origin
                + float(u.min()) * self.basis_u
                + float(v.min()) * self.basis_v
            )
            u, v = self.chart_coords(self.points)
            self.u_range = (float(u.min()), float(u.max()))
            self.v_range = (float(v.min()), float(v.max()))

    def chart_coords(self, points):
        rel = np.atleast_2d(points) - self.origin
        return rel @ self.basis_u, rel @ self.basis_v

    def centroid(self):
        return self.points.mean(axis=0)

    def plane_distance(self, points):
        return np.atleast_2d(points) @ self.normal + self.offset


def plane_basis(normal, gravity, kind):
    """In-plane (u, v) axes with v along gravity-up projected into the plane."""
    n = np.asarray(normal, dtype=np.float64)
    g = np.asarray(gravity, dtype=np.float64)
    v = g - (g @ n) * n
    norm = np.linalg.norm(v)
    if norm < 1e-9:
        if kind is SegmentKind.WALL:
            raise DegenerateBasis("wall normal is parallel to gravity")
        # horizontal surface: fall back to a world axis for "up" in the chart
        for axis in (np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0])):
            v = axis - (axis @ n) * n
            norm = np.linalg.norm(v)
            if norm >= 1e-9:
                break
    v = v / norm
    u = np.cross(v, n)
    u = u / np.linalg.norm(u)
    return u, v


def _fit_plane_lsq(points):
    """Least-squares plane: unit normal and offset with n . p + d = 0."""
    centroid = points.mean(axis=0)
    rel = points - centroid
    cov = rel.T @ rel
    eigvals, eigvecs = np.linalg.eigh(cov)
    n = eigvecs[:, 0]
    # deterministic sign: largest-magnitude component made positive
    lead = int(np.argmax(np.abs(n)))
    if n[lead] < 0:
        n = -n
    return n, float(-(n @ centroid))


def _ransac_best_plane(points, cfg, rng):
    """Best-of-K candidate plane over `points`; ties go to the earliest draw."""
    n_pts = len(points)
    triples = rng.integers(0, n_pts, size=(cfg.iterations, 3))
    best_count = -1
    best_mask = None
    for start in range(0, cfg.iterations, _CHUNK):
        batch = triples[start : start + _CHUNK]
        p1 = points[batch[:, 0]]
        p2 = points[batch[:, 1]]
        p3 = points[batch[:, 2]]
        normals = np.cross(p2 - p1, p3 - p1)
        norms = np.linalg.norm(normals, axis=1)
        ok = norms > 1e-12
        if not ok.any():
            continue
        normals[ok] /= norms[ok, None]
        offsets = -np.einsum("ij,ij->i", normals, p1)
        dist = np.abs(points @ normals.T + offsets[None, :])
        counts = np.where(ok, (dist <= cfg.inlier_eps).sum(axis=0), -1)
        local_best = int(np.argmax(counts))
        if counts[local_best] > best_count:
            best_count = int(counts[local_best])
            best_mask = dist[:, local_best] <= cfg.inlier_eps
    return best_count, best_mask


def segment_planes(cloud, cfg=None):
    """Sequential robust plane extraction; deterministic under cfg.seed.

    Planes are peeled off greedily until the best remaining candidate
    captures fewer than min_inlier_frac of the original cloud, or
    max_planes is reached.  Kinds follow the normal/height rule: nearly
    horizontal planes are FLOOR/CEILING by height rank, nearly vertical
    ones WALL, everything else OTHER.
    """
    cfg = cfg or SegmentationConfig()
    points = cloud.points
    gravity = cloud.gravity
    if len(points) < 100:
        raise NoPlanesFound(f"cloud has {len(points)} points (< 100)")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed])))
    min_count = max(3, int(np.ceil(cfg.min_inlier_frac * len(points))))

    remaining = np.arange(len(points))
    raw = []
    while len(raw) < cfg.max_planes and len(remaining) >= max(3, min_count):
        count, mask = _ransac_best_plane(points[remaining], cfg, rng)
        if count < min_count or mask is None:
            break
        inliers = remaining[mask]
        normal, offset = _fit_plane_lsq(points[inliers])
        raw.append((inliers, normal, offset))
        remaining = remaining[~mask]
    if not raw:
        raise NoPlanesFound("no plane candidate reached min_inlier_frac")

    # classify kinds: horizontal planes ranked by height along gravity
    alignment = [abs(normal @ gravity) for _, normal, _ in raw]
    horiz = [i for i, a in enumerate(alignment) if a > 0.9]
    heights = {i: float(points[raw[i][0]].mean(axis=0) @ gravity) for i in horiz}
    kinds = {}
    if len(horiz) >= 2:
        by_height = sorted(horiz, key=lambda i: heights[i])
        kinds[by_height[0]] = SegmentKind.FLOOR
        kinds[by_height[-1]] = SegmentKind.CEILING
        for i in by_height[1:-1]:
            kinds[i] = SegmentKind.OTHER
    elif len(horiz) == 1:
        mid = float(np.median(points @ gravity))
        only = horiz[0]
        kinds[only] = SegmentKind.FLOOR if heights[only] <= mid else SegmentKind.CEILING
    for i, a in enumerate(alignment):
        if i in kinds:
            continue
        kinds[i] = SegmentKind.WALL if a < 0.3 else SegmentKind.OTHER

    segments = []
    counters = {k: 0 for k in SegmentKind}
    for i, (inliers, normal, offset) in enumerate(raw):
        kind = kinds[i]
        u, v = plane_basis(normal, gravity, kind)
        seg_points = points[inliers]
        seg = PlanarSegment(
            id=f"{kind.value.lower()}_{counters[kind]}",
            kind=kind,
            normal=normal,
            offset=offset,
            inlier_indices=inliers,
            points=seg_points,
            basis_u=u,
            basis_v=v,
            origin=seg_points.mean(axis=0),
            inlier_eps=cfg.inlier_eps,
        )
        counters[kind] += 1
        segments.append(seg)
    return segments


@dataclass
class PlaneChart:
    """Orthographic raster view of one planar segment."""

    segment: PlanarSegment
    resolution: float  # pixels per meter
    frame: np.ndarray  # inlier occupancy raster
    u_min: float
    v_max: float

    @property
    def shape(self):
        return self.frame.shape

    def to_pixel(self, points):
        """World points to fractional (col, row) chart pixels."""
        u, v = self.segment.chart_coords(points)
        return (u - self.u_min) * self.resolution, (self.v_max - v) * self.resolution

    def pixel_to_world(self, col, row):
        """Chart pixel (center) back to a 3D point on the plane."""
        u = self.u_min + np.asarray(col, dtype=np.float64) / self.resolution
        v = self.v_max - np.asarray(row, dtype=np.float64) / self.resolution
        seg = self.segment
        return (
            seg.origin
            + np.multiply.outer(u, seg.basis_u)
            + np.multiply.outer(v, seg.basis_v)
        )


def plane_to_image(segment, resolution=100.0):
    """Build the orthographic chart raster of a segment.

    Every inlier lands at pixel ((u - u_min) * res, (v_max - v) * res);
    the mapping is invertible on the bounding rectangle up to pixel
    quantization.
    """
    if len(segment.points) < 3:
        raise DegenerateBasis("segment needs at least 3 inliers for a chart")
    u, v = segment.chart_coords(segment.points)
    u_min, u_max = segment.u_range
    v_min, v_max = segment.v_range
    cols = int(np.ceil((u_max - u_min) * resolution)) + 1
    rows = int(np.ceil((v_max - v_min) * resolution)) + 1
    frame = np.zeros((rows, cols), dtype=np.uint16)
    ci = np.clip(np.round((u - u_min) * resolution).astype(int), 0, cols - 1)
    ri = np.clip(np.round((v_max - v) * resolution).astype(int), 0, rows - 1)
    np.add.at(frame, (ri, ci), 1)
    return PlaneChart(
        segment=segment, resolution=resolution, frame=frame, u_min=u_min, v_max=v_max
    )


@dataclass
class ProjectedPattern:
    id: str
    source: str
    label: str
    probability: float  # None when no classifier was attached
    probabilities: dict
    host_segment: str
    point_indices: np.ndarray  # into the source cloud
    points: np.ndarray  # snapped exactly onto the host plane
    centroid: np.ndarray
    area_m2: float


def project_mask(segment, mask, placement, pattern_id="pattern_0", label=None):
    """Mark segment inliers covered by the mask foreground.

    placement = (u0, v0, scale): chart coordinates (meters) of the mask's
    top-left corner and the pixel pitch in meters.  Marked points are
    snapped onto the plane; marks farther than 2 * inlier_eps from the
    plane are dropped.
    """
    u0, v0, scale = placement
    if scale <= 0:
        raise ValueError("placement scale must be > 0")
    h, w = mask.data.shape
    u_min, u_max = segment.u_range
    v_min, v_max = segment.v_range
    if u0 < u_min or v0 > v_max or u0 + w * scale > u_max or v0 - h * scale < v_min:
        warnings.warn(
            f"mask footprint exceeds segment {segment.id} bounding rectangle",
            ClipWarning,
        )

    u, v = segment.chart_coords(segment.points)
    cols = np.floor((u - u0) / scale).astype(int)
    rows = np.floor((v0 - v) / scale).astype(int)
    inside = (cols >= 0) & (cols < w) & (rows >= 0) & (rows < h)
    marked = np.zeros(len(u), dtype=bool)
    marked[inside] = mask.data[rows[inside], cols[inside]]
    if not marked.any():
        raise EmptyProjection(f"no inlier of {segment.id} falls on mask foreground")

    # refine alignment: gate residuals, then snap exactly onto the plane
    dist = segment.plane_distance(segment.points[marked]).ravel()
    keep = np.abs(dist) <= 2.0 * segment.inlier_eps
    pts = segment.points[marked][keep]
    if len(pts) == 0:
        raise EmptyProjection(f"all marked points of {segment.id} failed the gate")
    pts = pts - np.outer(pts @ segment.normal + segment.offset, segment.normal)
    indices = segment.inlier_indices[marked][keep]
    area = float(mask.data.sum()) * scale * scale
    return ProjectedPattern(
        id=pattern_id,
        source=getattr(mask, "source", ""),
        label=label or "",
        probability=None,
        probabilities={},
        host_segment=segment.id,
        point_indices=indices,
        points=pts,
        centroid=pts.mean(axis=0),
        area_m2=area,
    )


# ---------------------------------------------------------------------------
# scene graph
# ---------------------------------------------------------------------------


@dataclass
class FurnitureBox:
    label: str
    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64)


@dataclass
class SceneNode:
    id: str
    kind: str
    label: str
    centroid: np.ndarray
    attributes: dict


@dataclass
class SceneEdge:
    a: str
    b: str
    distance_m: float
    relation: str


@dataclass
class SceneGraph:
    nodes: list
    edges: list

    def node(self, node_id):
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise DanglingReference(f"unknown node id {node_id!r}")

    def to_dict(self):
        return {
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind,
                    "label": n.label,
                    "centroid": [float(c) for c in n.centroid],
                    "attributes": n.attributes,
                }
                for n in self.nodes
            ],
            "edges": [
                {
                    "a": e.a,
                    "b": e.b,
                    "distance_m": e.distance_m,
                    "relation": e.relation,
                }
                for e in self.edges
            ],
        }

    def all_pair_distances(self):
        """Every unordered node pair with its centroid distance."""
        out = []
        for i, na in enumerate(self.nodes):
            for nb in self.nodes[i + 1 :]:
                d = float(np.linalg.norm(na.centroid - nb.centroid))
                out.append((na.id, nb.id, d))
        return out

    def distances_csv(self):
        lines = ["id_a,id_b,distance_m"]
        for ida, idb, d in sorted(self.all_pair_distances()):
            lines.append(f"{ida},{idb},{d:.9f}")
        return "\n".join(lines) + "\n"


def _footprint(points_or_box, gravity):
    """Axis-aligned bounding box in the two axes orthogonal to gravity."""
    g = np.asarray(gravity, dtype=np.float64)
    lead = int(np.argmax(np.abs(g)))
    axes = [i for i in range(3) if i != lead]
    if isinstance(points_or_box, FurnitureBox):
        c, h = points_or_box.center, points_or_box.half_extents
        corners = c + np.array(
            [[sx * h[0], sy * h[1], sz * h[2]] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
        )
        pts = corners
    else:
        pts = np.atleast_2d(points_or_box)
    lo = pts[:, axes].min(axis=0)
    hi = pts[:, axes].max(axis=0)
    return lo, hi


def _overlaps(fa, fb):
    return bool(np.all(fa[0] <= fb[1]) and np.all(fb[0] <= fa[1]))


@dataclass
class GraphConfig:
    near_tau: float = 1.5  # meters

    def __post_init__(self):
        if self.near_tau <= 0:
            raise ValueError("near_tau must be > 0")


def build_scene_graph(segments, patterns, furniture=(), cfg=None, gravity=None):
    """Assemble nodes and relation-labeled edges.

    Every pattern gets exactly one ON edge to its host surface; patterns
    and furniture get NEAR edges below the distance threshold and
    ABOVE/BELOW edges when their footprints overlap vertically; segments
    whose bounding boxes (padded by ADJACENCY_GAP) touch get ADJACENT
    edges.  distance_m is always the Euclidean centroid distance.
    """
    cfg = cfg or GraphConfig()
    gravity = np.array([0.0, 0.0, 1.0]) if gravity is None else np.asarray(gravity)

    nodes = []
    seg_nodes = {}
    for seg in segments:
        node = SceneNode(
            id=seg.id,
            kind=seg.kind.value,
            label=seg.id,
            centroid=seg.centroid(),
            attributes={
                "normal": [float(c) for c in seg.normal],
                "offset": float(seg.offset),
                "inlier_count": int(len(seg.inlier_indices)),
            },
        )
        seg_nodes[seg.id] = node
        nodes.append(node)
    for pat in patterns:
        attrs = {
            "class": pat.label,
            "area_m2": pat.area_m2,
            "host": pat.host_segment,
            "source": pat.source,
        }
        if pat.probability is not None:
            attrs["probability"] = pat.probability
            attrs["probabilities"] = pat.probabilities
        nodes.append(
            SceneNode(
                id=pat.id,
                kind="PATTERN",
                label=pat.label or pat.id,
                centroid=pat.centroid,
                attributes=attrs,
            )
        )
    for i, box in enumerate(furniture):
        nodes.append(
            SceneNode(
                id=f"furniture_{i}",
                kind="FURNITURE",
                label=box.label,
                centroid=box.center,
                attributes={"half_extents": [float(h) for h in box.half_extents]},
            )
        )

    by_id = {n.id: n for n in nodes}

    def dist(a, b):
        return float(np.linalg.norm(by_id[a].centroid - by_id[b].centroid))

    edges = []
    for pat in patterns:
        if pat.host_segment not in seg_nodes:
            raise DanglingReference(
                f"pattern {pat.id} references unknown segment {pat.host_segment!r}"
            )
        edges.append(SceneEdge(pat.id, pat.host_segment, dist(pat.id, pat.host_segment), "ON"))

    movable = [n for n in nodes if n.kind in ("PATTERN", "FURNITURE")]
    for i, na in enumerate(movable):
        for nb in movable[i + 1 :]:
            d = dist(na.id, nb.id)
            if d < cfg.near_tau:
                edges.append(SceneEdge(na.id, nb.id, d, "NEAR"))

    furn_nodes = [n for n in nodes if n.kind == "FURNITURE"]
    pat_by_id = {p.id: p for p in patterns}
    for pat in patterns:
        foot_p = _footprint(pat_by_id[pat.id].points, gravity)
        hp = float(by_id[pat.id].centroid @ gravity)
        for fn in furn_nodes:
            box = furniture[int(fn.id.split("_")[-1])]
            foot_f = _footprint(box, gravity)
            hf = float(fn.centroid @ gravity)
            if _overlaps(foot_p, foot_f) and hp != hf:
                relation = "ABOVE" if hp > hf else "BELOW"
                edges.append(SceneEdge(pat.id, fn.id, dist(pat.id, fn.id), relation))

    for i, sa in enumerate(segments):
        lo_a, hi_a = sa.points.min(axis=0), sa.points.max(axis=0)
        for sb in segments[i + 1 :]:
            lo_b, hi_b = sb.points.min(axis=0), sb.points.max(axis=0)
            if np.all(lo_a - ADJACENCY_GAP <= hi_b) and np.all(lo_b - ADJACENCY_GAP <= hi_a):
                edges.append(SceneEdge(sa.id, sb.id, dist(sa.id, sb.id), "ADJACENT"))

    return SceneGraph(nodes=nodes, edges=edges)

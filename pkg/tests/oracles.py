"""Independent reference implementations used to cross-check the library.

Everything here is deliberately naive: exact geometry for chords, exact
rational arithmetic and exhaustive loops for tree construction, and a
simple procedural room builder with known ground truth.  None of it
shares code with the implementation under test.
"""

import math
from fractions import Fraction

import numpy as np


def direction(theta_deg):
    """Unit sweep direction: image-up at 0 degrees, counterclockwise."""
    rad = math.radians(theta_deg)
    return -math.sin(rad), -math.cos(rad)


def ray_polygon_hits(vertices, origin, theta_deg):
    """Sorted parameter values t >= 0 where the ray meets polygon edges."""
    dx, dy = direction(theta_deg)
    ox, oy = origin
    hits = []
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        ex, ey = x2 - x1, y2 - y1
        denom = dx * ey - dy * ex
        if abs(denom) < 1e-14:
            continue
        s = (dx * (oy - y1) - dy * (ox - x1)) / denom
        if not 0.0 <= s <= 1.0:
            continue
        if abs(dx) >= abs(dy):
            t = (x1 + s * ex - ox) / dx
        else:
            t = (y1 + s * ey - oy) / dy
        if t >= 0.0:
            hits.append(t)
    return sorted(hits)


def polygon_chord(vertices, origin, theta_deg, full_line=False):
    """Exact envelope extent of a polygon along the sweep line."""
    fwd = ray_polygon_hits(vertices, origin, theta_deg)
    if not full_line:
        return fwd[-1] if fwd else 0.0
    bwd = ray_polygon_hits(vertices, origin, theta_deg + 180.0)
    signed = [t for t in fwd] + [-t for t in bwd]
    if not signed:
        return 0.0
    return max(signed) - min(signed)


def circle_chord(center, radius, origin, theta_deg, full_line=False):
    """Exact envelope extent of a circle along the sweep line."""
    dx, dy = direction(theta_deg)
    ox, oy = origin
    fx, fy = ox - center[0], oy - center[1]
    b = 2.0 * (dx * fx + dy * fy)
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - 4.0 * c
    if disc < 0:
        return 0.0
    roots = [(-b - math.sqrt(disc)) / 2.0, (-b + math.sqrt(disc)) / 2.0]
    if full_line:
        return max(roots) - min(roots) if roots[1] >= 0 or roots[0] <= 0 else 0.0
    fwd = [t for t in roots if t >= 0]
    return max(fwd) if fwd else 0.0


# ---------------------------------------------------------------------------
# exhaustive-split reference decision tree (exact rational arithmetic)
# ---------------------------------------------------------------------------


def _gini_score(counts_left, counts_right):
    """The exact split objective sum(cL^2)/nL + sum(cR^2)/nR as a Fraction."""
    nl = sum(counts_left)
    nr = sum(counts_right)
    return Fraction(sum(c * c for c in counts_left), nl) + Fraction(
        sum(c * c for c in counts_right), nr
    )


def build_reference_tree(X, y, indices, n_classes, max_depth, min_leaf):
    """Brute-force exhaustive-split tree: nested dict {feature, threshold,
    counts, left, right} for internal nodes, {counts} for leaves.

    Scans every feature in ascending index order and every midpoint of
    adjacent sorted unique values in ascending order; candidates are
    compared with exact rationals, ties keep the earliest candidate; a
    node splits only when the objective strictly improves on the parent.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)

    def counts_of(idx):
        out = [0] * n_classes
        for i in idx:
            out[y[i]] += 1
        return out

    def grow(idx, depth):
        counts = counts_of(idx)
        node = {"counts": counts}
        m = len(idx)
        if depth >= max_depth or m < 2 * min_leaf or max(counts) == m:
            return node
        parent = Fraction(sum(c * c for c in counts), m)
        best = None  # (score, feature, threshold, left_idx, right_idx)
        for f in range(X.shape[1]):
            values = sorted(set(float(X[i, f]) for i in idx))
            for lo, hi in zip(values, values[1:]):
                thr = (lo + hi) / 2.0
                left = [i for i in idx if X[i, f] <= thr]
                right = [i for i in idx if X[i, f] > thr]
                if len(left) < min_leaf or len(right) < min_leaf:
                    continue
                score = _gini_score(counts_of(left), counts_of(right))
                if best is None or score > best[0]:
                    best = (score, f, thr, left, right)
        if best is None or best[0] <= parent:
            return node
        _, f, thr, left, right = best
        node["feature"] = f
        node["threshold"] = thr
        node["left"] = grow(left, depth + 1)
        node["right"] = grow(right, depth + 1)
        return node

    return grow(list(indices), 0)


def assert_tree_matches(tree, reference, node=0):
    """Recursively compare a library DecisionTree against the reference."""
    counts = tree.counts[node].tolist()
    assert counts == reference["counts"], (
        f"node {node}: counts {counts} != {reference['counts']}"
    )
    is_leaf = tree.left[node] < 0
    ref_leaf = "feature" not in reference
    assert is_leaf == ref_leaf, f"node {node}: leaf mismatch"
    if is_leaf:
        return
    assert int(tree.feature[node]) == reference["feature"], (
        f"node {node}: feature {tree.feature[node]} != {reference['feature']}"
    )
    assert float(tree.threshold[node]) == reference["threshold"], (
        f"node {node}: threshold {tree.threshold[node]} != {reference['threshold']}"
    )
    assert_tree_matches(tree, reference["left"], int(tree.left[node]))
    assert_tree_matches(tree, reference["right"], int(tree.right[node]))


# ---------------------------------------------------------------------------
# procedural box room
# ---------------------------------------------------------------------------


def box_room(
    width=4.0,
    depth=5.0,
    height=3.0,
    points_per_m2=120.0,
    noise=0.005,
    outlier_frac=0.2,
    seed=5,
):
    """Six noisy axis-aligned faces plus volume outliers.

    Returns (points, truth) where truth maps face name to (normal, offset)
    with normal . p + offset = 0 on the noise-free face.
    """
    rng = np.random.default_rng(seed)
    faces = {
        "floor": ((0.0, 0.0, 1.0), 0.0, (0, 1), (width, depth), 2),
        "ceiling": ((0.0, 0.0, 1.0), -height, (0, 1), (width, depth), 2),
        "wall_x0": ((1.0, 0.0, 0.0), 0.0, (1, 2), (depth, height), 0),
        "wall_x1": ((1.0, 0.0, 0.0), -width, (1, 2), (depth, height), 0),
        "wall_y0": ((0.0, 1.0, 0.0), 0.0, (0, 2), (width, height), 1),
        "wall_y1": ((0.0, 1.0, 0.0), -depth, (0, 2), (width, height), 1),
    }
    pts = []
    truth = {}
    for name, (normal, offset, axes, extents, fixed_axis) in faces.items():
        n_pts = int(points_per_m2 * extents[0] * extents[1])
        face = np.zeros((n_pts, 3))
        face[:, axes[0]] = rng.uniform(0.0, extents[0], n_pts)
        face[:, axes[1]] = rng.uniform(0.0, extents[1], n_pts)
        face[:, fixed_axis] = -offset
        if noise > 0:
            face += rng.normal(0.0, noise, face.shape)
        pts.append(face)
        truth[name] = (np.array(normal), offset)
    inliers = np.vstack(pts)
    n_out = int(outlier_frac / (1.0 - outlier_frac) * len(inliers))
    outliers = rng.uniform([0, 0, 0], [width, depth, height], (n_out, 3))
    return np.vstack([inliers, outliers]), truth

"""Scene description files and the end-to-end scene pipeline.

A scene file is JSON naming the cloud, gravity, furniture boxes and the
mask placements; paths are resolved relative to the file.  Validation
errors carry the offending field, e.g. ``patterns[2].scale``.
"""

import json
import os

import numpy as np

from .cloud import read_cloud
from .errors import SceneFileError
from .forest import predict
from .mask import read_mask
from .scene3d import (
    FurnitureBox,
    GraphConfig,
    SegmentationConfig,
    build_scene_graph,
    project_mask,
    segment_planes,
)


def _require(obj, key, types, field, default=None, required=False):
    if key not in obj:
        if required:
            raise SceneFileError(field, "missing required entry")
        return default
    value = obj[key]
    if not isinstance(value, types):
        raise SceneFileError(field, f"expected {types}, got {type(value).__name__}")
    return value


def _vector3(obj, key, field, default=None, required=False):
    value = _require(obj, key, (list, tuple), field, default=None, required=required)
    if value is None:
        return default
    if len(value) != 3 or not all(isinstance(v, (int, float)) for v in value):
        raise SceneFileError(field, "expected a list of 3 numbers")
    return [float(v) for v in value]


def load_scene_file(path):
    """Parse and validate a scene JSON file into a plain config dict."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SceneFileError("<file>", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SceneFileError("<file>", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SceneFileError("<file>", "top level must be an object")

    base = os.path.dirname(os.path.abspath(path))
    scene = {}
    cloud_rel = _require(doc, "cloud", str, "cloud", required=True)
    scene["cloud_path"] = os.path.join(base, cloud_rel)
    if not os.path.exists(scene["cloud_path"]):
        raise SceneFileError("cloud", f"file not found: {scene['cloud_path']}")
    scene["gravity"] = _vector3(doc, "gravity", "gravity", default=[0.0, 0.0, 1.0])
    if all(v == 0 for v in scene["gravity"]):
        raise SceneFileError("gravity", "must be a nonzero vector")

    seg = _require(doc, "segmentation", dict, "segmentation", default={})
    seg_field = "segmentation"
    try:
        scene["segmentation"] = SegmentationConfig(
            inlier_eps=float(seg.get("inlier_eps", 0.02)),
            min_inlier_frac=float(seg.get("min_inlier_frac", 0.05)),
            max_planes=int(seg.get("max_planes", 12)),
            seed=int(seg.get("seed", 0)),
            iterations=int(seg.get("iterations", 2000)),
        )
    except (TypeError, ValueError) as exc:
        raise SceneFileError(seg_field, str(exc)) from exc

    resolution = _require(doc, "resolution", (int, float), "resolution", default=100.0)
    if resolution <= 0:
        raise SceneFileError("resolution", "must be > 0")
    scene["resolution"] = float(resolution)

    tau = _require(doc, "tau", (int, float), "tau", default=1.5)
    if tau <= 0:
        raise SceneFileError("tau", "must be > 0")
    scene["tau"] = float(tau)

    furniture = []
    for i, entry in enumerate(_require(doc, "furniture", list, "furniture", default=[])):
        field = f"furniture[{i}]"
        if not isinstance(entry, dict):
            raise SceneFileError(field, "expected an object")
        label = _require(entry, "label", str, f"{field}.label", required=True)
        center = _vector3(entry, "center", f"{field}.center", required=True)
        half = _vector3(entry, "half_extents", f"{field}.half_extents", required=True)
        if any(h <= 0 for h in half):
            raise SceneFileError(f"{field}.half_extents", "must be positive")
        furniture.append(FurnitureBox(label=label, center=center, half_extents=half))
    scene["furniture"] = furniture

    patterns = []
    for i, entry in enumerate(_require(doc, "patterns", list, "patterns", default=[])):
        field = f"patterns[{i}]"
        if not isinstance(entry, dict):
            raise SceneFileError(field, "expected an object")
        mask_rel = _require(entry, "mask", str, f"{field}.mask", required=True)
        mask_path = os.path.join(base, mask_rel)
        if not os.path.exists(mask_path):
            raise SceneFileError(f"{field}.mask", f"file not found: {mask_path}")
        segment = entry.get("segment")
        if not isinstance(segment, (int, str)):
            raise SceneFileError(
                f"{field}.segment", "expected a segment index or id string"
            )
        u0 = _require(entry, "u0", (int, float), f"{field}.u0", required=True)
        v0 = _require(entry, "v0", (int, float), f"{field}.v0", required=True)
        scale = _require(entry, "scale", (int, float), f"{field}.scale", required=True)
        if scale <= 0:
            raise SceneFileError(f"{field}.scale", "must be > 0")
        patterns.append(
            {
                "mask_path": mask_path,
                "segment": segment,
                "u0": float(u0),
                "v0": float(v0),
                "scale": float(scale),
                "field": field,
            }
        )
    scene["patterns"] = patterns
    return scene


def _resolve_segment(selector, segments, field):
    if isinstance(selector, int):
        if not 0 <= selector < len(segments):
            raise SceneFileError(
                field, f"segment index {selector} out of range (0..{len(segments) - 1})"
            )
        return segments[selector]
    for seg in segments:
        if seg.id == selector:
            return seg
    known = ", ".join(seg.id for seg in segments)
    raise SceneFileError(field, f"no segment named {selector!r} (have: {known})")


def run_scene_pipeline(scene, model=None, extrema_cfg=None, chord_mode=None):
    """Segment the cloud, project and classify every placement, build the graph.

    Returns (cloud, segments, projected patterns, scene graph).
    """
    from .features import build_features
    from .signature import ChordMode, aspect_signature

    cloud = read_cloud(scene["cloud_path"], gravity=scene["gravity"])
    segments = segment_planes(cloud, scene["segmentation"])

    projected = []
    for i, entry in enumerate(scene["patterns"]):
        seg = _resolve_segment(entry["segment"], segments, f"{entry['field']}.segment")
        mask = read_mask(entry["mask_path"])
        mask.source = os.path.basename(entry["mask_path"])
        label = os.path.splitext(os.path.basename(entry["mask_path"]))[0]
        pattern = project_mask(
            seg,
            mask,
            (entry["u0"], entry["v0"], entry["scale"]),
            pattern_id=f"pattern_{i}",
            label=label,
        )
        if model is not None:
            sig = aspect_signature(mask, chord_mode or ChordMode.RAY_ENVELOPE)
            feats = build_features(sig, extrema_cfg)
            pred = predict(model, feats)
            pattern.label = pred.label
            pattern.probability = float(pred.probabilities.max())
            pattern.probabilities = {
                cls: float(p) for cls, p in zip(model.class_names, pred.probabilities)
            }
        projected.append(pattern)

    graph = build_scene_graph(
        segments,
        projected,
        scene["furniture"],
        GraphConfig(near_tau=scene["tau"]),
        gravity=np.asarray(scene["gravity"]),
    )
    return cloud, segments, projected, graph

"""Point-cloud container plus ASCII PLY and XYZ readers."""

from dataclasses import dataclass

import numpy as np

MIN_POINTS = 100


@dataclass
class PointCloud:
    points: np.ndarray  # (n, 3) meters
    colors: np.ndarray = None  # optional (n, 3) uint8
    gravity: np.ndarray = None  # unit up vector, default +z

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("points must be an (n, 3) array")
        if not np.isfinite(self.points).all():
            raise ValueError("point coordinates must be finite")
        if self.gravity is None:
            self.gravity = np.array([0.0, 0.0, 1.0])
        else:
            g = np.asarray(self.gravity, dtype=np.float64)
            norm = np.linalg.norm(g)
            if norm == 0:
                raise ValueError("gravity vector must be nonzero")
            self.gravity = g / norm

    def __len__(self):
        return len(self.points)


def read_ply(path, gravity=None):
    """Parse an ASCII PLY file with x y z and optional r g b properties."""
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        line = fh.readline().strip()
        if line != "ply":
            raise ValueError(f"{path}: missing ply magic")
        n_vertices = None
        props = []
        in_vertex = False
        fmt = None
        while True:
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: header never ends")
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "format":
                fmt = parts[1]
            elif parts[0] == "element":
                in_vertex = parts[1] == "vertex"
                if in_vertex:
                    n_vertices = int(parts[2])
            elif parts[0] == "property" and in_vertex:
                props.append(parts[-1])
            elif parts[0] == "end_header":
                break
        if fmt != "ascii":
            raise ValueError(f"{path}: only ascii PLY is supported, got {fmt}")
        if n_vertices is None:
            raise ValueError(f"{path}: no vertex element")
        for axis in ("x", "y", "z"):
            if axis not in props:
                raise ValueError(f"{path}: vertex property {axis} missing")
        table = np.loadtxt(fh, max_rows=n_vertices, ndmin=2)
    if table.shape[0] != n_vertices:
        raise ValueError(f"{path}: expected {n_vertices} vertices, got {table.shape[0]}")
    ix, iy, iz = (props.index(a) for a in ("x", "y", "z"))
    points = table[:, [ix, iy, iz]]
    colors = None
    if all(c in props for c in ("red", "green", "blue")):
        ci = [props.index(c) for c in ("red", "green", "blue")]
        colors = table[:, ci].astype(np.uint8)
    return PointCloud(points=points, colors=colors, gravity=gravity)


def read_xyz(path, gravity=None):
    """Whitespace-separated x y z [r g b] rows, comments with #."""
    table = np.loadtxt(path, comments="#", ndmin=2)
    if table.shape[1] < 3:
        raise ValueError(f"{path}: need at least 3 columns")
    colors = table[:, 3:6].astype(np.uint8) if table.shape[1] >= 6 else None
    return PointCloud(points=table[:, :3], colors=colors, gravity=gravity)


def read_cloud(path, gravity=None):
    """Dispatch on extension: .ply or whitespace XYZ otherwise."""
    if str(path).lower().endswith(".ply"):
        return read_ply(path, gravity=gravity)
    return read_xyz(path, gravity=gravity)


def write_ply(path, points, colors=None):
    """ASCII PLY writer (used by tests and demo scenes)."""
    points = np.asarray(points, dtype=np.float64)
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(points)}",
        "property float x",
        "property float y",
        "property float z",
    ]
    if colors is not None:
        lines += [
            "property uchar red",
            "property uchar green",
            "property uchar blue",
        ]
    lines.append("end_header")
    for i, p in enumerate(points):
        row = f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f}"
        if colors is not None:
            row += f" {int(colors[i][0])} {int(colors[i][1])} {int(colors[i][2])}"
        lines.append(row)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")

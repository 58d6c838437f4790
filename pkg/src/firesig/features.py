"""Peak/valley extraction and the classifier feature vector.

Peaks mark the largest outward extensions of a pattern, valleys the
deepest inward recessions.  Counts and angular locations of both, next to
the raw 360-sample signature, form the physical feature vector fed to the
classifier.
"""

from dataclasses import dataclass

import numpy as np

from .signature import N_ANGLES, AspectSignature

FEATURE_DIM = 372  # 360 signature samples + 2 counts + 10 locations
N_LOCATIONS = 5  # peak and valley angles kept in the location vector


@dataclass
class ExtremaConfig:
    smoothing_window: int = 5  # degrees, circular moving average, odd
    min_prominence: float = 0.05
    min_separation: int = 15  # degrees between same-kind extrema

    def __post_init__(self):
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ValueError("smoothing_window must be odd and >= 1")
        if not 0.0 < self.min_prominence < 1.0:
            raise ValueError("min_prominence must be in (0, 1)")
        if not 1 <= self.min_separation <= 120:
            raise ValueError("min_separation must be in [1, 120]")


@dataclass
class Extremum:
    angle: int  # degrees
    value: float  # smoothed signal value at the angle
    prominence: float


@dataclass
class PatternFeatures:
    signature: np.ndarray
    n_peaks: int
    n_valleys: int
    locations: np.ndarray  # 10 entries: 5 peak angles then 5 valley angles, /360
    peaks: list
    valleys: list

    def to_vector(self):
        """The documented 372-column classifier input row.

        Order: signature[0..359], n_peaks, n_valleys, peak_loc_1..5,
        valley_loc_1..5 (locations are angle/360, zero-padded).
        """
        return np.concatenate(
            [self.signature, [float(self.n_peaks), float(self.n_valleys)], self.locations]
        )


def _smooth_circular(values, window):
    if window <= 1:
        return values.astype(np.float64, copy=True)
    half = window // 2
    padded = np.concatenate([values[-half:], values, values[:half]])
    kernel = np.full(window, 1.0 / window)
    return np.convolve(padded, kernel, mode="valid")


def _plateau_maxima(s):
    """Indices of strict local maxima, plateaus collapsed to their middle.

    The sweep is anchored at the vertical reference: it runs from 0 to
    359 degrees, so the first and last samples are scan boundaries, not
    turning points.
    """
    n = len(s)
    maxima = []
    i = 1
    while i < n - 1:
        if s[i] <= s[i - 1]:
            i += 1
            continue
        j = i
        while j + 1 < n and s[j + 1] == s[i]:
            j += 1
        if j < n - 1 and s[j + 1] < s[i]:
            maxima.append((i + j) // 2)
        i = j + 1
    return maxima


def _scan_prominence(s, idx):
    """Topographic prominence of a local maximum on the bounded scan.

    On each side the base is the lowest value between the peak and the
    next strictly higher sample, or the scan edge; prominence is the drop
    to the higher base.  An extremum whose basin straddles the scan
    origin is cut by the boundary and keeps only its residual wobble.
    """
    peak = s[idx]
    bases = []
    for step in (-1, 1):
        lowest = peak
        pos = idx + step
        while 0 <= pos < len(s) and s[pos] <= peak:
            lowest = min(lowest, s[pos])
            pos += step
        bases.append(lowest)
    return float(peak - max(bases))


def _suppress_close(extrema, min_separation):
    """Keep only the higher of any pair closer than min_separation degrees."""
    order = sorted(extrema, key=lambda e: (-e.value, e.angle))
    kept = []
    for cand in order:
        ok = True
        for other in kept:
            d = abs(cand.angle - other.angle)
            if min(d, N_ANGLES - d) < min_separation:
                ok = False
                break
        if ok:
            kept.append(cand)
    return sorted(kept, key=lambda e: e.angle)


def _extrema_of(s, cfg):
    found = []
    for idx in _plateau_maxima(s):
        prom = _scan_prominence(s, idx)
        if prom >= cfg.min_prominence:
            found.append(Extremum(angle=idx, value=float(s[idx]), prominence=prom))
    return _suppress_close(found, cfg.min_separation)


def detect_extrema(sig, cfg=None):
    """Return (peaks, valleys) of a signature, each sorted by angle.

    The signal is smoothed with a circular moving average; an extremum
    must clear min_prominence (measured topographically on the circular
    signal) and same-kind extrema closer than min_separation keep only
    the stronger one.  Flat signals yield empty lists.
    """
    cfg = cfg or ExtremaConfig()
    values = sig.values if isinstance(sig, AspectSignature) else np.asarray(sig, float)
    if len(values) != N_ANGLES:
        raise ValueError(f"expected {N_ANGLES} samples, got {len(values)}")
    s = _smooth_circular(values, cfg.smoothing_window)
    peaks = _extrema_of(s, cfg)
    neg = _extrema_of(-s, cfg)
    valleys = [Extremum(e.angle, -e.value, e.prominence) for e in neg]
    return peaks, valleys


def build_features(sig, cfg=None):
    """Assemble the PatternFeatures record for one signature."""
    values = sig.values if isinstance(sig, AspectSignature) else np.asarray(sig, float)
    peaks, valleys = detect_extrema(sig, cfg)
    locations = np.zeros(2 * N_LOCATIONS)
    for i, p in enumerate(peaks[:N_LOCATIONS]):
        locations[i] = p.angle / N_ANGLES
    for i, v in enumerate(valleys[:N_LOCATIONS]):
        locations[N_LOCATIONS + i] = v.angle / N_ANGLES
    return PatternFeatures(
        signature=np.asarray(values, dtype=np.float64),
        n_peaks=len(peaks),
        n_valleys=len(valleys),
        locations=locations,
        peaks=peaks,
        valleys=valleys,
    )


def feature_names():
    names = [f"sig_{i:03d}" for i in range(N_ANGLES)]
    names += ["n_peaks", "n_valleys"]
    names += [f"peak_loc_{i + 1}" for i in range(N_LOCATIONS)]
    names += [f"valley_loc_{i + 1}" for i in range(N_LOCATIONS)]
    return names


def describe_feature(index):
    """Human-readable name of a classifier feature column."""
    if index < 0 or index >= FEATURE_DIM:
        raise IndexError(f"feature index {index} out of range")
    if index < N_ANGLES:
        return f"aspect ratio at {index}°"
    if index == N_ANGLES:
        return "peak count"
    if index == N_ANGLES + 1:
        return "valley count"
    k = index - N_ANGLES - 2
    if k < N_LOCATIONS:
        return f"peak location {k + 1}"
    return f"valley location {k - N_LOCATIONS + 1}"


def write_features_csv(path, rows, labels=None):
    """Feature matrix as CSV; optional label column appended last."""
    header = feature_names()
    if labels is not None:
        header = header + ["label"]
    lines = [",".join(header)]
    for i, row in enumerate(rows):
        cells = [f"{v:.9f}" for v in row]
        if labels is not None:
            cells.append(str(labels[i]))
        lines.append(",".join(cells))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_features_csv(path):
    """Inverse of write_features_csv; returns (matrix, labels-or-None)."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        has_label = header[-1] == "label"
        rows, labels = [], []
        for line in fh:
            cells = line.strip().split(",")
            if has_label:
                rows.append([float(c) for c in cells[:-1]])
                labels.append(cells[-1])
            else:
                rows.append([float(c) for c in cells])
    matrix = np.array(rows, dtype=np.float64)
    return matrix, (labels if has_label else None)

"""Command-line entry point wiring the modules into reproducible runs.

Exit codes: 0 success, 2 configuration error, 3 generation failure,
4 unreadable or degenerate mask, 5 model/feature dimension mismatch,
6 scene-file schema violation.

Every run with an output location writes a run.json echoing the fully
resolved configuration; timestamps are confined to that file, so all
primary outputs are byte-identical across reruns with equal flags.
A lockfile .<dirname>.lock guards each output directory against
concurrent runs.  The FIRESIG_THREADS environment variable caps worker
threads (default 1).
"""

import argparse
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import (
    DegenerateShape,
    DimensionMismatch,
    EmptyMask,
    EmptyProjection,
    FiresigError,
    InsufficientData,
    MaskFileError,
    SceneFileError,
)
from .features import ExtremaConfig, build_features
from .forest import (
    ForestHyperparams,
    evaluate,
    explain,
    load_model,
    model_to_dict,
    train,
)
from .mask import read_mask
from .signature import ChordMode, aspect_signature, write_signature_csv
from .synth import GROUP_LABELS, SynthConfig, generate_dataset, load_dataset, write_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATION = 3
EXIT_MASK = 4
EXIT_DIMENSION = 5
EXIT_SCENE = 6


def thread_cap():
    raw = os.environ.get("FIRESIG_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


class _OutputDir:
    """Creates the directory, holds its lockfile for the run duration."""

    def __init__(self, path):
        self.path = os.path.abspath(path)
        name = os.path.basename(self.path.rstrip("/"))
        self.lock_path = os.path.join(os.path.dirname(self.path), f".{name}.lock")
        self.fd = None

    def __enter__(self):
        os.makedirs(self.path, exist_ok=True)
        try:
            self.fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise FiresigError(
                f"output directory is locked by another run: {self.lock_path}"
            ) from None
        return self

    def __exit__(self, *exc):
        if self.fd is not None:
            os.close(self.fd)
            os.remove(self.lock_path)
        return False


def _write_run_json(path, subcommand, config):
    doc = {
        "subcommand": subcommand,
        "config": config,
        "version": __version__,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _chord_mode(name):
    return ChordMode.RAY_ENVELOPE if name == "ray" else ChordMode.FULL_LINE_ENVELOPE


def _extrema_cfg(args):
    return ExtremaConfig(
        smoothing_window=args.smoothing_window,
        min_prominence=args.min_prominence,
        min_separation=args.min_separation,
    )


def _dataset_labels(classes_mode, pattern_classes):
    if classes_mode == 8:
        return [c.value for c in pattern_classes]
    return [GROUP_LABELS[c] for c in pattern_classes]


def _dataset_features(masks, mode, cfg):
    rows = []
    for mask in masks:
        sig = aspect_signature(mask, mode)
        rows.append(build_features(sig, cfg).to_vector())
    return np.array(rows)


def split_indices(labels, train_frac, seed):
    """Deterministic stratified split; returns (train_idx, test_idx)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x5B117])))
    labels = np.asarray(labels)
    train_idx, test_idx = [], []
    for cls in sorted(set(labels.tolist())):
        idx = np.where(labels == cls)[0]
        perm = rng.permutation(idx)
        cut = int(round(train_frac * len(idx)))
        train_idx.extend(perm[:cut].tolist())
        test_idx.extend(perm[cut:].tolist())
    return np.array(sorted(train_idx), dtype=int), np.array(sorted(test_idx), dtype=int)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args):
    cfg = SynthConfig(
        canvas=args.canvas,
        n_per_class=args.n,
        seed=args.seed,
        noise_amplitude=args.noise,
        smoothing_sigma=args.sigma,
        distortion_amplitude=args.distortion,
        rotation_jitter=args.jitter,
        scale_range=(args.scale_min, args.scale_max),
        shape_jitter=args.shape_jitter,
    )
    with _OutputDir(args.out) as out:
        try:
            samples = generate_dataset(cfg, n_threads=thread_cap())
        except DegenerateShape as exc:
            print(f"generation failed: {exc}", file=sys.stderr)
            return EXIT_GENERATION
        write_dataset(samples, out.path)
        _write_run_json(
            os.path.join(out.path, "run.json"),
            "generate",
            {
                "canvas": cfg.canvas,
                "n_per_class": cfg.n_per_class,
                "seed": cfg.seed,
                "noise_amplitude": cfg.noise_amplitude,
                "smoothing_sigma": cfg.smoothing_sigma,
                "distortion_amplitude": cfg.distortion_amplitude,
                "rotation_jitter": cfg.rotation_jitter,
                "scale_range": list(cfg.scale_range),
                "shape_jitter": cfg.shape_jitter,
                "out": out.path,
            },
        )
    print(f"wrote {len(samples)} masks + manifest to {args.out}")
    return EXIT_OK


def cmd_signature(args):
    try:
        mask = read_mask(args.mask)
        sig = aspect_signature(mask, _chord_mode(args.mode))
    except (MaskFileError, EmptyMask, DegenerateShape, OSError) as exc:
        print(f"cannot analyse mask: {exc}", file=sys.stderr)
        return EXIT_MASK
    if args.out is None:
        sys.stdout.write("theta,aspect_ratio\n")
        for theta in range(len(sig.values)):
            sys.stdout.write(f"{theta},{sig.values[theta]:.9f}\n")
        return EXIT_OK
    write_signature_csv(args.out, sig)
    outputs = [args.out]
    if args.plot:
        from .features import detect_extrema
        from .plots import signature_svg

        peaks, valleys = detect_extrema(sig, _extrema_cfg(args))
        svg_path = os.path.splitext(args.out)[0] + ".svg"
        with open(svg_path, "w", encoding="ascii") as fh:
            fh.write(
                signature_svg(
                    sig.values,
                    peaks,
                    valleys,
                    title=os.path.basename(args.mask),
                )
            )
        outputs.append(svg_path)
    _write_run_json(
        args.out + ".run.json",
        "signature",
        {"mask": os.path.abspath(args.mask), "mode": args.mode, "out": args.out,
         "plot": bool(args.plot)},
    )
    print("wrote " + ", ".join(outputs))
    return EXIT_OK


def _load_dataset_or_fail(data_dir):
    manifest = os.path.join(data_dir, "manifest.csv")
    if not os.path.exists(manifest):
        raise FiresigError(f"dataset manifest not found: {manifest}")
    return load_dataset(data_dir)


def cmd_train(args):
    masks, classes, rows = _load_dataset_or_fail(args.data)
    labels = _dataset_labels(args.classes, classes)
    mode = _chord_mode(args.mode)
    X = _dataset_features(masks, mode, _extrema_cfg(args))
    train_idx, test_idx = split_indices(labels, args.split, args.seed)
    hp = ForestHyperparams(
        n_trees=args.trees,
        max_depth=args.depth,
        min_samples_leaf=args.min_leaf,
        features_per_split=args.mtry,
    )
    model = train(X[train_idx], [labels[i] for i in train_idx], hp, seed=args.seed)
    with _OutputDir(args.out) as out:
        doc = model_to_dict(model)
        doc["pipeline"] = {"chord_mode": args.mode, "classes": args.classes}
        with open(os.path.join(out.path, "model.json"), "w", encoding="ascii") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")
        split_lines = ["filename,role"]
        roles = {i: "train" for i in train_idx}
        roles.update({i: "test" for i in test_idx})
        for i, row in enumerate(rows):
            split_lines.append(f"{row['filename']},{roles[i]}")
        with open(os.path.join(out.path, "split.csv"), "w", encoding="ascii") as fh:
            fh.write("\n".join(split_lines) + "\n")
        _write_run_json(
            os.path.join(out.path, "run.json"),
            "train",
            {
                "data": os.path.abspath(args.data),
                "seed": args.seed,
                "split": args.split,
                "trees": args.trees,
                "depth": args.depth,
                "min_leaf": args.min_leaf,
                "mtry": args.mtry,
                "mode": args.mode,
                "classes": args.classes,
                "out": out.path,
            },
        )
    print(
        f"trained forest of {args.trees} trees on {len(train_idx)} samples "
        f"({len(model.class_names)} classes) -> {args.out}"
    )
    return EXIT_OK


def _find_model(path):
    if os.path.isdir(path):
        return os.path.join(path, "model.json")
    return path


def _model_pipeline(model_path):
    with open(model_path, encoding="ascii") as fh:
        doc = json.load(fh)
    return doc.get("pipeline", {"chord_mode": "ray", "classes": 7})


def cmd_eval(args):
    model_path = _find_model(args.model)
    model = load_model(model_path)
    pipeline = _model_pipeline(model_path)
    masks, classes, rows = _load_dataset_or_fail(args.data)
    labels = _dataset_labels(pipeline.get("classes", 7), classes)
    X = _dataset_features(
        masks, _chord_mode(pipeline.get("chord_mode", "ray")), _extrema_cfg(args)
    )

    subset = args.subset
    split_path = os.path.join(os.path.dirname(model_path), "split.csv")
    if subset == "auto":
        subset = "test" if os.path.exists(split_path) else "all"
    if subset in ("train", "test"):
        if not os.path.exists(split_path):
            raise FiresigError(f"subset {subset!r} needs {split_path}")
        roles = {}
        with open(split_path, encoding="ascii") as fh:
            fh.readline()
            for line in fh:
                fname, role = line.strip().split(",")
                roles[fname] = role
        keep = [i for i, row in enumerate(rows) if roles.get(row["filename"]) == subset]
    else:
        keep = list(range(len(rows)))
    if not keep:
        raise FiresigError(f"no samples selected for subset {subset!r}")

    report = evaluate(model, X[keep], [labels[i] for i in keep])
    with _OutputDir(args.out) as out:
        with open(os.path.join(out.path, "metrics.csv"), "w", encoding="ascii") as fh:
            fh.write(report.metrics_csv())
        with open(os.path.join(out.path, "confusion.csv"), "w", encoding="ascii") as fh:
            fh.write(report.confusion_csv())
        _write_run_json(
            os.path.join(out.path, "run.json"),
            "eval",
            {
                "data": os.path.abspath(args.data),
                "model": os.path.abspath(model_path),
                "subset": subset,
                "out": out.path,
            },
        )
    print(
        f"accuracy {report.accuracy:.4f} | macro P {report.macro_precision:.4f} "
        f"R {report.macro_recall:.4f} F1 {report.macro_f1:.4f} "
        f"on {len(keep)} samples ({subset})"
    )
    return EXIT_OK


def cmd_explain(args):
    model_path = _find_model(args.model)
    model = load_model(model_path)
    pipeline = _model_pipeline(model_path)
    try:
        mask = read_mask(args.mask)
        sig = aspect_signature(mask, _chord_mode(pipeline.get("chord_mode", "ray")))
    except (MaskFileError, EmptyMask, DegenerateShape, OSError) as exc:
        print(f"cannot analyse mask: {exc}", file=sys.stderr)
        return EXIT_MASK
    feats = build_features(sig, _extrema_cfg(args))
    path = explain(model, feats)
    text = path.render()
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        _write_run_json(
            args.out + ".run.json",
            "explain",
            {
                "model": os.path.abspath(model_path),
                "mask": os.path.abspath(args.mask),
                "out": args.out,
            },
        )
    return EXIT_OK


def _cmd_scene(args, include_projections):
    from .scene_io import load_scene_file, run_scene_pipeline

    scene = load_scene_file(args.scene)
    if args.tau is not None:
        scene["tau"] = args.tau
    model = None
    chord_mode = None
    if args.model:
        model_path = _find_model(args.model)
        model = load_model(model_path)
        chord_mode = _chord_mode(_model_pipeline(model_path).get("chord_mode", "ray"))
    cloud, segments, patterns, graph = run_scene_pipeline(
        scene, model=model, chord_mode=chord_mode
    )
    with _OutputDir(args.out) as out:
        with open(
            os.path.join(out.path, "scene_graph.json"), "w", encoding="ascii"
        ) as fh:
            json.dump(graph.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        with open(os.path.join(out.path, "distances.csv"), "w", encoding="ascii") as fh:
            fh.write(graph.distances_csv())
        if include_projections:
            lines = ["id,source,label,probability,host,n_points,area_m2,cx,cy,cz"]
            for p in patterns:
                prob = "" if p.probability is None else f"{p.probability:.4f}"
                lines.append(
                    f"{p.id},{p.source},{p.label},{prob},{p.host_segment},"
                    f"{len(p.points)},{p.area_m2:.6f},"
                    f"{p.centroid[0]:.6f},{p.centroid[1]:.6f},{p.centroid[2]:.6f}"
                )
            with open(
                os.path.join(out.path, "projections.csv"), "w", encoding="ascii"
            ) as fh:
                fh.write("\n".join(lines) + "\n")
        if args.plot:
            from .plots import scene_sketch_svg

            with open(os.path.join(out.path, "scene.svg"), "w", encoding="ascii") as fh:
                fh.write(scene_sketch_svg(graph))
        _write_run_json(
            os.path.join(out.path, "run.json"),
            "project" if include_projections else "graph",
            {
                "scene": os.path.abspath(args.scene),
                "model": os.path.abspath(args.model) if args.model else None,
                "tau": scene["tau"],
                "plot": bool(args.plot),
                "out": out.path,
            },
        )
    print(
        f"{len(segments)} segments, {len(patterns)} patterns, "
        f"{len(graph.nodes)} nodes, {len(graph.edges)} edges -> {args.out}"
    )
    return EXIT_OK


def cmd_project(args):
    return _cmd_scene(args, include_projections=True)


def cmd_graph(args):
    return _cmd_scene(args, include_projections=False)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_extrema_flags(p):
    p.add_argument("--smoothing-window", type=int, default=5)
    p.add_argument("--min-prominence", type=float, default=0.05)
    p.add_argument("--min-separation", type=int, default=15)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="firesig",
        description="Quantitative fire-pattern shape analysis and scene mapping",
    )
    parser.add_argument("--version", action="version", version=f"firesig {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="generate a labeled synthetic dataset")
    p.add_argument("--n", type=int, required=True, help="samples per generator class")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--canvas", type=int, default=256)
    p.add_argument("--noise", type=float, default=0.06)
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--distortion", type=float, default=0.08)
    p.add_argument("--jitter", type=float, default=5.0)
    p.add_argument("--shape-jitter", type=float, default=1.0)
    p.add_argument("--scale-min", type=float, default=0.55)
    p.add_argument("--scale-max", type=float, default=0.90)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("signature", help="compute the aspect-ratio signature of a mask")
    p.add_argument("mask")
    p.add_argument("--mode", choices=("ray", "line"), default="ray")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.add_argument("--plot", action="store_true", help="also write an SVG plot")
    _add_extrema_flags(p)
    p.set_defaults(func=cmd_signature)

    p = sub.add_parser("train", help="train a random forest on a generated dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=float, default=0.7)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--min-leaf", type=int, default=2)
    p.add_argument("--mtry", type=int, default=0, help="0 = ceil(sqrt(n_features))")
    p.add_argument("--mode", choices=("ray", "line"), default="ray")
    p.add_argument("--classes", type=int, choices=(7, 8), default=7)
    _add_extrema_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--subset", choices=("auto", "train", "test", "all"), default="auto")
    _add_extrema_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("explain", help="print the decision path for one mask")
    p.add_argument("--model", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", default=None)
    _add_extrema_flags(p)
    p.set_defaults(func=cmd_explain)

    for name, help_text in (
        ("project", "project scene masks onto surfaces and build the graph"),
        ("graph", "build the scene graph for a scene file"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scene", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--model", default=None)
        p.add_argument("--tau", type=float, default=None, help="NEAR threshold (m)")
        p.add_argument("--plot", action="store_true")
        p.set_defaults(func=cmd_project if name == "project" else cmd_graph)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SceneFileError as exc:
        print(f"scene file error: {exc}", file=sys.stderr)
        return EXIT_SCENE
    except DimensionMismatch as exc:
        print(f"dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except (EmptyProjection,) as exc:
        print(f"projection failed: {exc}", file=sys.stderr)
        return EXIT_SCENE
    except (InsufficientData, ValueError, FiresigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

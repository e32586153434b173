"""Command-line front end wiring the toolkit into reproducible experiments.

Every command is a pure function of its flags and its ``--seed``, writes its
artifacts under ``--run-dir``, and leaves a ``manifest.json`` there recording
inputs, output hashes, the seed, and the package version.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .corpus import (
    CorpusSpec,
    aligned_single_region_corpus,
    distractor_pair_corpus,
    generate_corpus,
    load_category_masks,
    load_fixations,
    load_scenes,
    quadrant_corpus,
    save_fixations,
    save_scenes,
)
from .errors import DataFormatError, DomainError
from .evaluation import (
    BOUNDARY_TOLERANCE_DVA,
    bootstrap_ci,
    build_mask_set,
    build_report,
    frequency_table,
)
from .foveation import DEFAULT_ALPHA, foveate
from .geometry import (
    DEFAULT_OBSERVER_DISTANCE_CM,
    DEFAULT_PIXEL_PITCH_CM,
    FieldGeometry,
    FixationPoint,
)
from .imageio import quantize_like, read_image, write_image
from .policy import (
    TrainingConfig,
    load_chain,
    preset_fixations,
    save_chain,
    train_policy_chain,
)
from .scanpath import (
    DEEPGAZE_IOR_DVA,
    GBVS_IOR_DVA,
    ITTI_KOCH_IOR_DVA,
    RANDOM_IOR_DVA,
    load_priority_map,
    map_scanpath,
    policy_scanpath,
    random_scanpath,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

SOURCE_IOR_DVA = {
    "deepgaze": DEEPGAZE_IOR_DVA,
    "gbvs": GBVS_IOR_DVA,
    "itti_koch": ITTI_KOCH_IOR_DVA,
    "custom": RANDOM_IOR_DVA,
}


# ---------------------------------------------------------------------------
# flag parsing helpers


def _xy(text: str) -> FixationPoint:
    try:
        x, y = (float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y in px, got {text!r}")
    return FixationPoint(x, y)


def _grid(text: str) -> "tuple[int, int]":
    try:
        rows, cols = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}")
    if rows < 1 or cols < 1:
        raise argparse.ArgumentTypeError(f"grid sides must be positive, got {text!r}")
    return rows, cols


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0,
                        help="random seed; same seed reproduces the run exactly")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for per-scene work")
    parser.add_argument("--run-dir", default=".",
                        help="directory collecting outputs and manifest.json")


def _add_field(parser: argparse.ArgumentParser, width=1280, height=1280) -> None:
    parser.add_argument("--field-width", type=int, default=width,
                        help="display field width (px)")
    parser.add_argument("--field-height", type=int, default=height,
                        help="display field height (px)")
    parser.add_argument("--distance-cm", type=float,
                        default=DEFAULT_OBSERVER_DISTANCE_CM,
                        help="observer distance from the display (cm)")
    parser.add_argument("--pitch-cm", type=float, default=DEFAULT_PIXEL_PITCH_CM,
                        help="physical size of one pixel (cm)")


def _field(args, width=None, height=None) -> FieldGeometry:
    return FieldGeometry(
        width=width if width is not None else args.field_width,
        height=height if height is not None else args.field_height,
        observer_distance_cm=args.distance_cm,
        pixel_pitch_cm=args.pitch_cm,
    )


def _out_path(args, path: str) -> str:
    resolved = path if os.path.isabs(path) else os.path.join(args.run_dir, path)
    parent = os.path.dirname(resolved)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return resolved


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(args, command: str, inputs: "list[str]",
                    outputs: "list[str]") -> None:
    parameters = {
        key: value for key, value in sorted(vars(args).items())
        if key not in ("func", "run_dir", "argv")
    }
    manifest = {
        "command": command,
        "argv": getattr(args, "argv", []),
        "version": __version__,
        "seed": args.seed,
        "threads": args.threads,
        "parameters": parameters,
        "inputs": [{"path": p, "sha256": _sha256(p)} for p in inputs],
        "outputs": [{"path": p, "sha256": _sha256(p)} for p in outputs],
    }
    os.makedirs(args.run_dir, exist_ok=True)
    with open(os.path.join(args.run_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


# ---------------------------------------------------------------------------
# foveate


def cmd_foveate(args) -> int:
    image = read_image(args.image)
    h, w = image.shape[:2]
    fieldgeom = _field(args, width=w, height=h)
    fov = foveate(image, None, args.fixation, alpha=args.alpha,
                  fieldgeom=fieldgeom)
    out = _out_path(args, args.out)
    write_image(out, quantize_like(fov.pixels, image))
    _write_manifest(args, "foveate", [args.image], [out])
    return EXIT_OK


# ---------------------------------------------------------------------------
# corpus


def cmd_corpus(args) -> int:
    fieldgeom = _field(args)
    if args.kind == "mixed":
        spec = CorpusSpec(
            n_scenes=args.n, fieldgeom=fieldgeom, seed=args.seed,
            region_size_range=(args.min_size, args.max_size),
            concept_dim=args.concept_dim,
        )
        scenes = generate_corpus(spec)
    elif args.kind == "aligned":
        scenes = aligned_single_region_corpus(
            args.n, fieldgeom, grid=args.grid, seed=args.seed,
            region_size=args.region_size, jitter=args.jitter,
        )
    elif args.kind == "quadrant":
        scenes = quadrant_corpus(
            args.n, fieldgeom, seed=args.seed,
            region_size=args.region_size, jitter=args.jitter,
        )
    else:
        scenes = distractor_pair_corpus(
            args.n, fieldgeom, grid=args.grid, seed=args.seed,
            region_size=args.region_size, jitter=args.jitter,
        )
    out = _out_path(args, args.out)
    save_scenes(scenes, out)
    _write_manifest(args, "corpus", [], [out])
    return EXIT_OK


# ---------------------------------------------------------------------------
# train


_CONFIG_FLAGS = (
    ("fixations", "n_fixations"),
    ("epochs", "epochs"),
    ("iterations", "iterations"),
    ("batch_size", "batch_size"),
    ("learning_rate", "learning_rate"),
    ("weight_decay", "weight_decay"),
    ("temperature", "temperature"),
    ("smooth_sigma", "smooth_sigma"),
)


def _training_config(args) -> TrainingConfig:
    values = {}
    if args.config is not None:
        with open(args.config, "rb") as fh:
            try:
                document = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise DataFormatError(f"{args.config}: {exc}") from exc
        section = document.get("training", document)
        known = set(TrainingConfig().to_dict())
        for key, value in section.items():
            if key not in known:
                raise DataFormatError(f"{args.config}: unknown training key {key!r}")
            values[key] = tuple(value) if key == "presets" else value
    for flag, key in _CONFIG_FLAGS:
        flag_value = getattr(args, flag)
        if flag_value is not None:
            values[key] = flag_value
    if args.presets is not None:
        values["presets"] = tuple(p.strip() for p in args.presets.split(","))
    return TrainingConfig(**values)


def cmd_train(args) -> int:
    scenes = load_scenes(args.scenes)
    config = _training_config(args)
    fieldgeom = _field(args)
    chain = train_policy_chain(
        scenes, config, reward=args.reward, seed=args.seed,
        fieldgeom=fieldgeom, grid=args.grid, channels=args.channels,
        alpha=args.alpha, describe_samples=args.describe_samples,
    )
    out = _out_path(args, args.out)
    save_chain(chain, out)
    inputs = [args.scenes] + ([args.config] if args.config else [])
    _write_manifest(args, "train", inputs, [out])
    return EXIT_OK


# ---------------------------------------------------------------------------
# scanpath


def _model_scanpaths(args) -> "tuple[list, list[str]]":
    chain = load_chain(args.checkpoint)
    scenes = load_scenes(args.scenes)
    if args.initial is not None:
        start = args.initial
    else:
        start = preset_fixations(chain.fieldgeom)[args.preset]

    def one(scene):
        return policy_scanpath(chain, scene, start,
                               describe_samples=args.describe_samples)

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        sequences = list(pool.map(one, scenes))
    return sequences, [args.checkpoint, args.scenes]


def _map_scanpaths(args) -> "tuple[list, list[str]]":
    pmap = load_priority_map(args.map)
    h, w = pmap.values.shape
    fieldgeom = _field(args, width=w, height=h)
    ior = args.ior_dva if args.ior_dva is not None else SOURCE_IOR_DVA[args.source]
    smooth = args.smooth_dva if args.smooth_dva is not None else ior
    scene_id = args.scene_id or os.path.splitext(os.path.basename(args.map))[0]
    seq = map_scanpath(
        pmap, args.fixations, ior, smooth, fieldgeom=fieldgeom,
        initial=args.initial, rng=np.random.default_rng(args.seed),
        scene_id=scene_id,
    )
    if args.source != "custom":
        seq = dataclasses.replace(seq, source=args.source)
    return [seq], [args.map]


def _random_scanpaths(args) -> "tuple[list, list[str]]":
    fieldgeom = _field(args)
    rng = np.random.default_rng(args.seed)
    ior = args.ior_dva if args.ior_dva is not None else RANDOM_IOR_DVA
    inputs = []
    if args.scenes is not None:
        ids = [scene.id for scene in load_scenes(args.scenes)]
        inputs.append(args.scenes)
    else:
        ids = [f"random_{i:04d}" for i in range(args.n)]
    sequences = [
        random_scanpath(fieldgeom, args.fixations,
                        ior_diameter_dva=ior, rng=rng, scene_id=sid)
        for sid in ids
    ]
    return sequences, inputs


def cmd_scanpath(args) -> int:
    if args.mode == "model":
        sequences, inputs = _model_scanpaths(args)
    elif args.mode == "map":
        sequences, inputs = _map_scanpaths(args)
    else:
        sequences, inputs = _random_scanpaths(args)
    out = _out_path(args, args.out)
    save_fixations(sequences, out)
    _write_manifest(args, "scanpath", inputs, [out])
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval


def _mask_sets(args, scene_ids, fieldgeom):
    if args.masks is not None:
        return {
            sid: load_category_masks(args.masks, sid, fieldgeom)
            for sid in scene_ids
        }
    masksets = {}
    for scene in load_scenes(args.scenes):
        if scene.id in scene_ids:
            masksets[scene.id] = build_mask_set(scene, fieldgeom)
    return masksets


def cmd_eval(args) -> int:
    if args.masks is None and args.scenes is None:
        raise DataFormatError("eval needs --masks DIR or --scenes FILE")
    fieldgeom = _field(args)
    sequences = load_fixations(args.human)
    for path in args.model:
        sequences.extend(load_fixations(path))
    scene_ids = {seq.scene_id for seq in sequences}
    masksets = _mask_sets(args, scene_ids, fieldgeom)

    by_source: "dict[str, list]" = {}
    for seq in sequences:
        by_source.setdefault(seq.source, []).append(seq)
    tables = {
        source: frequency_table(group, masksets, fieldgeom, args.tolerance)
        for source, group in by_source.items()
    }
    report = build_report(tables, args.human_source, args.baseline)

    payload = json.loads(report.to_json())
    intervals: "dict[str, dict[str, list]]" = {}
    for source, table in tables.items():
        per_category = {}
        for k, category in enumerate(table.categories):
            column = table.group_means[:, k]
            column = column[np.isfinite(column)]
            if column.size == 0:
                continue
            lo, hi = bootstrap_ci(column, n_resamples=args.bootstrap,
                                  seed=args.seed)
            per_category[category] = [lo, hi]
        intervals[source] = per_category
    payload["bootstrap_ci"] = intervals
    payload["tolerance_dva"] = args.tolerance

    out = _out_path(args, args.out)
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(args, "eval", [args.human] + list(args.model), [out])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser assembly


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gazeopt",
        description="Foveated-vision simulation and gaze-policy optimization.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("foveate", help="render an image as seen with fixations")
    p.add_argument("image", help="input image (PNG/PPM/PGM)")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--fixation", type=_xy, action="append", required=True,
                   metavar="X,Y", help="fixation location (px); repeatable")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                   help="resolution falloff (deg); 20 near-sharp, 0.2 heavy blur")
    p.add_argument("--distance-cm", type=float,
                   default=DEFAULT_OBSERVER_DISTANCE_CM,
                   help="observer distance from the display (cm)")
    p.add_argument("--pitch-cm", type=float, default=DEFAULT_PIXEL_PITCH_CM,
                   help="physical size of one pixel (cm)")
    _add_common(p)
    p.set_defaults(func=cmd_foveate)

    p = sub.add_parser("corpus", help="generate a synthetic scene corpus")
    p.add_argument("--out", required=True, help="output scene JSON path")
    p.add_argument("--n", type=int, default=50, help="number of scenes")
    p.add_argument("--kind", choices=("mixed", "aligned", "quadrant", "pair"),
                   default="mixed", help="corpus layout family")
    p.add_argument("--grid", type=_grid, default=(5, 5), metavar="RxC",
                   help="cell grid for aligned/pair layouts")
    p.add_argument("--region-size", type=int, default=48,
                   help="square region side for controlled layouts (px)")
    p.add_argument("--jitter", type=int, default=8,
                   help="in-cell placement jitter for controlled layouts (px)")
    p.add_argument("--min-size", type=int, default=120,
                   help="smallest mixed-corpus region side (px)")
    p.add_argument("--max-size", type=int, default=320,
                   help="largest mixed-corpus region side (px)")
    p.add_argument("--concept-dim", type=int, default=8,
                   help="embedding dimension for mixed-corpus concepts")
    _add_field(p)
    _add_common(p)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("train", help="train the gaze-policy chain")
    p.add_argument("scenes", help="scene corpus JSON")
    p.add_argument("--out", required=True, help="output checkpoint path")
    p.add_argument("--config", help="TOML file with a [training] section")
    p.add_argument("--reward", choices=("semantic", "entropy"),
                   default="semantic", help="reward signal driving the policy")
    p.add_argument("--fixations", type=int, help="fixations per scanpath")
    p.add_argument("--epochs", type=int, help="passes over scene-preset pairs")
    p.add_argument("--iterations", type=int,
                   help="total optimizer steps (overrides epochs)")
    p.add_argument("--batch-size", type=int, help="rollouts per optimizer step")
    p.add_argument("--learning-rate", type=float, help="step size")
    p.add_argument("--weight-decay", type=float, help="decoupled decay factor")
    p.add_argument("--temperature", type=float, help="softmax temperature")
    p.add_argument("--smooth-sigma", type=float,
                   help="credit-smoothing radius (grid cells)")
    p.add_argument("--presets", help="comma-separated initial-fixation names")
    p.add_argument("--grid", type=_grid, default=(20, 20), metavar="RxC",
                   help="action grid over the field")
    p.add_argument("--channels", type=int, default=64,
                   help="feature channels per cell")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                   help="resolution falloff (deg)")
    p.add_argument("--describe-samples", type=int, default=10,
                   help="token draws per region when scoring understanding")
    _add_field(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("scanpath", help="generate fixation sequences")
    p.add_argument("--mode", choices=("model", "map", "random"), required=True,
                   help="policy rollout, priority-map argmax, or random baseline")
    p.add_argument("--out", required=True, help="output fixation CSV path")
    p.add_argument("--checkpoint", help="trained chain (model mode)")
    p.add_argument("--scenes", help="scene corpus JSON (model/random modes)")
    p.add_argument("--map", help="priority map image or CSV (map mode)")
    p.add_argument("--source", choices=tuple(SOURCE_IOR_DVA), default="custom",
                   help="priority-map family; sets the default IOR diameter")
    p.add_argument("--preset", default="below_center",
                   help="named initial fixation (model mode)")
    p.add_argument("--initial", type=_xy, metavar="X,Y",
                   help="explicit initial fixation (px)")
    p.add_argument("--fixations", type=int, default=4,
                   help="fixations per sequence (map/random modes)")
    p.add_argument("--n", type=int, default=1,
                   help="number of sequences (random mode without scenes)")
    p.add_argument("--ior-dva", type=float, default=None,
                   help="inhibition-of-return patch diameter (DVA)")
    p.add_argument("--smooth-dva", type=float, default=None,
                   help="map smoothing diameter (DVA); defaults to the IOR size")
    p.add_argument("--scene-id", default=None,
                   help="scene id for map-mode output rows (default: map stem)")
    p.add_argument("--describe-samples", type=int, default=10,
                   help="token draws per region when scoring understanding")
    _add_field(p)
    _add_common(p)
    p.set_defaults(func=cmd_scanpath)

    p = sub.add_parser("eval", help="score model scanpaths against human data")
    p.add_argument("--human", required=True, help="human fixation CSV")
    p.add_argument("--model", action="append", default=[],
                   help="model fixation CSV; repeatable")
    p.add_argument("--scenes", help="scene corpus JSON for mask rasterization")
    p.add_argument("--masks", help="directory of scene__category.png masks")
    p.add_argument("--human-source", default="human",
                   help="source label carrying the human data")
    p.add_argument("--baseline", default="random",
                   help="source whose misfit normalizes the scores")
    p.add_argument("--tolerance", type=float, default=BOUNDARY_TOLERANCE_DVA,
                   help="hit tolerance around region boundaries (DVA)")
    p.add_argument("--bootstrap", type=int, default=1000,
                   help="resamples for confidence intervals")
    p.add_argument("--out", required=True, help="output report JSON path")
    _add_field(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    args = build_parser().parse_args(argv)
    args.argv = [str(a) for a in argv]
    try:
        return args.func(args)
    except DataFormatError as exc:
        print(f"gazeopt: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"gazeopt: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DomainError as exc:
        print(f"gazeopt: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

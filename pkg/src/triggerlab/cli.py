"""``triggerlab`` command line: every workflow behind one executable.

Every run resolves its parameters, writes them to ``run.json`` next to the
primary output, and derives all randomness from ``--seed`` (default from
``TRIGGERLAB_SEED``, else 0), so identical run.json means byte-identical
outputs.  Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .annotations import (
    filter_best,
    load_manifest,
    manifest_to_dict,
    permute_annotations,
    rescale_to_latent,
    save_manifest,
)
from .backend import SyntheticBackend, SyntheticParams
from .detector import (
    calibrate_null,
    detect,
    load_calibration,
    load_detections,
    map50,
    save_calibration,
    save_detections,
)
from .errors import TriggerLabError
from .metrics import heatmap, isr, random_center_baseline, trigger_entropy
from .noise import (
    LatentTensor,
    Region,
    ShiftedGaussianSpec,
    SinePatchSpec,
    extract_patch,
    inject_patch,
    load_noise,
    sample_noise,
    save_noise,
    synth_shifted_gaussian,
    synth_sine_patch,
)
from .sampling import align, diversity_eval, gsr_study, isr_study, purify
from .stats import decile_analysis, permutation_test


def _default_seed() -> int:
    return int(os.environ.get("TRIGGERLAB_SEED", "0"))


def _parse_shape(text: str) -> tuple[int, int, int]:
    parts = tuple(int(p) for p in text.split(","))
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("shape must be C,H,W")
    return parts


def _parse_region(text: str) -> Region:
    parts = [int(p) for p in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("region must be x1,y1,x2,y2")
    return Region(*parts)


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(payload, fp, indent=2, sort_keys=True)
        fp.write("\n")


def _write_run_config(args: argparse.Namespace) -> None:
    """Echo the resolved configuration beside the primary output."""
    params = {
        k: (str(v) if isinstance(v, Path) else list(v.as_tuple()) if isinstance(v, Region) else v)
        for k, v in sorted(vars(args).items())
        if k not in ("func",) and v is not None
    }
    anchor = None
    for key in ("out", "report"):
        value = getattr(args, key, None)
        if value is not None:
            anchor = Path(value).resolve().parent
            break
    if anchor is None:
        anchor = Path.cwd()
    _write_json(anchor / "run.json", {
        "version": __version__,
        "command": args.command,
        "parameters": params,
    })


def _load_calib(args) -> "NullCalibration":
    if getattr(args, "calib", None):
        return load_calibration(args.calib)
    return calibrate_null(seed=args.seed)


def _manifest_latent_boxes(manifest, record):
    return [
        b if b.space == "latent" else rescale_to_latent(b, manifest.image_size, manifest.latent_size)
        for b in record.annotations
    ]


# --- subcommand bodies ---------------------------------------------------------

def cmd_sample(args) -> int:
    tensor = sample_noise(args.seed, args.shape)
    save_noise(args.out, tensor)
    print(f"wrote {args.out} shape {tensor.shape}")
    return 0


def cmd_inject(args) -> int:
    noise = load_noise(args.noise)
    patch_arr = np.load(args.patch)
    x, y = (int(v) for v in args.at.split(","))
    region = Region(x, y, x + patch_arr.shape[2], y + patch_arr.shape[1])
    from .noise import Patch

    patch = Patch(region=Region(0, 0, patch_arr.shape[2], patch_arr.shape[1]),
                  data=patch_arr)
    out = inject_patch(noise, patch, region)
    save_noise(args.out, out)
    print(f"injected {patch_arr.shape} patch at {region.as_tuple()} -> {args.out}")
    return 0


def cmd_synth_patch(args) -> int:
    w, h = (int(v) for v in args.size.split("x"))
    if args.kind == "shifted":
        patch = synth_shifted_gaussian(
            ShiftedGaussianSpec(std=args.std, mean=args.mean),
            (w, h), seed=args.seed, channels=args.channels,
        )
    else:
        if args.base:
            base_arr = np.load(args.base)
            from .noise import Patch

            base = Patch(region=Region(0, 0, base_arr.shape[2], base_arr.shape[1]),
                         data=base_arr)
        else:
            base = synth_shifted_gaussian(
                ShiftedGaussianSpec(std=1.0), (w, h),
                seed=args.seed, channels=args.channels,
            )
        patch = synth_sine_patch(base, SinePatchSpec(theta=args.theta))
    with open(args.out, "wb") as fp:
        np.lib.format.write_array(fp, np.ascontiguousarray(patch.data, dtype="<f4"),
                                  version=(1, 0))
    print(f"wrote {args.kind} patch {patch.data.shape} -> {args.out}")
    return 0


def cmd_entropy(args) -> int:
    manifest = load_manifest(args.manifest)
    rows = []
    for record in manifest.records:
        if not record.annotations:
            continue
        boxes = _manifest_latent_boxes(manifest, record)
        report = trigger_entropy(boxes, record.noise_id)
        rows.append((record.noise_id, report.n, report.entropy,
                     report.xc_mean, report.yc_mean))
    with open(args.out, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["noise_id", "n", "H", "xc_mean", "yc_mean"])
        for row in rows:
            writer.writerow([row[0], row[1], repr(row[2]), repr(row[3]), repr(row[4])])
    print(f"wrote {len(rows)} entropy rows -> {args.out}")
    return 0


def cmd_heatmap(args) -> int:
    manifest = load_manifest(args.manifest)
    record = next((r for r in manifest.records if r.noise_id == args.noise_id), None)
    if record is None:
        raise TriggerLabError(f"noise_id {args.noise_id!r} not in manifest")
    boxes = _manifest_latent_boxes(manifest, record)
    grid = heatmap(boxes, manifest.latent_size, manifest.latent_size)
    with open(args.out, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        for row in grid:
            writer.writerow([repr(float(v)) for v in row])
    print(f"wrote {grid.shape[0]}x{grid.shape[1]} heatmap -> {args.out}")
    return 0


def cmd_energy_test(args) -> int:
    a = np.load(args.a)
    b = np.load(args.b)
    result = permutation_test(a, b, n_perms=args.perms, seed=args.seed)
    _write_json(args.out, {
        "energy_distance": result.energy_distance,
        "statistic": result.statistic,
        "p_value": result.p_value,
        "m": result.m,
        "n": result.n,
        "permutations": result.permutations,
    })
    print(f"E={result.energy_distance:.6g} p={result.p_value:.4g} -> {args.out}")
    return 0


def cmd_decile_analysis(args) -> int:
    manifest = load_manifest(args.manifest)
    noises = {}
    noise_dir = Path(args.noise_dir)
    for record in manifest.records:
        path = noise_dir / f"{record.noise_id}.npy"
        if path.exists():
            noises[record.noise_id] = load_noise(path)
    analysis = decile_analysis(manifest, noises, n_perms=args.perms, seed=args.seed,
                               n_groups=args.groups)
    with open(args.out, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["decile", "entropy_lo", "entropy_hi", "mean_E", "p"])
        for g in analysis.groups:
            writer.writerow([g.decile, repr(g.entropy_lo), repr(g.entropy_hi),
                             repr(g.mean_energy_distance), repr(g.p_value)])
    print(f"spearman_rho={analysis.spearman_rho:.4f} p={analysis.spearman_p:.4g} "
          f"-> {args.out}")
    return 0


def cmd_calibrate(args) -> int:
    calib = calibrate_null(
        window=args.window, stride=args.stride,
        n_noises=args.noises, seed=args.seed, shape=args.shape,
    )
    save_calibration(args.out, calib)
    print(f"calibrated {len(calib.scores)} null window scores -> {args.out}")
    return 0


def _detect_one(job):
    path, calib, min_conf, nms_iou = job
    tensor = load_noise(path)
    return Path(path).stem, detect(tensor, calib, min_conf, nms_iou)


def cmd_detect(args) -> int:
    calib = _load_calib(args)
    files = sorted(Path(args.noise_dir).glob("*.npy"))
    if not files:
        raise TriggerLabError(f"no .npy files in {args.noise_dir}")
    jobs = [(str(f), calib, args.min_conf, args.nms_iou) for f in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = dict(pool.map(_detect_one, jobs))
    else:
        results = dict(map(_detect_one, jobs))
    save_detections(args.out, results)
    total = sum(len(v) for v in results.values())
    print(f"{total} detections over {len(files)} noises -> {args.out}")
    return 0


def cmd_purify(args) -> int:
    calib = _load_calib(args)
    noise = load_noise(args.infile) if args.infile else sample_noise(args.seed, args.shape)
    result = purify(noise, calib, args.min_conf, args.max_iters, seed=args.seed)
    save_noise(args.out, result.noise)
    if args.report:
        _write_json(args.report, {
            "converged": result.converged,
            "iterations": result.iterations,
            "regions_per_iteration": [
                [list(r.as_tuple()) for r in regions]
                for regions in result.regions_per_iteration
            ],
        })
    print(f"converged={result.converged} iterations={result.iterations} -> {args.out}")
    return 0


def cmd_align(args) -> int:
    calib = _load_calib(args)
    target = _parse_region(args.region) if args.region else args.side
    result = align(
        target, calib, max_attempts=args.max_attempts, seed=args.seed,
        min_confidence=args.min_conf, shape=args.shape,
    )
    save_noise(args.out, result.noise)
    if args.report:
        top = result.top_detection
        _write_json(args.report, {
            "success": result.success,
            "attempts": result.attempts,
            "target": list(result.target.as_tuple()),
            "top_detection": None if top is None else {
                "region": list(top.region.as_tuple()),
                "score": top.score,
                "confidence": top.confidence,
            },
        })
    print(f"success={result.success} attempts={result.attempts} -> {args.out}")
    return 0


def cmd_simulate(args) -> int:
    calib = _load_calib(args)
    params = SyntheticParams(calibration=calib, independent_stat=args.independent_stat)
    backend = SyntheticBackend(params)
    report = isr_study(
        backend, n_seeds=args.seeds, inject_std=args.inject_std,
        trigger_region=_parse_region(args.region), seed=args.seed,
    )
    _write_json(args.report, report)
    lines = ", ".join(
        f"{mode}={info['isr']:.3f}" for mode, info in report["modes"].items()
    )
    print(f"ISR over {args.seeds} seeds: {lines} -> {args.report}")
    return 0


def cmd_evaluate(args) -> int:
    if args.metric == "map50":
        detections = load_detections(args.detections)
        manifest = load_manifest(args.manifest)
        truth = {
            r.noise_id: [
                (b.x1, b.y1, b.x2, b.y2) for b in _manifest_latent_boxes(manifest, r)
            ]
            for r in manifest.records
        }
        report = {"map50": map50(detections, truth)}
        if args.permuted_seed is not None:
            permuted = permute_annotations(manifest, args.permuted_seed)
            truth_p = {
                r.noise_id: [
                    (b.x1, b.y1, b.x2, b.y2) for b in _manifest_latent_boxes(permuted, r)
                ]
                for r in permuted.records
            }
            report["map50_permuted"] = map50(detections, truth_p)
    elif args.metric == "isr":
        manifest = load_manifest(args.manifest)
        region = _parse_region(args.region)
        cases = []
        for record in manifest.records:
            by_prompt: dict[str, list] = {}
            for a in _manifest_latent_boxes(manifest, record):
                by_prompt.setdefault(a.prompt_id, []).append(a)
            for pid, boxes in sorted(by_prompt.items()):
                prompt = manifest.prompts.get(pid)
                class_name = prompt.class_name if prompt else boxes[0].class_name
                best = filter_best(boxes, class_name, args.min_score)
                cases.append((region, best))
        report = {"isr": isr(cases), "n_cases": len(cases)}
    elif args.metric == "gsr":
        calib = _load_calib(args)
        backend = SyntheticBackend(SyntheticParams(calibration=calib))
        aligned = gsr_study(backend, calib, trials=args.trials, aligned=True,
                            seed=args.seed, min_confidence=args.min_conf)
        raw = gsr_study(backend, calib, trials=args.trials, aligned=False,
                        seed=args.seed, min_confidence=args.min_conf)
        report = {
            "aligned": aligned, "raw": raw,
            "delta_pp": 100.0 * (aligned["gsr"] - raw["gsr"]),
        }
    elif args.metric == "diversity":
        calib = _load_calib(args)
        backend = SyntheticBackend(SyntheticParams(calibration=calib))
        purified = diversity_eval(backend, args.seeds, purified=True, calibration=calib,
                                  min_confidence=args.min_conf, seed=args.seed)
        raw = diversity_eval(backend, args.seeds, purified=False, seed=args.seed)
        baseline = random_center_baseline(
            n_sets=10, coord_range=64.0, seed=args.seed,
            n_trials=max(1000, args.seeds),
        )
        report = {
            "purified_mean_entropy": purified.mean_entropy,
            "raw_mean_entropy": raw.mean_entropy,
            "random_baseline_mean_entropy": float(
                np.mean([r.entropy for r in baseline])
            ),
            "n_seeds": args.seeds,
        }
    else:
        raise TriggerLabError(f"unknown metric {args.metric!r}")
    _write_json(args.report, report)
    print(json.dumps(report if len(json.dumps(report)) < 400 else {
        k: v for k, v in report.items() if not isinstance(v, dict)
    }, sort_keys=True))
    return 0


def cmd_rescale(args) -> int:
    manifest = load_manifest(args.manifest)
    for record in manifest.records:
        record.annotations = [
            b if b.space == "latent"
            else rescale_to_latent(b, manifest.image_size, manifest.latent_size)
            for b in record.annotations
        ]
    save_manifest(args.out, manifest)
    print(f"rescaled {len(manifest.records)} records -> {args.out}")
    return 0


def cmd_filter(args) -> int:
    manifest = load_manifest(args.manifest)
    kept = 0
    for record in manifest.records:
        by_prompt: dict[str, list] = {}
        for a in record.annotations:
            by_prompt.setdefault(a.prompt_id, []).append(a)
        best = []
        for pid, boxes in sorted(by_prompt.items()):
            prompt = manifest.prompts.get(pid)
            class_name = prompt.class_name if prompt else boxes[0].class_name
            choice = filter_best(boxes, class_name, args.min_score)
            if choice is not None:
                best.append(choice)
        record.annotations = best
        kept += len(best)
    save_manifest(args.out, manifest)
    print(f"kept {kept} best annotations -> {args.out}")
    return 0


def cmd_permute(args) -> int:
    manifest = load_manifest(args.manifest)
    save_manifest(args.out, permute_annotations(manifest, args.seed))
    print(f"permuted {len(manifest.records)} records -> {args.out}")
    return 0


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triggerlab",
        description="Trigger-patch analysis toolkit for diffusion initial noise.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=_default_seed())
        return p

    p = add("sample", cmd_sample, "draw a standard-normal latent tensor")
    p.add_argument("--shape", type=_parse_shape, default=(4, 64, 64))
    p.add_argument("--out", required=True)

    p = add("inject", cmd_inject, "inject a patch file into a noise file")
    p.add_argument("--noise", required=True)
    p.add_argument("--patch", required=True)
    p.add_argument("--at", required=True, help="target top-left as x,y")
    p.add_argument("--out", required=True)

    p = add("synth-patch", cmd_synth_patch, "synthesize a handcrafted trigger patch")
    p.add_argument("--kind", choices=["shifted", "sine"], required=True)
    p.add_argument("--std", type=float, default=1.5)
    p.add_argument("--mean", type=float, default=0.0)
    p.add_argument("--theta", type=float, default=0.15 * np.pi / 2)
    p.add_argument("--size", default="24x24", help="WxH in latent cells")
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--base", help="base patch .npy for the sine transform")
    p.add_argument("--out", required=True)

    p = add("entropy", cmd_entropy, "trigger entropy per manifest record")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)

    p = add("heatmap", cmd_heatmap, "object-coverage heatmap of one noise")
    p.add_argument("--manifest", required=True)
    p.add_argument("--noise-id", required=True)
    p.add_argument("--out", required=True)

    p = add("energy-test", cmd_energy_test, "two-sample energy permutation test")
    p.add_argument("--a", required=True, help="point set .npy (n, d)")
    p.add_argument("--b", required=True)
    p.add_argument("--perms", type=int, default=999)
    p.add_argument("--out", required=True)

    p = add("decile-analysis", cmd_decile_analysis,
            "entropy-ranked group energy tests")
    p.add_argument("--manifest", required=True)
    p.add_argument("--noise-dir", required=True)
    p.add_argument("--perms", type=int, default=199)
    p.add_argument("--groups", type=int, default=10)
    p.add_argument("--out", required=True)

    p = add("calibrate", cmd_calibrate, "calibrate null window scores")
    p.add_argument("--window", type=int, default=24)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--noises", type=int, default=100)
    p.add_argument("--shape", type=_parse_shape, default=(4, 64, 64))
    p.add_argument("--out", required=True)

    p = add("detect", cmd_detect, "detect trigger patches in noise files")
    p.add_argument("--noise-dir", required=True)
    p.add_argument("--calib")
    p.add_argument("--min-conf", type=float, default=0.999)
    p.add_argument("--nms-iou", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)

    p = add("purify", cmd_purify, "regenerate detected regions until clean")
    p.add_argument("--in", dest="infile", help="noise .npy to purify (default: fresh from seed)")
    p.add_argument("--calib")
    p.add_argument("--min-conf", type=float, default=0.999)
    p.add_argument("--max-iters", type=int, default=10)
    p.add_argument("--shape", type=_parse_shape, default=(4, 64, 64))
    p.add_argument("--out", required=True)
    p.add_argument("--report")

    p = add("align", cmd_align, "reject-sample noises until the top detection fits")
    p.add_argument("--side", choices=["left", "right"], default="left")
    p.add_argument("--region", help="explicit target x1,y1,x2,y2 (overrides --side)")
    p.add_argument("--calib")
    p.add_argument("--min-conf", type=float, default=0.999)
    p.add_argument("--max-attempts", type=int, default=200)
    p.add_argument("--shape", type=_parse_shape, default=(4, 64, 64))
    p.add_argument("--out", required=True)
    p.add_argument("--report")

    p = add("simulate", cmd_simulate, "synthetic end-to-end injection study")
    p.add_argument("--seeds", type=int, default=200)
    p.add_argument("--inject-std", type=float, default=1.5)
    p.add_argument("--region", default="0,0,24,24")
    p.add_argument("--calib")
    p.add_argument("--independent-stat", action="store_true")
    p.add_argument("--report", required=True)

    p = add("evaluate", cmd_evaluate, "ISR / GSR / mAP50 / diversity evaluation")
    p.add_argument("--metric", choices=["isr", "gsr", "map50", "diversity"],
                   required=True)
    p.add_argument("--manifest")
    p.add_argument("--detections")
    p.add_argument("--permuted-seed", type=int)
    p.add_argument("--region", default="0,0,24,24")
    p.add_argument("--min-score", type=float, default=0.75)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--calib")
    p.add_argument("--min-conf", type=float, default=0.99)
    p.add_argument("--report", required=True)

    p = add("rescale", cmd_rescale, "rescale manifest annotations to latent cells")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)

    p = add("filter", cmd_filter, "keep the best scoring box per prompt")
    p.add_argument("--manifest", required=True)
    p.add_argument("--min-score", type=float, default=0.75)
    p.add_argument("--out", required=True)

    p = add("permute", cmd_permute, "permute annotation lists across records")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _write_run_config(args)
        return args.func(args)
    except TriggerLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

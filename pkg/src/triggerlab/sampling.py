"""Reject-sampling workflows and the end-to-end synthetic studies.

``purify`` regenerates detected trigger regions in place until nothing
clears the detection threshold, freeing object placement.  ``align``
rejects whole noises until the top detection's center lands in the target
area, biasing placement where the prompt wants it.  The *_study functions
measure both effects against the synthetic backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .annotations import filter_best, rescale_to_latent
from .backend import GenerationBackend
from .detector import Detection, NullCalibration, detect
from .errors import EmptyInputError
from .metrics import coverage, isr, judge_position, trigger_entropy
from .noise import (
    DEFAULT_SHAPE,
    LatentTensor,
    Region,
    ShiftedGaussianSpec,
    extract_patch,
    inject_patch,
    resample_region,
    sample_noise,
    synth_shifted_gaussian,
)
from .prompts import DEFAULT_PROMPTS, DIVERSITY_PROMPTS, guidance_prompts
from .rng import derive_seed


@dataclass(frozen=True)
class PurifyResult:
    noise: LatentTensor
    iterations: int  # detect passes run, including the final clean one
    regions_per_iteration: tuple[tuple[Region, ...], ...]
    converged: bool


@dataclass(frozen=True)
class AlignResult:
    noise: LatentTensor
    attempts: int
    top_detection: Detection | None
    target: Region
    success: bool


def purify(
    noise: LatentTensor,
    calibration: NullCalibration,
    min_confidence: float = 0.999,
    max_iters: int = 10,
    seed: int = 0,
    nms_iou: float = 0.5,
) -> PurifyResult:
    """Resample detected regions until the noise scores clean.

    Each round detects globally, then regenerates every surviving
    detection region with fresh unmatched Gaussian draws.  Cells outside
    detected regions are never touched.  ``converged`` means the final
    tensor has no detection at the operating threshold.
    """
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    current = noise
    history: list[tuple[Region, ...]] = []
    converged = False
    passes = 0
    for round_idx in range(max_iters):
        passes += 1
        detections = detect(current, calibration, min_confidence, nms_iou)
        if not detections:
            converged = True
            break
        regions = tuple(d.region for d in detections)
        history.append(regions)
        for j, region in enumerate(regions):
            current = resample_region(
                current, region, derive_seed(seed, "purify", round_idx, j)
            )
    else:
        passes += 1
        converged = not detect(current, calibration, min_confidence, nms_iou)
    return PurifyResult(
        noise=current,
        iterations=passes,
        regions_per_iteration=tuple(history),
        converged=converged,
    )


def half_plane(side: str, shape: tuple[int, int, int] = DEFAULT_SHAPE) -> Region:
    _, height, width = shape
    if side == "left":
        return Region(0, 0, width // 2, height)
    if side == "right":
        return Region(width // 2, 0, width, height)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def align(
    target: str | Region,
    calibration: NullCalibration,
    max_attempts: int = 200,
    seed: int = 0,
    min_confidence: float = 0.999,
    nms_iou: float = 0.5,
    shape: tuple[int, int, int] = DEFAULT_SHAPE,
) -> AlignResult:
    """Sample whole noises until the top detection centers in the target.

    ``target`` is a latent Region or "left"/"right" for a half plane.
    Noises without any detection are rejected outright.  Candidates are
    tried in index order, so the result is deterministic in (seed,
    calibration, target).
    """
    if max_attempts < 1:
        raise ValueError(f"max_attempts must be >= 1, got {max_attempts}")
    region = half_plane(target, shape) if isinstance(target, str) else target
    last_noise = None
    last_top = None
    for attempt in range(1, max_attempts + 1):
        candidate = sample_noise(derive_seed(seed, "align", attempt - 1), shape)
        last_noise = candidate
        detections = detect(candidate, calibration, min_confidence, nms_iou)
        if not detections:
            continue
        top = detections[0]
        last_top = top
        cx, cy = top.region.center
        if region.x1 <= cx < region.x2 and region.y1 <= cy < region.y2:
            return AlignResult(
                noise=candidate, attempts=attempt, top_detection=top,
                target=region, success=True,
            )
    return AlignResult(
        noise=last_noise, attempts=max_attempts, top_detection=last_top,
        target=region, success=False,
    )


@dataclass(frozen=True)
class DiversityResult:
    mean_entropy: float
    entropies: tuple[float, ...]
    purified: bool


def diversity_eval(
    backend: GenerationBackend,
    n_seeds: int,
    purified: bool,
    calibration: NullCalibration | None = None,
    min_confidence: float = 0.99,
    max_iters: int = 10,
    seed: int = 0,
    prompts=DIVERSITY_PROMPTS,
    min_score: float = 0.75,
    shape: tuple[int, int, int] = DEFAULT_SHAPE,
    image_size: int = 512,
) -> DiversityResult:
    """Mean trigger entropy of generated boxes over fresh (or purified) noises.

    Per noise, the backend runs all diversity prompts; boxes scoring above
    ``min_score`` are rescaled to latent cells and summarized by trigger
    entropy.  Purification happens at ``min_confidence``, which should not
    exceed the backend's spawn quantile or residual sub-threshold triggers
    will still pin objects.
    """
    if purified and calibration is None:
        raise ValueError("purified diversity_eval needs a calibration")
    latent = shape[2]
    entropies = []
    for i in range(n_seeds):
        noise = sample_noise(derive_seed(seed, "diversity", i), shape)
        if purified:
            noise = purify(
                noise, calibration, min_confidence, max_iters,
                seed=derive_seed(seed, "diversity-purify", i),
            ).noise
        response = backend.generate(
            noise, prompts, seed=derive_seed(seed, "diversity-gen", i),
            noise_id=f"diversity_{i}",
        )
        boxes = [
            rescale_to_latent(a, image_size, latent)
            for a in response.annotations
            if a.score > min_score
        ]
        if not boxes:
            continue
        entropies.append(trigger_entropy(boxes).entropy)
    if not entropies:
        raise EmptyInputError("no noise produced boxes above the score threshold")
    return DiversityResult(
        mean_entropy=float(np.mean(entropies)),
        entropies=tuple(entropies),
        purified=purified,
    )


# Default injection target for the ISR study.  A boundary region keeps the
# baselines honest: chance coverage by the center-biased random boxes is
# minimal at the frame corner, while the injected-patch effect is identical.
DEFAULT_TRIGGER_REGION = Region(0, 0, 24, 24)

ISR_MODES = ("injected", "resampling", "random")


def isr_study(
    backend: GenerationBackend,
    n_seeds: int,
    inject_std: float = 1.5,
    trigger_region: Region = DEFAULT_TRIGGER_REGION,
    seed: int = 0,
    prompts=DEFAULT_PROMPTS,
    min_score: float = 0.75,
    modes=ISR_MODES,
    shape: tuple[int, int, int] = DEFAULT_SHAPE,
    image_size: int = 512,
) -> dict:
    """Injection success rates for a shifted-Gaussian patch and two baselines.

    Per seed the target noise gets (a) an N(0, std^2) patch injected at the
    trigger region, (b) a moment-matched resampling of the region, or (c) a
    patch copied from a random position of a fresh source noise.  Every
    prompt contributes one case; the detected box is the best scoring one
    of the right class above ``min_score``, judged by trigger-region
    coverage (IoU is recorded alongside).
    """
    latent = shape[2]
    size = trigger_region.width
    report: dict = {
        "n_seeds": n_seeds,
        "inject_std": inject_std,
        "trigger_region": list(trigger_region.as_tuple()),
        "modes": {},
    }
    for mode in modes:
        cases = []
        ious = []
        for s in range(n_seeds):
            base = sample_noise(derive_seed(seed, "isr-target", s), shape)
            if mode == "injected":
                patch = synth_shifted_gaussian(
                    ShiftedGaussianSpec(std=inject_std),
                    (size, trigger_region.height),
                    seed=derive_seed(seed, "isr-patch", s),
                    channels=shape[0],
                )
                noisy = inject_patch(base, patch, trigger_region)
            elif mode == "resampling":
                noisy = resample_region(
                    base, trigger_region, derive_seed(seed, "isr-resample", s),
                    match_moments=True,
                )
            elif mode == "random":
                source = sample_noise(derive_seed(seed, "isr-source", s), shape)
                rng = np.random.Generator(
                    np.random.Philox(key=derive_seed(seed, "isr-position", s))
                )
                x0 = int(rng.integers(0, shape[2] - size + 1))
                y0 = int(rng.integers(0, shape[1] - trigger_region.height + 1))
                patch = extract_patch(
                    source, Region(x0, y0, x0 + size, y0 + trigger_region.height)
                )
                noisy = inject_patch(base, patch, trigger_region)
            else:
                raise ValueError(f"unknown mode {mode!r}")
            response = backend.generate(
                noisy, prompts, seed=derive_seed(seed, "isr-gen", mode, s),
                noise_id=f"isr_{mode}_{s}",
            )
            by_prompt: dict[str, list] = {}
            for a in response.annotations:
                by_prompt.setdefault(a.prompt_id, []).append(a)
            for prompt in prompts:
                best = filter_best(
                    by_prompt.get(prompt.prompt_id, []), prompt.class_name, min_score
                )
                detected = (
                    rescale_to_latent(best, image_size, latent) if best else None
                )
                cases.append((trigger_region, detected))
                if detected is not None:
                    ious.append(_case_iou(trigger_region, detected))
        report["modes"][mode] = {
            "isr": isr(cases),
            "n_cases": len(cases),
            "mean_iou": float(np.mean(ious)) if ious else 0.0,
        }
    if "injected" in report["modes"]:
        report["isr"] = report["modes"]["injected"]["isr"]
    return report


def _case_iou(region: Region, box) -> float:
    ix = max(0.0, min(region.x2, box.x2) - max(region.x1, box.x1))
    iy = max(0.0, min(region.y2, box.y2) - max(region.y1, box.y1))
    inter = ix * iy
    union = region.area + (box.x2 - box.x1) * (box.y2 - box.y1) - inter
    return inter / union if union > 0 else 0.0


def gsr_study(
    backend: GenerationBackend,
    calibration: NullCalibration,
    trials: int = 500,
    sides=("left", "right"),
    aligned: bool = True,
    seed: int = 0,
    min_confidence: float = 0.99,
    max_attempts: int = 200,
    min_score: float = 0.75,
    shape: tuple[int, int, int] = DEFAULT_SHAPE,
    image_size: int = 512,
) -> dict:
    """Guidance success rate with and without align-based reject sampling.

    For each side, each trial generates from either an align-accepted
    noise or a fresh one, then judges every prompt's best box against the
    prompted side in latent coordinates.
    """
    latent = shape[2]
    report: dict = {"aligned": aligned, "trials": trials, "sides": {}}
    total_correct = 0
    total_cases = 0
    for side in sides:
        prompts = guidance_prompts(side)
        correct = 0
        cases = 0
        rejected = 0
        for t in range(trials):
            if aligned:
                result = align(
                    side, calibration, max_attempts,
                    seed=derive_seed(seed, "gsr-align", side, t),
                    min_confidence=min_confidence, shape=shape,
                )
                if not result.success:
                    rejected += 1
                    continue
                noise = result.noise
            else:
                noise = sample_noise(derive_seed(seed, "gsr-raw", side, t), shape)
            response = backend.generate(
                noise, prompts, seed=derive_seed(seed, "gsr-gen", side, t),
                noise_id=f"gsr_{side}_{t}",
            )
            by_prompt: dict[str, list] = {}
            for a in response.annotations:
                by_prompt.setdefault(a.prompt_id, []).append(a)
            for prompt in prompts:
                best = filter_best(
                    by_prompt.get(prompt.prompt_id, []), prompt.class_name, min_score
                )
                if best is None:
                    continue
                box = rescale_to_latent(best, image_size, latent)
                cases += 1
                if judge_position(box, side, latent):
                    correct += 1
        report["sides"][side] = {
            "gsr": correct / cases if cases else 0.0,
            "n_cases": cases,
            "align_failures": rejected,
        }
        total_correct += correct
        total_cases += cases
    report["gsr"] = total_correct / total_cases if total_cases else 0.0
    return report

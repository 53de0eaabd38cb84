"""Posterior metrics: trigger entropy, ISR, GSR position checks, heatmaps.

Trigger entropy measures how dispersed the generated objects of one noise
are.  With box centers ``(x_c, y_c)`` it is half the sum of the population
variances of the two center coordinates::

    H = 1/2 * ( 1/n * sum (x_ci - mean_x)^2  +  1/n * sum (y_ci - mean_y)^2 )

Low entropy means the noise pins objects to one spot, i.e. it carries a
strong trigger patch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .annotations import LATENT, BBoxAnnotation
from .errors import EmptyInputError, WrongSpaceError
from .noise import Region
from .rng import derive_seed


@dataclass(frozen=True)
class EntropyReport:
    n: int
    xc_mean: float
    yc_mean: float
    entropy: float
    centers: tuple[tuple[float, float], ...]
    noise_id: str | None = None


class InteractionLabel(enum.Enum):
    ALIGNED = "aligned"
    CONTRADICTED = "contradicted"
    DUPLICATED = "duplicated"
    HARD_TO_JUDGE = "hard_to_judge"


def _require_latent(boxes):
    for b in boxes:
        if b.space != LATENT:
            raise WrongSpaceError(f"box {b.prompt_id!r} is in {b.space} space, need latent")


def _popvar(values: np.ndarray) -> float:
    # Pairwise form of the population variance: exactly zero for identical
    # values and exactly translation invariant when the shift leaves the
    # inputs representable (integer boxes shifted by integers).
    diffs = values[:, None] - values[None, :]
    return float((diffs * diffs).sum() / (2.0 * values.size**2))


def entropy_of_centers(
    xc: np.ndarray, yc: np.ndarray, noise_id: str | None = None
) -> EntropyReport:
    """Entropy report from raw center coordinates (population variances)."""
    xc = np.asarray(xc, dtype=np.float64)
    yc = np.asarray(yc, dtype=np.float64)
    if xc.size == 0:
        raise EmptyInputError("no centers")
    h = 0.5 * (_popvar(xc) + _popvar(yc))
    return EntropyReport(
        n=int(xc.size),
        xc_mean=float(xc.mean()),
        yc_mean=float(yc.mean()),
        entropy=float(h),
        centers=tuple(zip(xc.tolist(), yc.tolist())),
        noise_id=noise_id,
    )


def trigger_entropy(
    boxes: list[BBoxAnnotation], noise_id: str | None = None
) -> EntropyReport:
    """Trigger entropy of one noise's latent-space boxes."""
    if not boxes:
        raise EmptyInputError("trigger_entropy needs at least one box")
    _require_latent(boxes)
    centers = np.array([b.center for b in boxes], dtype=np.float64)
    return entropy_of_centers(centers[:, 0], centers[:, 1], noise_id=noise_id)


def random_center_baseline(
    n_sets: int = 25,
    coord_range: float = 512.0,
    seed: int = 0,
    n_trials: int = 1,
) -> list[EntropyReport]:
    """Entropy of fully random boxes, the no-trigger reference.

    Each trial draws ``n_sets`` boxes, a box being four numbers uniform on
    [0, coord_range) read as (x1, x2, y1, y2); its center is the midpoint
    of the two coordinates per axis.  One report per trial.
    """
    if n_sets < 2:
        raise ValueError(f"need at least 2 boxes per set, got {n_sets}")
    reports = []
    for t in range(n_trials):
        rng = np.random.Generator(np.random.Philox(key=derive_seed(seed, "random_boxes", t)))
        draws = rng.uniform(0.0, coord_range, size=(n_sets, 4))
        xc = (draws[:, 0] + draws[:, 1]) / 2.0
        yc = (draws[:, 2] + draws[:, 3]) / 2.0
        reports.append(entropy_of_centers(xc, yc, noise_id=f"random_{t}"))
    return reports


def coverage(trigger_region: Region, detected: BBoxAnnotation) -> float:
    """Fraction of the trigger region covered by the detected box."""
    if detected.space != LATENT:
        raise WrongSpaceError(f"detected box is in {detected.space} space, need latent")
    ix = max(0.0, min(trigger_region.x2, detected.x2) - max(trigger_region.x1, detected.x1))
    iy = max(0.0, min(trigger_region.y2, detected.y2) - max(trigger_region.y1, detected.y1))
    return (ix * iy) / trigger_region.area


def injection_success(
    trigger_region: Region, detected: BBoxAnnotation, min_coverage: float = 0.75
) -> bool:
    """True when the detected box covers at least ``min_coverage`` of the region."""
    return coverage(trigger_region, detected) >= min_coverage


def isr(
    cases: list[tuple[Region, BBoxAnnotation | None]], min_coverage: float = 0.75
) -> float:
    """Injection success rate; a missing detection counts as a failure."""
    if not cases:
        raise EmptyInputError("isr needs at least one case")
    hits = sum(
        1
        for region, det in cases
        if det is not None and injection_success(region, det, min_coverage)
    )
    return hits / len(cases)


def heatmap(boxes: list[BBoxAnnotation], height: int, width: int) -> np.ndarray:
    """Fraction of boxes covering each latent cell, a (height, width) grid in [0, 1].

    A cell counts as covered when its unit square overlaps the box with
    positive area.
    """
    if not boxes:
        raise EmptyInputError("heatmap needs at least one box")
    _require_latent(boxes)
    counts = np.zeros((height, width), dtype=np.float64)
    for b in boxes:
        x_lo = max(0, int(np.floor(b.x1)))
        x_hi = min(width, int(np.ceil(b.x2)))
        y_lo = max(0, int(np.floor(b.y1)))
        y_hi = min(height, int(np.ceil(b.y2)))
        if x_lo < x_hi and y_lo < y_hi:
            counts[y_lo:y_hi, x_lo:x_hi] += 1.0
    return counts / len(boxes)


def judge_position(box: BBoxAnnotation, side: str, width: int) -> bool:
    """Whether the box center lies strictly on the prompted half.

    A center exactly on the midline satisfies neither side.
    """
    xc = box.center[0]
    if side == "left":
        return xc < width / 2.0
    if side == "right":
        return xc > width / 2.0
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def classify_interaction(
    boxes: list[BBoxAnnotation],
    side: str,
    width: int,
    center_strip: float = 0.10,
    full_frame: float = 0.80,
) -> InteractionLabel:
    """Label one image's boxes against the prompt's side instruction.

    Boxes spanning more than ``full_frame`` of the width or centered inside
    the middle ``center_strip`` of the frame cannot be judged.  Judgeable
    boxes on both halves mean duplication; exactly one judgeable box is
    aligned or contradicted by its half.
    """
    sides = []
    for b in boxes:
        if b.width > full_frame * width:
            continue
        xc = b.center[0]
        if abs(xc - width / 2.0) <= center_strip / 2.0 * width:
            continue
        sides.append("left" if xc < width / 2.0 else "right")
    if "left" in sides and "right" in sides:
        return InteractionLabel.DUPLICATED
    if len(sides) == 1:
        return InteractionLabel.ALIGNED if sides[0] == side else InteractionLabel.CONTRADICTED
    return InteractionLabel.HARD_TO_JUDGE

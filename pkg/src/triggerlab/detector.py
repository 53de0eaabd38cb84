"""Sliding-window outlier detector for latent noise, plus mAP50 scoring.

Each window's slab gets a deviation score: with sample mean ``m``, sample
(population) variance ``s2`` and ``N`` cells, the score is::

    N * ( m^2 / 2 + (s2 - 1 - ln s2) / 2 )

i.e. N times the KL divergence of the fitted Gaussian from N(0, 1).  It
is zero exactly at unit moments and grows with any deviation.  Confidence
is the empirical null-quantile rank of the score, calibrated once on
fresh standard-normal tensors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import SchemaViolationError
from .noise import DEFAULT_SHAPE, LatentTensor, Region, sample_noise
from .rng import derive_seed


@dataclass(frozen=True)
class Detection:
    region: Region
    score: float
    confidence: float


@dataclass(frozen=True)
class NullCalibration:
    """Empirical null distribution of window scores.

    ``scores`` is the sorted pool of all window scores observed on
    ``n_noises`` standard-Gaussian tensors.
    """

    window: int
    stride: int
    seed: int
    n_noises: int
    shape: tuple[int, int, int]
    scores: np.ndarray

    def confidence(self, score) -> np.ndarray | float:
        """Empirical CDF rank of a score under the null."""
        ranks = np.searchsorted(self.scores, score, side="right") / len(self.scores)
        return ranks if np.ndim(score) else float(ranks)

    def score_at(self, quantile: float) -> float:
        return float(np.quantile(self.scores, quantile))


def window_score(noise: LatentTensor, region: Region) -> float:
    """Deviation-from-N(0,1) score of the full-depth slab under ``region``."""
    slab = noise.slab(region).astype(np.float64)
    m = slab.mean()
    s2 = slab.var()
    if s2 <= 0.0:
        return float("inf")
    return float(slab.size * (m * m / 2.0 + (s2 - 1.0 - np.log(s2)) / 2.0))


def window_grid(height: int, width: int, window: int, stride: int):
    ys = np.arange(0, height - window + 1, stride)
    xs = np.arange(0, width - window + 1, stride)
    return ys, xs


def score_all_windows(noise: LatentTensor, window: int, stride: int):
    """Scores of every grid window, via 2-d prefix sums.

    Returns (ys, xs, scores) with scores[i, j] the score of the window at
    (xs[j], ys[i]).  Matches :func:`window_score` to float64 accuracy.
    """
    c, h, w = noise.shape
    if window > h or window > w:
        raise ValueError(f"window {window} does not fit {h}x{w} tensor")
    data = noise.data.astype(np.float64)
    s1 = np.zeros((h + 1, w + 1))
    s2 = np.zeros((h + 1, w + 1))
    s1[1:, 1:] = data.sum(axis=0).cumsum(axis=0).cumsum(axis=1)
    s2[1:, 1:] = (data**2).sum(axis=0).cumsum(axis=0).cumsum(axis=1)
    ys, xs = window_grid(h, w, window, stride)
    n = c * window * window
    scores = np.empty((len(ys), len(xs)))
    for i, y in enumerate(ys):
        win_sum = (
            s1[y + window, xs + window] - s1[y, xs + window]
            - s1[y + window, xs] + s1[y, xs]
        )
        win_sq = (
            s2[y + window, xs + window] - s2[y, xs + window]
            - s2[y + window, xs] + s2[y, xs]
        )
        mean = win_sum / n
        var = win_sq / n - mean * mean
        with np.errstate(divide="ignore", invalid="ignore"):
            kl = np.where(var > 0, (var - 1.0 - np.log(np.maximum(var, 1e-300))) / 2.0, np.inf)
        scores[i] = n * (mean * mean / 2.0 + kl)
    return ys, xs, scores


def calibrate_null(
    window: int = 24,
    stride: int = 4,
    n_noises: int = 100,
    seed: int = 0,
    shape: tuple[int, int, int] = DEFAULT_SHAPE,
) -> NullCalibration:
    """Pool window scores over fresh standard-normal tensors."""
    if n_noises < 100:
        raise ValueError(f"need at least 100 calibration noises, got {n_noises}")
    pooled = []
    for i in range(n_noises):
        tensor = sample_noise(derive_seed(seed, "calibration", i), shape)
        pooled.append(score_all_windows(tensor, window, stride)[2].ravel())
    scores = np.sort(np.concatenate(pooled))
    scores.flags.writeable = False
    return NullCalibration(
        window=window, stride=stride, seed=seed, n_noises=n_noises,
        shape=shape, scores=scores,
    )


def region_iou(a: Region, b: Region) -> float:
    ix = max(0, min(a.x2, b.x2) - max(a.x1, b.x1))
    iy = max(0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union if union > 0 else 0.0


def nms(detections: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy suppression of any box with IoU >= threshold to a kept box."""
    kept: list[Detection] = []
    for det in detections:
        if all(region_iou(det.region, k.region) < iou_threshold for k in kept):
            kept.append(det)
    return kept


def detect(
    noise: LatentTensor,
    calibration: NullCalibration,
    min_confidence: float = 0.999,
    nms_iou: float = 0.5,
) -> list[Detection]:
    """Score every window, keep confident ones, suppress overlaps.

    Deterministic given (noise, calibration, thresholds); the output is
    sorted by confidence descending.
    """
    ys, xs, scores = score_all_windows(noise, calibration.window, calibration.stride)
    conf = calibration.confidence(scores)
    candidates = []
    for i in range(len(ys)):
        for j in range(len(xs)):
            if conf[i, j] >= min_confidence:
                region = Region(
                    int(xs[j]), int(ys[i]),
                    int(xs[j]) + calibration.window, int(ys[i]) + calibration.window,
                )
                candidates.append(Detection(region, float(scores[i, j]), float(conf[i, j])))
    candidates.sort(key=lambda d: (-d.score, d.region.y1, d.region.x1))
    return nms(candidates, nms_iou)


# --- evaluation ---------------------------------------------------------------

def _as_box(gt) -> tuple[float, float, float, float]:
    if isinstance(gt, Region):
        return (float(gt.x1), float(gt.y1), float(gt.x2), float(gt.y2))
    if hasattr(gt, "x1"):
        return (float(gt.x1), float(gt.y1), float(gt.x2), float(gt.y2))
    x1, y1, x2, y2 = gt
    return (float(x1), float(y1), float(x2), float(y2))


def _box_iou(a, b) -> float:
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def map50(
    detections: dict[str, list[Detection]],
    ground_truth: dict[str, list],
    iou_threshold: float = 0.50,
) -> float:
    """Class-agnostic average precision at IoU >= 0.5.

    Detections are ranked by confidence across all noises and matched
    greedily; each ground-truth box can absorb one detection.  AP uses
    all-point interpolation of the precision envelope.
    """
    gt_boxes = {nid: [_as_box(g) for g in boxes] for nid, boxes in ground_truth.items()}
    total_gt = sum(len(v) for v in gt_boxes.values())
    ranked = sorted(
        (
            (det, nid)
            for nid, dets in detections.items()
            for det in dets
        ),
        key=lambda t: (-t[0].confidence, -t[0].score, t[1], t[0].region.y1, t[0].region.x1),
    )
    if total_gt == 0 or not ranked:
        return 0.0

    matched: dict[str, set[int]] = {nid: set() for nid in gt_boxes}
    tp = np.zeros(len(ranked))
    for k, (det, nid) in enumerate(ranked):
        box = _as_box(det.region)
        best_iou, best_idx = 0.0, -1
        for idx, gt in enumerate(gt_boxes.get(nid, [])):
            if idx in matched.get(nid, set()):
                continue
            iou = _box_iou(box, gt)
            if iou > best_iou:
                best_iou, best_idx = iou, idx
        if best_idx >= 0 and best_iou >= iou_threshold:
            matched[nid].add(best_idx)
            tp[k] = 1.0

    cum_tp = np.cumsum(tp)
    recall = cum_tp / total_gt
    precision = cum_tp / np.arange(1, len(ranked) + 1)
    # precision envelope from the right, then integrate over recall steps
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    prev_r = 0.0
    ap = 0.0
    for k in range(len(ranked)):
        if recall[k] > prev_r:
            ap += (recall[k] - prev_r) * envelope[k]
            prev_r = recall[k]
    return float(ap)


# --- serialization ------------------------------------------------------------

def save_calibration(path, calib: NullCalibration) -> None:
    payload = {
        "window": calib.window,
        "stride": calib.stride,
        "seed": calib.seed,
        "n_noises": calib.n_noises,
        "shape": list(calib.shape),
        "scores": calib.scores.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(payload, fp, sort_keys=True)
        fp.write("\n")


def load_calibration(path) -> NullCalibration:
    with open(path, "r", encoding="utf-8") as fp:
        d = json.load(fp)
    scores = np.asarray(d["scores"], dtype=np.float64)
    scores.flags.writeable = False
    return NullCalibration(
        window=d["window"], stride=d["stride"], seed=d["seed"],
        n_noises=d["n_noises"], shape=tuple(d["shape"]), scores=scores,
    )


def save_detections(path, detections: dict[str, list[Detection]]) -> None:
    """Write the external detections exchange format."""
    payload = [
        {
            "noise_id": nid,
            "boxes": [
                {
                    "x1": d.region.x1, "y1": d.region.y1,
                    "x2": d.region.x2, "y2": d.region.y2,
                    "confidence": d.confidence, "score": d.score,
                }
                for d in dets
            ],
        }
        for nid, dets in sorted(detections.items())
    ]
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(payload, fp, indent=2, sort_keys=True)
        fp.write("\n")


def load_detections(path) -> dict[str, list[Detection]]:
    """Read detections produced by this package or an external model."""
    with open(path, "r", encoding="utf-8") as fp:
        payload = json.load(fp)
    if not isinstance(payload, list):
        raise SchemaViolationError("detections file must be a JSON array")
    out: dict[str, list[Detection]] = {}
    for entry in payload:
        try:
            nid = entry["noise_id"]
            dets = []
            for b in entry["boxes"]:
                region = Region(int(b["x1"]), int(b["y1"]), int(b["x2"]), int(b["y2"]))
                conf = float(b["confidence"])
                dets.append(Detection(region, float(b.get("score", conf)), conf))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolationError(f"malformed detections entry: {exc}") from exc
        out[nid] = dets
    return out

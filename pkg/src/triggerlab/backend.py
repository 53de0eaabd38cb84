"""Generation backends: the contract, a synthetic generator, a file bridge.

A backend turns (noise, prompts) into image-space bounding boxes, standing
in for "run the diffusion model, then an object detector".  The synthetic
backend makes that loop testable on a laptop: it looks for the strongest
window in the noise and, when that window is convincingly non-Gaussian,
pins every prompt's object to it; otherwise objects land uniformly at
random.  The external backend shuttles the same request through a
directory protocol to any real pipeline.

File protocol (one directory per request):

    request.json   {"noise_id": ..., "noise_file": "noise.npy",
                    "image_size": 512,
                    "prompts": [{"id": ..., "text": ..., "class": ...}]}
    noise.npy      the initial latent, NPY v1.0 float32 (C, H, W)
    response.json  {"noise_id": ..., "backend": ...,
                    "annotations": [bbox dicts, image space],
                    "metadata": {...}}

The adapter executable is invoked with the request directory as its final
argument and must exit 0 on success.
"""

from __future__ import annotations

import json
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np
from scipy.stats import norm

from .annotations import BBoxAnnotation, IMAGE, annotation_from_dict, annotation_to_dict
from .detector import NullCalibration, score_all_windows
from .errors import (
    AdapterExitError,
    AdapterTimeoutError,
    SchemaViolationError,
)
from .noise import LatentTensor, save_noise
from .prompts import Prompt
from .rng import derive_seed

# Latent-cell box edge per object class; everything at least the trigger
# size (24) so a triggered box can cover the trigger region.
DEFAULT_BOX_SIZES = {
    "baseball glove": 24,
    "bear": 28,
    "handbag": 24,
    "sports ball": 24,
    "stop sign": 26,
    "cow": 28,
    "apple": 24,
    "bicycle": 26,
    "vase": 24,
}


@dataclass(frozen=True)
class GenerationRequest:
    noise_id: str
    noise_file: str
    prompts: tuple[Prompt, ...]
    image_size: int = 512

    def __post_init__(self):
        if not self.prompts:
            raise ValueError("prompt list must be nonempty")


@dataclass(frozen=True)
class GenerationResponse:
    noise_id: str
    backend: str
    annotations: tuple[BBoxAnnotation, ...]
    wall_time_s: float
    metadata: dict = field(default_factory=dict)


class GenerationBackend(Protocol):
    def generate(
        self, noise: LatentTensor, prompts, seed: int, noise_id: str
    ) -> GenerationResponse: ...


@dataclass(frozen=True)
class SyntheticParams:
    """Knobs of the synthetic generator.

    ``spawn_quantile`` sets the null quantile the strongest window must
    exceed before objects lock onto it.  ``independent_stat`` switches the
    trigger statistic to plain slab variance (with an analytic normal
    approximation of its null quantile) so end-to-end checks do not reuse
    the detector's own score.
    """

    calibration: NullCalibration
    spawn_quantile: float = 0.99
    jitter: int = 2
    score_lo: float = 0.8
    score_hi: float = 1.0
    image_size: int = 512
    box_sizes: dict = field(default_factory=lambda: dict(DEFAULT_BOX_SIZES))
    default_box_size: int = 24
    independent_stat: bool = False


def _variance_windows(noise: LatentTensor, window: int, stride: int):
    """Per-window slab variance over the same grid as the score path."""
    from .detector import window_grid

    data = noise.data.astype(np.float64)
    c, h, w = noise.shape
    s1 = np.zeros((h + 1, w + 1))
    s2 = np.zeros((h + 1, w + 1))
    s1[1:, 1:] = data.sum(axis=0).cumsum(axis=0).cumsum(axis=1)
    s2[1:, 1:] = (data**2).sum(axis=0).cumsum(axis=0).cumsum(axis=1)
    ys, xs = window_grid(h, w, window, stride)
    n = c * window * window
    out = np.empty((len(ys), len(xs)))
    for i, y in enumerate(ys):
        t1 = s1[y + window, xs + window] - s1[y, xs + window] - s1[y + window, xs] + s1[y, xs]
        t2 = s2[y + window, xs + window] - s2[y, xs + window] - s2[y + window, xs] + s2[y, xs]
        mean = t1 / n
        out[i] = t2 / n - mean * mean
    return ys, xs, out


def synthetic_generate(
    noise: LatentTensor,
    prompts,
    params: SyntheticParams,
    seed: int,
    noise_id: str = "noise",
) -> GenerationResponse:
    """Deterministic stand-in for "generate images, detect objects".

    If the strongest window is past the spawn threshold, every prompt's
    box centers on it with a per-(seed, noise, prompt) jitter of at most
    ``params.jitter`` cells and a class-dependent size.  Otherwise each
    box is four uniform draws over the image, like the fully random
    reference.  Detection scores land in [score_lo, score_hi).
    """
    start = time.perf_counter()
    calib = params.calibration
    window, stride = calib.window, calib.stride
    if params.independent_stat:
        ys, xs, stat = _variance_windows(noise, window, stride)
        n_cells = noise.channels * window * window
        threshold = 1.0 + norm.ppf(params.spawn_quantile) * np.sqrt(2.0 / n_cells)
    else:
        ys, xs, stat = score_all_windows(noise, window, stride)
        threshold = calib.score_at(params.spawn_quantile)

    flat = int(np.argmax(stat))
    iy, ix = np.unravel_index(flat, stat.shape)
    max_stat = float(stat[iy, ix])
    spawned = max_stat >= threshold
    center_x = float(xs[ix]) + window / 2.0
    center_y = float(ys[iy]) + window / 2.0

    scale = params.image_size / noise.width
    annotations = []
    for prompt in prompts:
        rng = np.random.Generator(
            np.random.Philox(key=derive_seed(seed, "synthetic", noise_id, prompt.prompt_id))
        )
        if spawned:
            dx, dy = rng.integers(-params.jitter, params.jitter + 1, size=2)
            size = params.box_sizes.get(prompt.class_name, params.default_box_size)
            cx, cy = center_x + float(dx), center_y + float(dy)
            lx1 = max(0.0, min(cx - size / 2.0, noise.width - 1.0))
            lx2 = min(float(noise.width), max(cx + size / 2.0, lx1 + 1.0))
            ly1 = max(0.0, min(cy - size / 2.0, noise.height - 1.0))
            ly2 = min(float(noise.height), max(cy + size / 2.0, ly1 + 1.0))
            x1, x2, y1, y2 = lx1 * scale, lx2 * scale, ly1 * scale, ly2 * scale
        else:
            xa, xb = np.sort(rng.uniform(0.0, params.image_size, size=2))
            ya, yb = np.sort(rng.uniform(0.0, params.image_size, size=2))
            x1, x2 = xa, max(xb, xa + 1e-3)
            y1, y2 = ya, max(yb, ya + 1e-3)
        annotations.append(
            BBoxAnnotation(
                x1=float(x1), y1=float(y1), x2=float(x2), y2=float(y2),
                class_name=prompt.class_name,
                score=float(rng.uniform(params.score_lo, params.score_hi)),
                prompt_id=prompt.prompt_id,
                space=IMAGE,
            )
        )
    return GenerationResponse(
        noise_id=noise_id,
        backend="synthetic",
        annotations=tuple(annotations),
        wall_time_s=time.perf_counter() - start,
        metadata={
            "spawned": bool(spawned),
            "max_stat": max_stat,
            "spawn_threshold": float(threshold),
            "argmax_center": [center_x, center_y],
            "independent_stat": params.independent_stat,
        },
    )


class SyntheticBackend:
    """GenerationBackend over :func:`synthetic_generate`."""

    name = "synthetic"

    def __init__(self, params: SyntheticParams):
        self.params = params

    def generate(self, noise, prompts, seed, noise_id="noise"):
        return synthetic_generate(noise, prompts, self.params, seed, noise_id)


# --- file protocol -------------------------------------------------------------

def request_to_dict(req: GenerationRequest) -> dict:
    return {
        "noise_id": req.noise_id,
        "noise_file": req.noise_file,
        "image_size": req.image_size,
        "prompts": [
            {"id": p.prompt_id, "text": p.text, "class": p.class_name}
            for p in req.prompts
        ],
    }


def write_request(request_dir, noise: LatentTensor, req: GenerationRequest) -> None:
    request_dir = Path(request_dir)
    request_dir.mkdir(parents=True, exist_ok=True)
    save_noise(request_dir / req.noise_file, noise)
    with open(request_dir / "request.json", "w", encoding="utf-8") as fp:
        json.dump(request_to_dict(req), fp, indent=2, sort_keys=True)
        fp.write("\n")


def parse_response(payload, request: GenerationRequest) -> GenerationResponse:
    """Validate a response document against the schema and the request."""
    if not isinstance(payload, dict):
        raise SchemaViolationError("response.json must be a JSON object")
    for key in ("noise_id", "backend", "annotations"):
        if key not in payload:
            raise SchemaViolationError(f"response.json missing key {key!r}")
    if payload["noise_id"] != request.noise_id:
        raise SchemaViolationError(
            f"response noise_id {payload['noise_id']!r} != request {request.noise_id!r}"
        )
    known = {p.prompt_id for p in request.prompts}
    annotations = []
    if not isinstance(payload["annotations"], list):
        raise SchemaViolationError("annotations must be a JSON array")
    for entry in payload["annotations"]:
        try:
            ann = annotation_from_dict(entry)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolationError(f"malformed annotation: {exc}") from exc
        if ann.prompt_id not in known:
            raise SchemaViolationError(f"annotation references unknown prompt_id {ann.prompt_id!r}")
        annotations.append(ann)
    return GenerationResponse(
        noise_id=payload["noise_id"],
        backend=str(payload["backend"]),
        annotations=tuple(annotations),
        wall_time_s=float(payload.get("metadata", {}).get("wall_time_s", 0.0)),
        metadata=payload.get("metadata", {}),
    )


def external_generate(
    request_dir,
    noise: LatentTensor,
    prompts,
    adapter_command: list[str],
    timeout: float = 600.0,
    noise_id: str = "noise",
    image_size: int = 512,
) -> GenerationResponse:
    """Round-trip one request through an adapter executable.

    Writes ``noise.npy`` and ``request.json`` into ``request_dir``, runs
    ``adapter_command <request_dir>``, then validates ``response.json``.
    On timeout or failure the partial files are left in place.
    """
    request_dir = Path(request_dir)
    req = GenerationRequest(
        noise_id=noise_id, noise_file="noise.npy",
        prompts=tuple(prompts), image_size=image_size,
    )
    write_request(request_dir, noise, req)
    start = time.perf_counter()
    try:
        proc = subprocess.run(
            [*adapter_command, str(request_dir)],
            timeout=timeout,
            capture_output=True,
            text=True,
        )
    except subprocess.TimeoutExpired as exc:
        raise AdapterTimeoutError(
            f"adapter exceeded {timeout}s; partial files left in {request_dir}"
        ) from exc
    if proc.returncode != 0:
        raise AdapterExitError(proc.returncode, proc.stderr.strip()[:500])
    response_path = request_dir / "response.json"
    if not response_path.exists():
        raise SchemaViolationError(f"adapter wrote no response.json in {request_dir}")
    try:
        with open(response_path, "r", encoding="utf-8") as fp:
            payload = json.load(fp)
    except json.JSONDecodeError as exc:
        raise SchemaViolationError(f"response.json is not valid JSON: {exc}") from exc
    response = parse_response(payload, req)
    wall = time.perf_counter() - start
    return GenerationResponse(
        noise_id=response.noise_id,
        backend=response.backend,
        annotations=response.annotations,
        wall_time_s=wall,
        metadata=response.metadata,
    )


class ExternalBackend:
    """GenerationBackend that shells out to an adapter, one dir per request."""

    name = "external"

    def __init__(self, adapter_command: list[str], workdir, timeout: float = 600.0,
                 image_size: int = 512):
        self.adapter_command = list(adapter_command)
        self.workdir = Path(workdir)
        self.timeout = timeout
        self.image_size = image_size
        self._counter = 0

    def generate(self, noise, prompts, seed, noise_id="noise"):
        self._counter += 1
        request_dir = self.workdir / f"request_{self._counter:05d}_{noise_id}"
        return external_generate(
            request_dir, noise, prompts, self.adapter_command,
            timeout=self.timeout, noise_id=noise_id, image_size=self.image_size,
        )


def response_to_dict(resp: GenerationResponse) -> dict:
    return {
        "noise_id": resp.noise_id,
        "backend": resp.backend,
        "annotations": [annotation_to_dict(a) for a in resp.annotations],
        "metadata": resp.metadata,
    }

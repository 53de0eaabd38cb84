"""Bounding-box annotations pairing noises with generated-object locations.

A manifest is one JSON document holding every record of a dataset::

    {
      "image_size": 512,
      "latent_size": 64,
      "prompts": {"bear_0": {"text": "...", "class": "bear"}, ...},
      "records": [
        {"noise_id": "n0", "seed": 17, "annotations": [
            {"x1": 80, "y1": 80, "x2": 160, "y2": 160,
             "class": "bear", "score": 0.91,
             "prompt_id": "bear_0", "space": "image"}]}
      ]
    }

Coordinates are half-open; ``space`` says whether they are image pixels
or latent cells.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import TooFewRecordsError, WrongSpaceError
from .prompts import DEFAULT_PROMPTS, Prompt

IMAGE = "image"
LATENT = "latent"


@dataclass(frozen=True)
class BBoxAnnotation:
    x1: float
    y1: float
    x2: float
    y2: float
    class_name: str
    score: float
    prompt_id: str
    space: str = IMAGE

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2", "score"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"degenerate box ({self.x1},{self.y1},{self.x2},{self.y2})")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")
        if self.space not in (IMAGE, LATENT):
            raise ValueError(f"unknown space {self.space!r}")

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    @property
    def width(self) -> float:
        return self.x2 - self.x1


@dataclass
class NoiseRecord:
    noise_id: str
    annotations: list[BBoxAnnotation] = field(default_factory=list)
    seed: int | None = None


@dataclass
class DatasetManifest:
    records: list[NoiseRecord] = field(default_factory=list)
    image_size: int = 512
    latent_size: int = 64
    prompts: dict[str, Prompt] = field(default_factory=dict)

    def __post_init__(self):
        if self.image_size % self.latent_size != 0:
            raise ValueError(
                f"image_size {self.image_size} not divisible by latent_size {self.latent_size}"
            )
        ids = [r.noise_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate noise_id in manifest")

    @property
    def scale(self) -> int:
        return self.image_size // self.latent_size


def default_manifest() -> DatasetManifest:
    """Empty manifest carrying the built-in 25-prompt set."""
    return DatasetManifest(prompts={p.prompt_id: p for p in DEFAULT_PROMPTS})


def rescale_to_latent(
    b: BBoxAnnotation, image_size: int = 512, latent_size: int = 64
) -> BBoxAnnotation:
    """Map an image-space box to latent cells, conservatively.

    x1/y1 are floored and x2/y2 ceiled after dividing by the scale, so the
    latent box always covers the original pixels.
    """
    if b.space != IMAGE:
        raise WrongSpaceError(f"expected image-space box, got {b.space}")
    s = image_size / latent_size
    return replace(
        b,
        x1=math.floor(b.x1 / s),
        y1=math.floor(b.y1 / s),
        x2=math.ceil(b.x2 / s),
        y2=math.ceil(b.y2 / s),
        space=LATENT,
    )


def filter_best(
    annotations: list[BBoxAnnotation], class_name: str, min_score: float
) -> BBoxAnnotation | None:
    """Highest-scoring box of the right class with score above threshold.

    Ties break on coordinates so the result does not depend on input order.
    """
    candidates = [
        a for a in annotations if a.class_name == class_name and a.score > min_score
    ]
    if not candidates:
        return None
    return max(candidates, key=lambda a: (a.score, a.x1, a.y1, a.x2, a.y2, a.prompt_id))


def permute_annotations(manifest: DatasetManifest, seed: int) -> DatasetManifest:
    """Reassign annotation lists across records by a random permutation.

    The permutation is uniform over non-identity permutations of the record
    indices (identity draws are rejected), so the permuted dataset always
    differs from the original.  Noise ids and seeds stay put.
    """
    n = len(manifest.records)
    if n < 2:
        raise TooFewRecordsError(f"need at least 2 records to permute, got {n}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    while True:
        perm = rng.permutation(n)
        if not np.array_equal(perm, np.arange(n)):
            break
    records = [
        NoiseRecord(
            noise_id=rec.noise_id,
            seed=rec.seed,
            annotations=list(manifest.records[perm[i]].annotations),
        )
        for i, rec in enumerate(manifest.records)
    ]
    return DatasetManifest(
        records=records,
        image_size=manifest.image_size,
        latent_size=manifest.latent_size,
        prompts=dict(manifest.prompts),
    )


# --- JSON serialization -----------------------------------------------------

def annotation_to_dict(a: BBoxAnnotation) -> dict:
    return {
        "x1": a.x1, "y1": a.y1, "x2": a.x2, "y2": a.y2,
        "class": a.class_name, "score": a.score,
        "prompt_id": a.prompt_id, "space": a.space,
    }


def annotation_from_dict(d: dict) -> BBoxAnnotation:
    return BBoxAnnotation(
        x1=d["x1"], y1=d["y1"], x2=d["x2"], y2=d["y2"],
        class_name=d["class"], score=d["score"],
        prompt_id=d["prompt_id"], space=d.get("space", IMAGE),
    )


def manifest_to_dict(m: DatasetManifest) -> dict:
    return {
        "image_size": m.image_size,
        "latent_size": m.latent_size,
        "prompts": {
            pid: {"text": p.text, "class": p.class_name}
            for pid, p in sorted(m.prompts.items())
        },
        "records": [
            {
                "noise_id": r.noise_id,
                "seed": r.seed,
                "annotations": [annotation_to_dict(a) for a in r.annotations],
            }
            for r in m.records
        ],
    }


def manifest_from_dict(d: dict) -> DatasetManifest:
    prompts = {
        pid: Prompt(prompt_id=pid, text=p["text"], class_name=p["class"])
        for pid, p in d.get("prompts", {}).items()
    }
    records = [
        NoiseRecord(
            noise_id=r["noise_id"],
            seed=r.get("seed"),
            annotations=[annotation_from_dict(a) for a in r.get("annotations", [])],
        )
        for r in d.get("records", [])
    ]
    return DatasetManifest(
        records=records,
        image_size=d.get("image_size", 512),
        latent_size=d.get("latent_size", 64),
        prompts=prompts,
    )


def save_manifest(path, m: DatasetManifest) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(manifest_to_dict(m), fp, indent=2, sort_keys=True)
        fp.write("\n")


def load_manifest(path) -> DatasetManifest:
    with open(path, "r", encoding="utf-8") as fp:
        return manifest_from_dict(json.load(fp))

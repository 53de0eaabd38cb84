"""Energy-distance two-sample testing and the entropy-decile analysis.

For samples X (m points) and Y (n points) in R^d the energy distance is::

    E = 2/(m n) sum_ij |x_i - y_j|
      - 1/m^2  sum_ik |x_i - x_k|
      - 1/n^2  sum_jl |y_j - y_l|

which is nonnegative and zero iff the underlying distributions coincide.
Significance comes from permuting the pooled sample: the p-value of the
scaled statistic T = (m n / (m + n)) * E is ``(1 + #{T_perm >= T_obs}) /
(n_perms + 1)``, so it can never be a literal zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import spearmanr

from .annotations import LATENT, DatasetManifest, rescale_to_latent
from .errors import DimensionMismatchError, EmptyInputError, MissingTensorError
from .metrics import trigger_entropy
from .noise import LatentTensor, Region, centered_region
from .rng import derive_seed


@dataclass(frozen=True)
class EnergyTestResult:
    energy_distance: float
    statistic: float
    p_value: float
    m: int
    n: int
    permutations: int


@dataclass(frozen=True)
class DecileGroup:
    decile: int
    entropy_lo: float
    entropy_hi: float
    mean_energy_distance: float
    p_value: float
    n_noises: int
    n_patches: int


@dataclass(frozen=True)
class DecileAnalysis:
    groups: tuple[DecileGroup, ...]
    spearman_rho: float
    spearman_p: float


def _as_points(arr, name: str) -> np.ndarray:
    pts = np.asarray(arr, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise EmptyInputError(f"{name} must be a nonempty (n, d) point set")
    return pts


def energy_distance(X, Y) -> float:
    """Energy distance between two point sets (V-statistic form)."""
    X = _as_points(X, "X")
    Y = _as_points(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatchError(
            f"point dimensions differ: {X.shape[1]} vs {Y.shape[1]}"
        )
    return float(
        2.0 * cdist(X, Y).mean() - cdist(X, X).mean() - cdist(Y, Y).mean()
    )


def _group_statistic(D: np.ndarray, total: float, members: np.ndarray, m: int, n: int):
    """T statistics for membership rows over a pooled distance matrix."""
    fx = members.astype(np.float64)
    fy = 1.0 - fx
    inner_x = ((fx @ D) * fx).sum(axis=1)
    inner_y = ((fy @ D) * fy).sum(axis=1)
    cross = (total - inner_x - inner_y) / 2.0
    e = 2.0 * cross / (m * n) - inner_x / m**2 - inner_y / n**2
    return (m * n / (m + n)) * e


def permutation_test(X, Y, n_perms: int = 999, seed: int = 0) -> EnergyTestResult:
    """Two-sample energy test with a permutation p-value.

    Permutations reassign the pooled points to groups of the original
    sizes; each permutation is seeded independently from (seed, index) so
    the result does not depend on evaluation order.
    """
    X = _as_points(X, "X")
    Y = _as_points(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatchError(
            f"point dimensions differ: {X.shape[1]} vs {Y.shape[1]}"
        )
    m, n = X.shape[0], Y.shape[0]
    if m + n < 4:
        raise ValueError(f"need at least 4 pooled points, got {m + n}")
    if n_perms < 99:
        raise ValueError(f"need at least 99 permutations, got {n_perms}")

    pooled = np.vstack([X, Y])
    D = cdist(pooled, pooled)
    total = D.sum()

    observed = np.zeros((1, m + n), dtype=bool)
    observed[0, :m] = True
    t_obs = _group_statistic(D, total, observed, m, n)[0]

    members = np.zeros((n_perms, m + n), dtype=bool)
    for i in range(n_perms):
        rng = np.random.Generator(np.random.Philox(key=derive_seed(seed, "perm", i)))
        members[i, rng.permutation(m + n)[:m]] = True
    t_perm = _group_statistic(D, total, members, m, n)

    exceed = int(np.sum(t_perm >= t_obs))
    e = t_obs * (m + n) / (m * n)
    return EnergyTestResult(
        energy_distance=float(e),
        statistic=float(t_obs),
        p_value=(1 + exceed) / (n_perms + 1),
        m=m,
        n=n,
        permutations=n_perms,
    )


def _record_latent_boxes(record, manifest: DatasetManifest):
    return [
        b if b.space == LATENT else rescale_to_latent(b, manifest.image_size, manifest.latent_size)
        for b in record.annotations
    ]


def _negative_position(rng, width, height, size, forbidden: Region | None):
    """Uniform top-left corner for a size x size patch, optionally disjoint
    from ``forbidden``."""
    xs = np.arange(width - size + 1)
    ys = np.arange(height - size + 1)
    if forbidden is None:
        return int(rng.choice(xs)), int(rng.choice(ys))
    gx, gy = np.meshgrid(xs, ys)
    overlap_x = (gx < forbidden.x2) & (gx + size > forbidden.x1)
    overlap_y = (gy < forbidden.y2) & (gy + size > forbidden.y1)
    valid = ~(overlap_x & overlap_y)
    if not valid.any():
        return int(rng.choice(xs)), int(rng.choice(ys))
    flat = np.flatnonzero(valid.ravel())
    pick = int(rng.choice(flat))
    return int(gx.ravel()[pick]), int(gy.ravel()[pick])


def decile_analysis(
    manifest: DatasetManifest,
    noises: dict[str, LatentTensor],
    n_perms: int = 199,
    seed: int = 0,
    patch_size: int = 24,
    n_groups: int = 10,
    exclude_overlap: bool = False,
) -> DecileAnalysis:
    """Group noises by trigger entropy and energy-test each group's patches.

    Records are ranked by entropy and split into ``n_groups`` contiguous
    groups (earlier groups get the remainder when the count does not divide
    evenly).  Within a group, the positive sample collects the full-depth
    ``patch_size`` square around every box center (patches shrunk by the
    border are skipped to keep one ambient dimension); the negative sample
    draws one random same-size patch from the same noise per positive.
    """
    scored = []
    for record in manifest.records:
        if not record.annotations:
            continue
        boxes = _record_latent_boxes(record, manifest)
        scored.append((trigger_entropy(boxes, record.noise_id).entropy, record, boxes))
    if len(scored) < n_groups:
        raise EmptyInputError(
            f"need at least {n_groups} records with annotations, got {len(scored)}"
        )
    scored.sort(key=lambda t: (t[0], t[1].noise_id))

    n = len(scored)
    base, extra = divmod(n, n_groups)
    groups = []
    start = 0
    for g in range(n_groups):
        size = base + (1 if g < extra else 0)
        groups.append(scored[start : start + size])
        start += size

    result_groups = []
    for g, members in enumerate(groups):
        positives, negatives = [], []
        for entropy, record, boxes in members:
            if record.noise_id not in noises:
                raise MissingTensorError(f"no tensor for noise_id {record.noise_id!r}")
            tensor = noises[record.noise_id]
            for k, box in enumerate(boxes):
                cx, cy = box.center
                region = centered_region(cx, cy, patch_size, tensor.width, tensor.height)
                if region.width != patch_size or region.height != patch_size:
                    continue  # border-shrunk, wrong dimension for the test
                positives.append(tensor.slab(region).astype(np.float64).ravel())
                rng = np.random.Generator(
                    np.random.Philox(key=derive_seed(seed, "negative", record.noise_id, k))
                )
                nx, ny = _negative_position(
                    rng, tensor.width, tensor.height, patch_size,
                    region if exclude_overlap else None,
                )
                neg = Region(nx, ny, nx + patch_size, ny + patch_size)
                negatives.append(tensor.slab(neg).astype(np.float64).ravel())
        if not positives:
            raise EmptyInputError(f"group {g + 1} has no usable patches")
        test = permutation_test(
            np.array(positives), np.array(negatives), n_perms, derive_seed(seed, "test", g)
        )
        entropies = [e for e, _, _ in members]
        result_groups.append(
            DecileGroup(
                decile=g + 1,
                entropy_lo=float(min(entropies)),
                entropy_hi=float(max(entropies)),
                mean_energy_distance=test.energy_distance,
                p_value=test.p_value,
                n_noises=len(members),
                n_patches=len(positives),
            )
        )

    rho, pval = spearmanr(
        [g.decile for g in result_groups],
        [g.mean_energy_distance for g in result_groups],
    )
    return DecileAnalysis(
        groups=tuple(result_groups),
        spearman_rho=float(rho),
        spearman_p=float(pval),
    )

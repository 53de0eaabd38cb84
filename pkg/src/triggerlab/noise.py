"""Latent noise tensors, patch surgery, and handcrafted trigger patches.

A latent tensor is the C x H x W float32 array a diffusion run starts
from (default 4 x 64 x 64).  Regions address axis-aligned rectangles in
latent cells, half-open on both axes, and always span all channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfBoundsError, ShapeMismatchError
from .rng import gaussian_stream

DEFAULT_SHAPE = (4, 64, 64)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Region:
    """Half-open rectangle [x1, x2) x [y1, y2) in latent cell coordinates."""

    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        if not (0 <= self.x1 < self.x2 and 0 <= self.y1 < self.y2):
            raise ValueError(f"degenerate region {self}")

    @property
    def width(self) -> int:
        return self.x2 - self.x1

    @property
    def height(self) -> int:
        return self.y2 - self.y1

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class LatentTensor:
    """One initial noise: float32 data of shape (channels, height, width).

    The wrapped array is frozen; all operations return new tensors, so
    values are safe to share across threads.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise ValueError(f"latent tensor must be 3-d, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("latent tensor contains non-finite values")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def check_region(self, region: Region) -> None:
        if region.x2 > self.width or region.y2 > self.height:
            raise OutOfBoundsError(
                f"region {region.as_tuple()} exceeds {self.width}x{self.height} tensor"
            )

    def slab(self, region: Region) -> np.ndarray:
        """Read-only view of the full-depth slab addressed by ``region``."""
        self.check_region(region)
        return self.data[:, region.y1 : region.y2, region.x1 : region.x2]


@dataclass(frozen=True)
class Patch:
    """A full-depth slab paired with the region it was cut from.

    Synthesized patches are anchored at the origin; the region only fixes
    the patch dimensions, injection decides the position.
    """

    region: Region
    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[1:] != (self.region.height, self.region.width):
            raise ShapeMismatchError(
                f"patch data {arr.shape} does not match region "
                f"{self.region.height}x{self.region.width}"
            )
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def channels(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class SinePatchSpec:
    """Parameters of the sinusoidal patch transform.

    ``theta`` interpolates between the base patch (0) and the pure sine
    pattern (pi/2); ``l_x``/``l_y`` are spatial wavelengths in cells and
    ``l_z`` the channel wavelength.
    """

    theta: float
    l_x: float = 24.0
    l_y: float = 24.0
    l_z: float = 4.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi / 2:
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta}")
        if min(self.l_x, self.l_y, self.l_z) <= 0:
            raise ValueError("wavelengths must be positive")


@dataclass(frozen=True)
class ShiftedGaussianSpec:
    """Gaussian patch with a non-unit standard deviation."""

    std: float
    mean: float = 0.0

    def __post_init__(self):
        if self.std <= 0:
            raise ValueError(f"std must be positive, got {self.std}")


def sample_noise(seed: int, shape: tuple[int, int, int] = DEFAULT_SHAPE) -> LatentTensor:
    """Draw an i.i.d. standard-normal tensor, bit-identical in (seed, shape)."""
    c, h, w = shape
    if min(c, h, w) <= 0:
        raise ValueError(f"shape dims must be positive, got {shape}")
    values = gaussian_stream(seed, c * h * w).astype(np.float32)
    return LatentTensor(values.reshape(c, h, w))


def extract_patch(noise: LatentTensor, region: Region) -> Patch:
    """Copy the slab addressed by ``region`` out of ``noise``."""
    return Patch(region=region, data=noise.slab(region).copy())


def inject_patch(noise: LatentTensor, patch: Patch, target: Region) -> LatentTensor:
    """Replace the ``target`` slab of ``noise`` with the patch data.

    The patch's own region only has to match the target's dimensions;
    everything outside ``target`` is untouched.
    """
    noise.check_region(target)
    if (patch.region.width, patch.region.height) != (target.width, target.height):
        raise ShapeMismatchError(
            f"patch {patch.region.width}x{patch.region.height} does not fit "
            f"target {target.width}x{target.height}"
        )
    if patch.channels != noise.channels:
        raise ShapeMismatchError(
            f"patch has {patch.channels} channels, tensor has {noise.channels}"
        )
    out = noise.data.copy()
    out[:, target.y1 : target.y2, target.x1 : target.x2] = patch.data
    return LatentTensor(out)


def resample_region(
    noise: LatentTensor, region: Region, seed: int, match_moments: bool = False
) -> LatentTensor:
    """Replace the slab under ``region`` with fresh Gaussian draws.

    The draws equal ``sample_noise(seed, slab_shape)``.  With
    ``match_moments`` they are affinely rescaled so the new slab's sample
    mean and (population) std equal the old slab's.
    """
    old = noise.slab(region)
    fresh = sample_noise(seed, (noise.channels, region.height, region.width)).data
    if match_moments:
        f64 = fresh.astype(np.float64)
        scale = old.astype(np.float64).std() / f64.std()
        slab = (f64 - f64.mean()) * scale + old.astype(np.float64).mean()
        slab = slab.astype(np.float32)
    else:
        slab = fresh
    out = noise.data.copy()
    out[:, region.y1 : region.y2, region.x1 : region.x2] = slab
    return LatentTensor(out)


def synth_shifted_gaussian(
    spec: ShiftedGaussianSpec,
    region_dims: tuple[int, int] = (24, 24),
    seed: int = 0,
    channels: int = 4,
) -> Patch:
    """Draw an N(mean, std^2) patch of ``region_dims`` = (width, height).

    With ``std=1, mean=0`` the data is bit-equal to
    ``sample_noise(seed, (channels, h, w))``.
    """
    w, h = region_dims
    base = sample_noise(seed, (channels, h, w)).data
    data = base.astype(np.float64) * spec.std + spec.mean
    return Patch(region=Region(0, 0, w, h), data=data.astype(np.float32))


def synth_sine_patch(base: Patch, spec: SinePatchSpec) -> Patch:
    """Blend a separable sine pattern into ``base``.

    Cell (x, y, z), with x/y the spatial offsets inside the patch and z
    the channel index, becomes::

        sin(theta) * [sin(2 pi x / l_x) + sin(2 pi y / l_y) + sin(2 pi z / l_z)]
          + cos(theta) * base(x, y, z)

    Coordinates are patch-local, so the same patch works at any injection
    position.
    """
    c, h, w = base.data.shape
    z = np.arange(c, dtype=np.float64)[:, None, None]
    y = np.arange(h, dtype=np.float64)[None, :, None]
    x = np.arange(w, dtype=np.float64)[None, None, :]
    wave = (
        np.sin(2.0 * np.pi * x / spec.l_x)
        + np.sin(2.0 * np.pi * y / spec.l_y)
        + np.sin(2.0 * np.pi * z / spec.l_z)
    )
    blended = math.sin(spec.theta) * wave + math.cos(spec.theta) * base.data.astype(np.float64)
    return Patch(region=base.region, data=blended.astype(np.float32))


def centered_region(
    cx: float, cy: float, size: int, width: int, height: int
) -> Region:
    """The ``size`` x ``size`` region around a center, shrunk at borders.

    The nominal extent is [c - size/2, c + size/2); cells falling outside
    the tensor are cut off rather than shifting the region.
    """
    half = size // 2
    x1 = max(0, int(math.floor(cx)) - half)
    x2 = min(width, int(math.floor(cx)) - half + size)
    y1 = max(0, int(math.floor(cy)) - half)
    y2 = min(height, int(math.floor(cy)) - half + size)
    return Region(x1, y1, x2, y2)


def save_noise(path, tensor: LatentTensor) -> None:
    """Write NPY v1.0, little-endian float32, C-order, shape (C, H, W)."""
    arr = np.ascontiguousarray(tensor.data, dtype="<f4")
    with open(path, "wb") as fp:
        np.lib.format.write_array(fp, arr, version=(1, 0))


def load_noise(path) -> LatentTensor:
    arr = np.load(path)
    if arr.ndim != 3:
        raise ValueError(f"{path}: expected a 3-d (C,H,W) array, got {arr.shape}")
    return LatentTensor(arr.astype(np.float32, copy=False))

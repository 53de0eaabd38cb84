"""Sampling latent noise and performing patch surgery.

Walks through the basic objects: deterministic Gaussian tensors, regions,
patch extraction/injection, and the two handcrafted patch families
(shifted Gaussian, sinusoidal blend).
"""

import math

import numpy as np

from triggerlab import (
    Region,
    ShiftedGaussianSpec,
    SinePatchSpec,
    extract_patch,
    inject_patch,
    sample_noise,
    synth_shifted_gaussian,
    synth_sine_patch,
)

# Sampling is a pure function of (seed, shape): rerunning this script
# reproduces every value bit for bit.
noise = sample_noise(seed=7)
print(f"noise shape {noise.shape}, mean {noise.data.mean():+.4f}, "
      f"std {noise.data.std():.4f}")

# Move the top-left corner slab to the bottom-right.
src, dst = Region(0, 0, 24, 24), Region(40, 40, 64, 64)
moved = inject_patch(noise, extract_patch(noise, src), dst)
same = np.array_equal(moved.data[:, 40:64, 40:64], noise.data[:, 0:24, 0:24])
print(f"translate slab {src.as_tuple()} -> {dst.as_tuple()}: slabs equal = {same}")

# A shifted-Gaussian patch is the simplest artificial trigger: same shape,
# wider distribution.
hot = synth_shifted_gaussian(ShiftedGaussianSpec(std=1.5), (24, 24), seed=3)
print(f"shifted patch std {hot.data.std():.3f} (target 1.5)")

# The sinusoidal blend interpolates between the original patch (theta=0)
# and a pure separable sine pattern (theta=pi/2).
base = extract_patch(noise, Region(20, 20, 44, 44))
for frac in (0.0, 0.08, 0.15, 0.5):
    theta = frac * math.pi / 2
    blended = synth_sine_patch(base, SinePatchSpec(theta=theta))
    print(f"theta = {frac:.2f} * pi/2: max |cell| = {np.abs(blended.data).max():.3f}")

print("\ninjecting the hot patch back into a fresh noise:")
target = Region(8, 8, 32, 32)
blended_noise = inject_patch(sample_noise(seed=8), hot, target)
outside = np.ones((64, 64), bool)
outside[8:32, 8:32] = False
print(f"slab std inside target {blended_noise.data[:, 8:32, 8:32].std():.3f}, "
      f"outside {blended_noise.data[:, outside].std():.3f}")

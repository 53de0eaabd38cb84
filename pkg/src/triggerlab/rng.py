"""Reproducible Gaussian sampling on a counter-based generator.

Every random quantity in this package is a pure function of an integer
seed.  The generator is pinned down exactly so that an independent
implementation (any language) can reproduce the streams bit for bit:

1. Bit source: Philox4x64-10 with ``key = seed mod 2**128`` and the
   counter starting at zero, emitting the native little-endian ``uint64``
   block stream (numpy's ``np.random.Philox(key=seed).random_raw``).
2. Uniforms in (0, 1]: ``u = ((block >> 11) + 1) * 2.0**-53``.
3. Normals via Box-Muller on consecutive uniform halves.  For ``n``
   outputs draw ``2*m`` uniforms with ``m = ceil(n/2)``; with
   ``u1 = u[:m]`` and ``u2 = u[m:]``::

       r      = sqrt(-2 * ln(u1))
       z[2i]   = r[i] * cos(2*pi * u2[i])
       z[2i+1] = r[i] * sin(2*pi * u2[i])

   and the first ``n`` values of ``z`` are returned.  All arithmetic is
   IEEE-754 double precision.

The ``+ 1`` in step 2 keeps ``u1`` strictly positive so the logarithm is
always finite.

Sub-streams for composite workflows (per-iteration resampling, per-trial
noises, per-permutation shuffles) use :func:`derive_seed`, which hashes a
label path with SHA-256; this is stable across platforms and languages.
"""

from __future__ import annotations

import hashlib

import numpy as np

_TWO_POW_MINUS_53 = 2.0**-53


def uniform_stream(seed: int, n: int) -> np.ndarray:
    """Return ``n`` doubles in (0, 1] from the Philox stream for ``seed``."""
    raw = np.random.Philox(key=seed).random_raw(n)
    return ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_POW_MINUS_53


def gaussian_stream(seed: int, n: int) -> np.ndarray:
    """Return ``n`` i.i.d. standard normal doubles, bit-exact in ``seed``."""
    if n == 0:
        return np.empty(0)
    m = (n + 1) // 2
    u = uniform_stream(seed, 2 * m)
    u1, u2 = u[:m], u[m:]
    r = np.sqrt(-2.0 * np.log(u1))
    angle = (2.0 * np.pi) * u2
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(angle)
    z[1::2] = r * np.sin(angle)
    return z[:n]


def derive_seed(*parts: int | str) -> int:
    """Hash a label path to a 64-bit sub-seed.

    ``derive_seed(7, "purify", 2)`` is deterministic, order-sensitive, and
    collision-resistant across distinct paths (SHA-256 of the canonical
    encoding, truncated to 8 little-endian bytes).
    """
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, str):
            data = part.encode("utf-8")
            h.update(b"s" + len(data).to_bytes(4, "little") + data)
        else:
            h.update(b"i" + int(part).to_bytes(16, "little", signed=True))
    return int.from_bytes(h.digest()[:8], "little")

"""Counter-based Gaussian generator for reproducible Monte Carlo noise.

Every standard normal produced here is a pure function of

    (master seed, sample index, time-step index, mode block, substream tag),

realised with a vectorised Philox-4x32-10 block cipher followed by a
Box-Muller transform (two normals per 128-bit block).  Because no state is
carried between calls, the draw for a given key is identical regardless of
batch layout, evaluation order or thread count, which is what makes coupled
multi-level experiments and multi-threaded reductions bit-reproducible.

Counter layout (four 32-bit words): (mode_block, step, sample, tag).
Key layout (two 32-bit words): the master seed split into low/high words.
"""

from __future__ import annotations

import numpy as np

__all__ = ["normal_block", "philox4x32", "uniforms_from_words"]

_MASK32 = np.uint64(0xFFFFFFFF)
_MUL0 = np.uint64(0xD2511F53)
_MUL1 = np.uint64(0xCD9E8D57)
_WEYL0 = np.uint64(0x9E3779B9)
_WEYL1 = np.uint64(0xBB67AE85)
_ROUNDS = 10
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox-4x32-10 applied elementwise to broadcastable uint64 words.

    Inputs hold 32-bit values in uint64 containers; returns the four output
    words, each again a 32-bit value in a uint64 array.
    """
    c0, c1, c2, c3 = np.broadcast_arrays(
        np.asarray(c0, dtype=np.uint64),
        np.asarray(c1, dtype=np.uint64),
        np.asarray(c2, dtype=np.uint64),
        np.asarray(c3, dtype=np.uint64),
    )
    c0, c1 = c0.copy(), c1.copy()
    c2, c3 = c2.copy(), c3.copy()
    k0 = np.uint64(k0)
    k1 = np.uint64(k1)
    sh = np.uint64(32)
    for _ in range(_ROUNDS):
        p0 = _MUL0 * c0
        p1 = _MUL1 * c2
        n0 = (p1 >> sh) ^ c1 ^ k0
        n1 = p1 & _MASK32
        n2 = (p0 >> sh) ^ c3 ^ k1
        n3 = p0 & _MASK32
        c0, c1, c2, c3 = n0, n1, n2, n3
        k0 = (k0 + _WEYL0) & _MASK32
        k1 = (k1 + _WEYL1) & _MASK32
    return c0, c1, c2, c3


def uniforms_from_words(c0, c1, c2, c3):
    """Two uniforms per 128-bit block: u1 in (0, 1], u2 in [0, 1)."""
    sh = np.uint64(32)
    a = (c0 << sh) | c1
    b = (c2 << sh) | c3
    eleven = np.uint64(11)
    u1 = ((a >> eleven) + np.uint64(1)).astype(np.float64) * _INV53
    u2 = (b >> eleven).astype(np.float64) * _INV53
    return u1, u2


def normal_block(seed: int, samples, step: int, n_values: int, tag: int = 0) -> np.ndarray:
    """Standard normals of shape (len(samples), n_values).

    ``samples`` is an array of sample indices; value (i, m) depends only on
    (seed, samples[i], step, m, tag).
    """
    samples = np.atleast_1d(np.asarray(samples, dtype=np.uint64))
    n_blocks = (n_values + 1) // 2
    blocks = np.arange(n_blocks, dtype=np.uint64)[None, :]
    c0 = np.broadcast_to(blocks, (samples.shape[0], n_blocks))
    c1 = np.uint64(step)
    c2 = samples[:, None]
    c3 = np.uint64(tag)
    k0 = np.uint64(seed) & _MASK32
    k1 = (np.uint64(seed) >> np.uint64(32)) & _MASK32
    w0, w1, w2, w3 = philox4x32(c0, c1, c2, c3, k0, k1)
    u1, u2 = uniforms_from_words(w0, w1, w2, w3)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = (2.0 * np.pi) * u2
    out = np.empty((samples.shape[0], 2 * n_blocks))
    out[:, 0::2] = r * np.cos(theta)
    out[:, 1::2] = r * np.sin(theta)
    return out[:, :n_values]

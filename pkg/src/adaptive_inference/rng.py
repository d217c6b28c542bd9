"""Counter-based random streams.

Every random number used by a simulated replication is a pure function of
``(replication seed, sub-stream, step, draw index)``.  This makes a
replication reproducible on its own, independent of how replications are
batched or ordered.

Mixer: SplitMix64 finalizer (Steele, Lea & Flood).  A counter tuple is
folded into a single 64-bit word by chaining the mixer::

    key  = mix(seed + stream * GOLDEN)
    key  = mix(key ^ step)
    word = mix(key ^ draw)

and the top 53 bits of ``word`` give a uniform on the open interval (0, 1).

Sub-stream allocation
---------------------
ENV        reward noise for the chosen arm (draw index 0)
DESIGN     multinomial draw of the arm (draw index 0)
POSTERIOR  Thompson-sampling posterior draws (draw index ``l * K + w``)
"""
from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

ENV = 1
DESIGN = 2
POSTERIOR = 3

_TWO_M53 = 2.0**-53


def mix64(x) -> np.ndarray:
    """SplitMix64 step applied elementwise (wrapping uint64 arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    z = np.array(x, ndmin=1)
    with np.errstate(over="ignore"):
        z = z + GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z = z ^ (z >> np.uint64(31))
    return z.reshape(x.shape)


def replication_seed(base_seed: int, index) -> np.ndarray:
    """Seed of replication ``index`` under ``base_seed``.

    ``index`` may be an integer or an integer array.
    """
    base = mix64(base_seed % 2**64)
    return mix64(base ^ np.asarray(index, dtype=np.uint64))


def stream_keys(seeds, stream: int, step: int) -> np.ndarray:
    seeds = np.asarray(seeds, dtype=np.uint64)
    offset = np.uint64((stream * int(GOLDEN)) % 2**64)
    with np.errstate(over="ignore"):
        key = mix64(seeds + offset)
    return mix64(key ^ np.uint64(step))


def uniforms(seeds, stream: int, step: int, n_draws: int | None = None) -> np.ndarray:
    """Uniform(0, 1) draws for every seed at one step.

    Returns shape ``seeds.shape`` when ``n_draws`` is None, otherwise
    ``seeds.shape + (n_draws,)``.
    """
    key = stream_keys(seeds, stream, step)
    if n_draws is None:
        word = mix64(key)
    else:
        word = mix64(key[..., None] ^ np.arange(n_draws, dtype=np.uint64))
    return ((word >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53

"""Reproducible, splittable random streams.

Every sampler in the package takes an explicit ``numpy.random.Generator``.
``substream`` derives independent generators from a root seed and a tuple of
purpose tags (strings or integers), so concurrent consumers can be given
disjoint streams that are stable across runs and platforms.
"""

import hashlib

import numpy as np


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, *tags) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *tags)``.

    Identical arguments always produce an identical stream; distinct tag
    tuples produce statistically independent streams.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_tag_to_int(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))

"""Named seed derivation: one top-level seed reproduces a whole experiment tree."""

import zlib

import numpy as np


def _key(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part)


def derive_rng(seed, *keys):
    """Return a Generator whose stream depends only on ``seed`` and the key path.

    Keys may be strings (component names) or non-negative integers (indices).
    """
    entropy = [int(seed)] + [_key(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))

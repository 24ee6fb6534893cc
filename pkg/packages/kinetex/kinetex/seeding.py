"""Named random sub-streams derived from one scenario seed."""

from __future__ import annotations

import hashlib

import numpy as np


def _name_words(name: str) -> list[int]:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for `name`, reproducible from `seed` alone.

    Streams with different names never share state, so adding a new audit
    does not shift the samples drawn by existing ones.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *_name_words(name)]))

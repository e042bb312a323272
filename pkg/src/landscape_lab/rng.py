"""Seeded random streams.

Every random draw in the package comes from a Philox counter-based bit
generator keyed by ``SeedSequence([seed, *keys])``.  A run is therefore
reproducible from ``(seed, index)`` alone, independent of how many other
runs were drawn before it or on which worker it executes.
"""

import numpy as np

STREAM_NAMES = {
    "init": 0,
    "sample": 1,
    "observable": 2,
    "probe": 3,
    "points": 4,
}


def stream(seed, *keys):
    """Return a ``numpy.random.Generator`` for the stream ``(seed, *keys)``.

    String keys are mapped through ``STREAM_NAMES``.
    """
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for k in keys:
        words.append(STREAM_NAMES[k] if isinstance(k, str) else int(k))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))

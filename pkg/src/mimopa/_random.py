"""Counter-style random streams.

Every random draw in the package comes from a generator keyed by
``(seed, stream, *counters)`` so that a trial can be regenerated in isolation,
on any worker, in any order.
"""

import numpy as np

# Fixed stream identifiers; never renumber, results depend on them.
STREAMS = {
    "drop": 1,
    "fading": 2,
    "estimate": 3,
    "symbols": 4,
    "noise": 5,
    "alpha_cal": 6,
    "lambda_cal": 7,
    "fixture": 8,
}


def rng_for(seed, stream, *counters):
    """Return a ``numpy.random.Generator`` for one named stream."""
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, STREAMS[stream], *(int(c) for c in counters)]
    return np.random.default_rng(np.random.SeedSequence(key))


def as_generator(seed):
    """Accept an int, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def crandn(rng, shape, var=1.0):
    """Circular complex Gaussian samples with the given variance."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

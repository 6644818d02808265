"""Named, counter-based random streams.

Every random draw in the library comes from a stream keyed by
``(seed, stream, path, mode)``.  A path therefore receives the same
numbers whatever batch it is generated in, which makes the output
independent of batch size and of how work is split across processes.
"""

import numpy as np

# stream identifiers; part of the reproducibility contract, do not renumber
FBM = 0
BROWNIAN = 1
FIXTURE = 2
VALIDATION = 3

_MASK64 = (1 << 64) - 1


def stream(seed: int, stream_id: int, path: int = 0, mode: int = 0) -> np.random.Generator:
    """Return the Philox generator for one (seed, stream, path, mode) key."""
    if seed < 0 or seed > _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id, path, mode))
    return np.random.Generator(np.random.Philox(ss))


def normals(seed: int, stream_id: int, paths, size: int, mode: int = 0) -> np.ndarray:
    """Stack ``size`` standard normals per path index in ``paths``."""
    paths = list(paths)
    out = np.empty((len(paths), size))
    for row, p in enumerate(paths):
        out[row] = stream(seed, stream_id, p, mode).standard_normal(size)
    return out

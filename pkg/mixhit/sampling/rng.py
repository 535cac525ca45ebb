import numpy as np


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based Philox generator keyed by (seed, stream); distinct streams are independent."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


def split(rng_seed: int, stream: int, n: int) -> list[np.random.Generator]:
    """n independent child generators of one stream, e.g. one per replicate batch."""
    parent = np.random.SeedSequence(rng_seed, spawn_key=(stream,))
    return [np.random.Generator(np.random.Philox(child)) for child in parent.spawn(n)]

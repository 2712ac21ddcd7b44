"""Named, independent random streams derived from one master seed.

Every stochastic component of a run (plant resets, each agent's weight
initialisation, exploration noise, batch draws, ...) pulls from its own
generator so that enabling or disabling one component never shifts the
draws seen by another.
"""

import hashlib

import numpy as np


def substream(master_seed: int, name: str) -> np.random.Generator:
    """Return a generator keyed by ``(master_seed, name)``.

    The name is hashed with SHA-256, so the mapping is stable across
    processes and platforms.
    """
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    salt = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(np.random.SeedSequence([master_seed, salt]))

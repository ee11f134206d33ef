"""Named, counter-style random sub-streams derived from one master seed.

Every random draw in the package goes through :func:`substream`, so a
stream is identified by ``(master_seed, *keys)`` alone and does not depend
on the order in which other streams were consumed.
"""
import numpy as np

# stage tags; kept as small ints so spawn keys stay compact
SIMULATE = 1
BOOTSTRAP = 2
DESIGN = 3


def substream(seed, *keys):
    """Return a Generator for the stream labelled by ``keys`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))

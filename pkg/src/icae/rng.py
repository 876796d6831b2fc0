"""Named, reproducible random streams.

Every stream is a PCG64 generator seeded from ``SeedSequence(master_seed,
spawn_key=<utf-8 bytes of the label>)``, so a (seed, label) pair yields the
same draws on every platform and in every process.
"""

import numpy as np


def stream(master_seed, label):
    key = tuple(str(label).encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(master_seed), spawn_key=key)))


def seed_streams(master_seed, labels):
    labels = list(labels)
    if len(set(labels)) != len(labels):
        dupes = sorted({x for x in labels if labels.count(x) > 1})
        raise ValueError(f"duplicate stream labels: {dupes}")
    return {label: stream(master_seed, label) for label in labels}

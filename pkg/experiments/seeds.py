"""
Seed discipline.

One master seed expands into per-repeat, per-stage seeds with a counter-based
scheme: seed = SeedSequence([master, repeat, stage, *keys]). A stage's seed
does not depend on which other stages run or in which order, so switching the
flip ratio or the valuation back-end leaves data, splits and training seeds
untouched.
"""

from __future__ import annotations

import numpy as np

STAGES = {
    "data": 1,
    "test": 2,
    "split": 3,
    "flip": 4,
    "fedavg": 5,
    "heads": 6,
}


def derive_seed(master: int, repeat: int, stage: str, *keys: int) -> int:
    if stage not in STAGES:
        raise KeyError(f"unknown seed stage '{stage}'")
    entropy = [int(master), int(repeat), STAGES[stage], *(int(k) for k in keys)]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


class RepeatSeeds:
    """Seeds of one repeat, keyed by stage and (optionally) source or client index."""

    def __init__(self, master: int, repeat: int):
        self.master = master
        self.repeat = repeat

    def __call__(self, stage: str, *keys: int) -> int:
        return derive_seed(self.master, self.repeat, stage, *keys)

    def as_dict(self, n_sources: int, n_clients: int) -> dict:
        return {
            "repeat": self.repeat,
            "data": [self("data", s) for s in range(n_sources)],
            "test": [self("test", s) for s in range(n_sources)],
            "split": [self("split", s) for s in range(n_sources)],
            "flip": [self("flip", c) for c in range(n_clients)],
            "fedavg": self("fedavg"),
            "heads": self("heads"),
        }

"""
Deterministic random streams.

Every replication owns one independent numpy Generator per purpose, spawned
from the master seed and the replication index. The same (seed, replication)
therefore reproduces the same channel, fading and contention draws for every
policy and every sweep point (common random numbers).
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

STREAM_NAMES = ("channel", "fading", "contention", "policy", "graph", "assignment")


@dataclass
class RandomStreamPlan:
    """
    Attributes:
        seed: Master seed of the run
        replication: Replication index
    """
    seed: int
    replication: int
    streams: Dict[str, np.random.Generator] = field(init=False, repr=False)

    def __post_init__(self):
        root = np.random.SeedSequence(self.seed, spawn_key=(self.replication,))
        self.streams = {name: np.random.default_rng(child)
                        for name, child in zip(STREAM_NAMES, root.spawn(len(STREAM_NAMES)))}

    @property
    def channel(self) -> np.random.Generator:
        return self.streams["channel"]

    @property
    def fading(self) -> np.random.Generator:
        return self.streams["fading"]

    @property
    def contention(self) -> np.random.Generator:
        return self.streams["contention"]

    @property
    def policy(self) -> np.random.Generator:
        return self.streams["policy"]

    @property
    def graph(self) -> np.random.Generator:
        return self.streams["graph"]

    @property
    def assignment(self) -> np.random.Generator:
        return self.streams["assignment"]

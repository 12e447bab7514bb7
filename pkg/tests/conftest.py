import random
from dataclasses import dataclass

import pytest

from shardvcs import (
    Address,
    BlobStore,
    ChainConfig,
    Client,
    LatencyProfile,
    ShareCache,
    SimulatedChain,
    VirtualClock,
)


@dataclass
class World:
    clock: VirtualClock
    cas: BlobStore
    cache: ShareCache
    chain: SimulatedChain
    client: Client
    rng: random.Random
    owner: Address


@pytest.fixture
def make_world(tmp_path):
    """Factory for a fully wired virtual-clock deployment."""

    counter = [0]

    def build(
        delay_s: float = 14.0,
        store_profile: LatencyProfile = LatencyProfile(),
        fetch_profile: LatencyProfile = LatencyProfile(),
        seed: int = 0,
        ttl_s: float = 24 * 3600.0,
    ) -> World:
        counter[0] += 1
        clock = VirtualClock()
        rng = random.Random(seed)
        cas = BlobStore(tmp_path / f"cas{counter[0]}", store_profile, fetch_profile, clock)
        cache = ShareCache(ttl_s=ttl_s, clock=clock)
        chain = SimulatedChain(ChainConfig.constant(delay_s), clock, rng=rng)
        client = Client(cas, chain, cache, clock=clock, rng=rng)
        return World(clock, cas, cache, chain, client, rng, Address.from_label("owner"))

    return build

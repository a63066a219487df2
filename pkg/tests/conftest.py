import random

import pytest

from prsvanet import scheme
from prsvanet.actors import ThresholdPolicy, TrustedAuthority, register


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture
def ta_keys(rng):
    return scheme.ta_keygen(rng)


@pytest.fixture
def vehicle(rng):
    return scheme.vehicle_keygen(rng, b"RID-0001")


@pytest.fixture
def rsk(ta_keys, vehicle):
    return scheme.make_resign_key(ta_keys, vehicle.X, vehicle.Y)


class Network:
    """One TA, some RSUs, some registered vehicles."""

    def __init__(self, rng, n_rsus=1, n_vehicles=3, threshold=1, window=300):
        self.rng = rng
        self.ta = TrustedAuthority(rng)
        self.rsus = [self.ta.add_rsu(f"L{j}".encode(), rng, ThresholdPolicy(threshold), window)
                     for j in range(n_rsus)]
        self.vehicles = []
        for i in range(n_vehicles):
            self.add_vehicle(f"RID-{i:04d}".encode())

    def add_vehicle(self, rid):
        keys = scheme.vehicle_keygen(self.rng, rid)
        register(self.ta, keys, self.rng)
        self.vehicles.append(keys)
        return keys


@pytest.fixture
def network(rng):
    return Network(rng)


@pytest.fixture
def make_network(rng):
    def factory(**kw):
        return Network(rng, **kw)
    return factory

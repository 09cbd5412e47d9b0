import numpy as np
import pytest

from spatialoha.network import (ChannelParams, NetworkRealization,
                                generate_realization,
                                interference_coefficients,
                                nearest_interferer_structure)


@pytest.fixture
def params():
    return ChannelParams(alpha=4.0, sinr_threshold=10.0)


@pytest.fixture
def small_instance(params):
    """8 bipoles at the reference density, with b and neighbor structure."""
    real = generate_realization(8 / 36.0, 6.0, 1.0, "fixed", seed=42)
    b = interference_coefficients(real, params)
    nbr = nearest_interferer_structure(real)
    return real, b, nbr


def hand_realization(positions, angles, link_distance=1.0, region_side=100.0):
    """Build a realization from explicit transmitter positions."""
    return NetworkRealization(tx=np.asarray(positions, dtype=float),
                              rx_angle=np.asarray(angles, dtype=float),
                              link_distance=link_distance,
                              region_side=region_side, seed=0)

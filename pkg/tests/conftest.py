import os
import sys

import numpy as np
import pytest

# Repository root for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from gravity_phase import GeometrySpec, MassPair, build_joint_state, build_phase_field  # noqa: E402
from quantum_walk import CoinSpec, SpinState, evolve  # noqa: E402


@pytest.fixture
def geometry():
    return GeometrySpec(separation=100, step_ratio=1.0)


@pytest.fixture
def masses():
    return MassPair(np.pi / 4, np.pi / 6)


@pytest.fixture
def make_joint(geometry):
    """Factory for phased joint states at step t"""
    def build(t, theta_a=np.pi / 4, theta_b=np.pi / 6, spin_a='up', spin_b='down', geom=None):
        geom = geom or geometry
        pair = MassPair(theta_a, theta_b)
        walk_a = evolve(SpinState.from_label(spin_a), CoinSpec(theta_a), t)
        walk_b = evolve(SpinState.from_label(spin_b), CoinSpec(theta_b), t)
        return build_joint_state(walk_a, walk_b, build_phase_field(t, geom, pair))
    return build

"""
Gravitational Phase Between Two Parallel Walks
Dimensionless phase g_ij(t) for every joint position pair and the phased joint state.

Walker A sits on one line, walker B on a parallel line L sites away. The
component |i_A>|j_B> picks up exp(-i g_ij(t)) with

    g_ij(t) = -kappa * (t - max(|i|, |j|)) / sqrt(L^2 + (i - j)^2)
    kappa   = step_ratio * sin(theta_A) * sin(theta_B)

in reduced units where no physical constant survives.
"""
import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from config import GEOMETRY_CONFIG
from quantum_walk import WalkState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeometrySpec:
    """Perpendicular separation L (lattice units) and N_t / N_d"""
    separation: int = GEOMETRY_CONFIG['separation']
    step_ratio: float = GEOMETRY_CONFIG['step_ratio']

    def __post_init__(self):
        if int(self.separation) != self.separation or self.separation <= 0:
            raise ValueError(f"Separation L must be a positive integer, got {self.separation}")
        if self.step_ratio <= 0:
            raise ValueError(f"Step ratio must be positive, got {self.step_ratio}")

    def check_spread(self, t_max: int):
        """The walks must stay narrow compared with their separation"""
        if self.separation <= 2 * t_max:
            raise ValueError(
                f"Separation L={self.separation} must exceed twice the step count ({2 * t_max})"
            )
        if self.separation <= 4 * t_max:
            logger.warning(f"Separation L={self.separation} is close to the walk spread at t={t_max}")


def mass_from_theta(theta: float) -> float:
    """Walker mass in Planck units for coin angle theta"""
    if not 0.0 <= theta <= np.pi / 2:
        raise ValueError(f"Mass parameter theta must be in [0, pi/2], got {theta}")
    return float(np.sin(theta))


@dataclass(frozen=True)
class MassPair:
    theta_a: float
    theta_b: float

    def __post_init__(self):
        mass_from_theta(self.theta_a)
        mass_from_theta(self.theta_b)

    @property
    def masses(self) -> tuple:
        return mass_from_theta(self.theta_a), mass_from_theta(self.theta_b)

    def coupling(self, geom: GeometrySpec) -> float:
        """kappa = step_ratio * m_A * m_B"""
        mass_a, mass_b = self.masses
        return geom.step_ratio * mass_a * mass_b


@dataclass(frozen=True, eq=False)
class PhaseField:
    """g[i + t, j + t] = g_ij(t) in radians"""
    t: int
    g: NDArray[np.float64]

    def __post_init__(self):
        expected = (2 * self.t + 1, 2 * self.t + 1)
        if self.g.shape != expected:
            raise ValueError(f"Phase field shape {self.g.shape} does not match t={self.t} {expected}")


@dataclass(frozen=True, eq=False)
class JointState:
    """Phased two-walker state; amplitudes indexed (i, s_A, j, s_B)"""
    t: int
    amplitudes: NDArray[np.complex128]

    @property
    def vector(self) -> NDArray[np.complex128]:
        return self.amplitudes.reshape(-1)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


def pair_distance(i, j, geom: GeometrySpec):
    """d_ij = sqrt(L^2 + (i - j)^2); works elementwise on arrays"""
    return np.hypot(geom.separation, np.subtract(i, j))


def _interaction_duration(i, j, t):
    # Steps both components have existed; clamped for components on the light cone
    return np.maximum(t - np.maximum(np.abs(i), np.abs(j)), 0)


def phase_at(i: int, j: int, t: int, geom: GeometrySpec, masses: MassPair) -> float:
    """g_ij(t) for one pair of sites, constant retardation term dropped"""
    if abs(i) > t or abs(j) > t:
        raise ValueError(f"Sites (i={i}, j={j}) lie outside the light cone of step t={t}")

    kappa = masses.coupling(geom)
    return float(-kappa * _interaction_duration(i, j, t) / pair_distance(i, j, geom))


def build_phase_field(t: int, geom: GeometrySpec, masses: MassPair) -> PhaseField:
    """g_ij(t) over the full (2t + 1)^2 grid of joint positions"""
    if t < 0:
        raise ValueError(f"Step count must be non-negative, got {t}")

    sites = np.arange(-t, t + 1)
    i, j = np.meshgrid(sites, sites, indexing='ij')
    kappa = masses.coupling(geom)
    g = -kappa * _interaction_duration(i, j, t) / pair_distance(i, j, geom)
    return PhaseField(t, g.astype(np.float64))


def build_joint_state(walk_a: WalkState, walk_b: WalkState, field: PhaseField) -> JointState:
    """Tensor the two walkers and attach exp(-i g_ij) to every (i, j) component"""
    if not walk_a.t == walk_b.t == field.t:
        raise ValueError(
            f"Step counts differ: walker A t={walk_a.t}, walker B t={walk_b.t}, field t={field.t}"
        )

    phases = np.exp(-1j * field.g)
    amplitudes = np.einsum('ij,ia,jb->iajb', phases, walk_a.amplitudes, walk_b.amplitudes)
    return JointState(field.t, amplitudes)

"""
Flip Noise on Walker A
Bit-flip (sigma_x) and phase-flip (sigma_z) noise applied after every walk
step of walker A, unravelled into an ensemble of pure trajectories.

Trajectory ensembles are either exact (all 2^t flip patterns, weighted by
p^k (1 - p)^(t - k)) or Monte Carlo samples drawn from a seeded generator.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from config import NOISE_CONFIG
from entanglement import DensityMatrix, joint_structure
from gravity_phase import GeometrySpec, MassPair, build_phase_field
from quantum_walk import (
    PAULI_X, PAULI_Z, Coin, CoinSpec, SpinState, WalkState, coin_step, dense_walk_operator, evolve,
    flip_spins, shift_step,
)

logger = logging.getLogger(__name__)

PAULIS = {
    'bit_flip': PAULI_X,
    'phase_flip': PAULI_Z,
}


@dataclass(frozen=True)
class NoiseSpec:
    """Flip channel acting on walker A with probability p per step"""
    kind: str
    p: float

    def __post_init__(self):
        if self.kind not in PAULIS:
            raise ValueError(f"Unknown noise kind '{self.kind}', expected one of {sorted(PAULIS)}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"Flip probability p must be in [0, 1], got {self.p}")

    @property
    def pauli(self) -> NDArray[np.complex128]:
        return PAULIS[self.kind]


@dataclass(frozen=True)
class Trajectory:
    """flips[k] is True when the flip follows step k + 1"""
    kind: str
    flips: Tuple[bool, ...]
    weight: float

    @property
    def steps(self) -> int:
        return len(self.flips)


@dataclass(frozen=True)
class TrajectoryEnsemble:
    mode: str
    trajectories: List[Trajectory]
    seed: Optional[int] = None

    @property
    def total_weight(self) -> float:
        return float(sum(traj.weight for traj in self.trajectories))


def exact_ensemble(noise: NoiseSpec, t: int) -> TrajectoryEnsemble:
    """Every flip pattern of length t, in lexicographic order (no flip first)"""
    if t < 0:
        raise ValueError(f"Step count must be non-negative, got {t}")

    trajectories = []
    for flips in itertools.product((False, True), repeat=t):
        n_flips = sum(flips)
        weight = noise.p ** n_flips * (1.0 - noise.p) ** (t - n_flips)
        trajectories.append(Trajectory(noise.kind, tuple(flips), weight))
    return TrajectoryEnsemble('exact', trajectories)


def sampled_ensemble(noise: NoiseSpec, t: int, samples: int, seed: int) -> TrajectoryEnsemble:
    """samples flip patterns drawn with numpy's default generator, weight 1/samples each"""
    if samples < 1:
        raise ValueError(f"Number of samples must be positive, got {samples}")

    rng = np.random.default_rng(seed)
    draws = rng.random((samples, t)) < noise.p
    weight = 1.0 / samples
    trajectories = [Trajectory(noise.kind, tuple(bool(f) for f in row), weight) for row in draws]
    return TrajectoryEnsemble('sampled', trajectories, seed)


def build_ensemble(noise: NoiseSpec, t: int, config=None, seed: Optional[int] = None) -> TrajectoryEnsemble:
    """Exact enumeration for short walks, seeded sampling beyond"""
    config = config or NOISE_CONFIG
    if t <= config['exact_max_steps']:
        logger.debug(f"Exact ensemble: {2 ** t} trajectories at t={t}")
        return exact_ensemble(noise, t)

    seed = config['seed'] if seed is None else seed
    logger.info(f"Sampling {config['samples']} trajectories at t={t} (seed={seed})")
    return sampled_ensemble(noise, t, config['samples'], seed)


def noisy_walk(initial_spin: SpinState, coin: Coin, traj: Trajectory) -> WalkState:
    """Walk len(traj.flips) steps, flipping the spin register after flagged steps"""
    pauli = PAULIS[traj.kind]
    state = WalkState.localized(initial_spin)
    for flipped in traj.flips:
        state = shift_step(coin_step(state, coin))
        if flipped:
            state = flip_spins(state, pauli)
    return state


def _embed(rho_a, rho_b, field) -> NDArray[np.complex128]:
    # U (rho_A x rho_B) U^dagger with U = diag(exp(-i g_ij)) over (i, s_A, j, s_B)
    n_sites = field.g.shape[0]
    phases = np.broadcast_to(np.exp(-1j * field.g)[:, None, :, None], (n_sites, 2, n_sites, 2)).reshape(-1)
    joint = np.kron(rho_a, rho_b)
    joint *= phases[:, None]
    joint *= phases.conj()[None, :]
    return joint


def ensemble_joint_density(spins: Tuple[SpinState, SpinState], coins: MassPair, geom: GeometrySpec,
                           noise: NoiseSpec, t: int, ensemble: TrajectoryEnsemble) -> DensityMatrix:
    """
    sum over trajectories of weight * |Psi_G^traj><Psi_G^traj|.

    Only walker A's state changes between trajectories and the phasing is a
    fixed diagonal unitary, so the sum is accumulated as walker A's mixture
    and then tensored with walker B and phased once.
    """
    spin_a, spin_b = spins
    coin_a, coin_b = CoinSpec(coins.theta_a), CoinSpec(coins.theta_b)
    for traj in ensemble.trajectories:
        if traj.steps != t:
            raise ValueError(f"Trajectory of length {traj.steps} does not match t={t}")
        if traj.kind != noise.kind:
            raise ValueError(f"Trajectory kind '{traj.kind}' does not match noise kind '{noise.kind}'")

    # Identical flip patterns share one walk; first-seen order keeps the sum bit-stable
    weights = {}
    for traj in ensemble.trajectories:
        weights[traj.flips] = weights.get(traj.flips, 0.0) + traj.weight

    dim_a = 2 * (2 * t + 1)
    rho_a = np.zeros((dim_a, dim_a), dtype=np.complex128)
    for flips, weight in weights.items():
        walk = noisy_walk(spin_a, coin_a, Trajectory(noise.kind, flips, weight))
        vector = walk.amplitudes.reshape(-1)
        rho_a += weight * np.outer(vector, vector.conj())

    walk_b = evolve(spin_b, coin_b, t).amplitudes.reshape(-1)
    rho_b = np.outer(walk_b, walk_b.conj())
    field = build_phase_field(t, geom, coins)
    logger.debug(f"{ensemble.mode} ensemble at t={t}: {len(weights)} distinct trajectories")
    return DensityMatrix(_embed(rho_a, rho_b, field), joint_structure(t))


def kraus_operators(noise: NoiseSpec) -> List[NDArray[np.complex128]]:
    """[sqrt(1 - p) I, sqrt(p) sigma]"""
    return [np.sqrt(1.0 - noise.p) * np.eye(2, dtype=np.complex128), np.sqrt(noise.p) * noise.pauli]


def is_trace_preserving(kraus_ops: List[NDArray[np.complex128]], atol: float = 1e-12) -> bool:
    """sum_k K_k^dagger K_k == I"""
    if not kraus_ops:
        return False
    accum = sum(K.conj().T @ K for K in kraus_ops)
    return bool(np.allclose(accum, np.eye(accum.shape[0]), atol=atol))


def kraus_joint_density(spins: Tuple[SpinState, SpinState], coins: MassPair, geom: GeometrySpec,
                        noise: NoiseSpec, t: int) -> DensityMatrix:
    """Same ensemble density from step-wise Kraus evolution of walker A's density matrix"""
    spin_a, spin_b = spins
    n_sites = 2 * t + 1
    walk_op = dense_walk_operator(t, CoinSpec(coins.theta_a))
    site_kraus = [np.kron(np.eye(n_sites), K) for K in kraus_operators(noise)]

    start = np.zeros(2 * n_sites, dtype=np.complex128)
    start[2 * t:2 * t + 2] = spin_a.vector
    rho_a = np.outer(start, start.conj())
    for _ in range(t):
        rho_a = walk_op @ rho_a @ walk_op.conj().T
        rho_a = sum(K @ rho_a @ K.conj().T for K in site_kraus)

    walk_b = evolve(spin_b, CoinSpec(coins.theta_b), t).amplitudes.reshape(-1)
    rho_b = np.outer(walk_b, walk_b.conj())
    field = build_phase_field(t, geom, coins)
    return DensityMatrix(_embed(rho_a, rho_b, field), joint_structure(t))

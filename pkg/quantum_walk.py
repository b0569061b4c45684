"""
Discrete-Time Quantum Walk on a Line
Amplitude-level simulation of one walker with a two-state spin (coin) register.

Amplitudes are stored densely over the light-cone support [-t, t] x {up, down}:
row x + t, column 0 = up, column 1 = down. Up moves left, down moves right.
"""
import logging
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np
from numpy.typing import NDArray

from config import WALK_CONFIG

logger = logging.getLogger(__name__)

UP, DOWN = 0, 1

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)


@dataclass(frozen=True)
class CoinSpec:
    """Rotation coin C(theta) = [[cos, sin], [-sin, cos]], theta in [0, pi/2]"""
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi / 2:
            raise ValueError(f"Coin angle theta must be in [0, pi/2], got {self.theta}")

    @property
    def matrix(self) -> NDArray[np.complex128]:
        c, s = np.cos(self.theta), np.sin(self.theta)
        return np.array([[c, s], [-s, c]], dtype=np.complex128)


Coin = Union[CoinSpec, NDArray[np.complex128]]


def coin_operator(coin: Coin) -> NDArray[np.complex128]:
    """Resolve a CoinSpec or an explicit 2x2 matrix (e.g. HADAMARD) to a unitary"""
    if isinstance(coin, CoinSpec):
        return coin.matrix

    matrix = np.asarray(coin, dtype=np.complex128)
    if matrix.shape != (2, 2):
        raise ValueError(f"Coin matrix must be 2x2, got shape {matrix.shape}")
    if not np.allclose(matrix.conj().T @ matrix, np.eye(2), atol=WALK_CONFIG['coin_unitarity_tolerance']):
        raise ValueError("Coin matrix is not unitary")
    return matrix


@dataclass(frozen=True)
class SpinState:
    """Initial spin a|up> + b|down>"""
    amp_up: complex
    amp_down: complex

    def __post_init__(self):
        norm = abs(self.amp_up) ** 2 + abs(self.amp_down) ** 2
        if abs(norm - 1.0) > WALK_CONFIG['norm_tolerance']:
            raise ValueError(f"Spin state is not normalized (|a|^2 + |b|^2 = {norm})")

    @property
    def vector(self) -> NDArray[np.complex128]:
        return np.array([self.amp_up, self.amp_down], dtype=np.complex128)

    @classmethod
    def up(cls) -> 'SpinState':
        return cls(1.0, 0.0)

    @classmethod
    def down(cls) -> 'SpinState':
        return cls(0.0, 1.0)

    @classmethod
    def from_label(cls, label: str) -> 'SpinState':
        """Build a spin from a name in SPIN_LABELS"""
        key = label.strip().lower()
        if key not in SPIN_LABELS:
            raise ValueError(f"Unknown spin label '{label}', expected one of {sorted(SPIN_LABELS)}")
        amp_up, amp_down = SPIN_LABELS[key]
        return cls(amp_up, amp_down)


_R = 1.0 / np.sqrt(2.0)

SPIN_LABELS = {
    'up': (1.0, 0.0),
    'down': (0.0, 1.0),
    'plus': (_R, _R),
    'minus': (_R, -_R),
    'plus_i': (_R, 1j * _R),
    'minus_i': (_R, -1j * _R),
}


@dataclass(frozen=True, eq=False)
class WalkState:
    """Walker after t steps; amplitudes has shape (2t + 1, 2)"""
    t: int
    amplitudes: NDArray[np.complex128]

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"Step count must be non-negative, got {self.t}")
        expected = (2 * self.t + 1, 2)
        if self.amplitudes.shape != expected:
            raise ValueError(f"Amplitudes shape {self.amplitudes.shape} does not match t={self.t} {expected}")

    @property
    def positions(self) -> NDArray[np.int64]:
        return np.arange(-self.t, self.t + 1)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def amplitude(self, x: int, spin: int) -> complex:
        if abs(x) > self.t:
            return 0j
        return complex(self.amplitudes[x + self.t, spin])

    @classmethod
    def localized(cls, spin: SpinState) -> 'WalkState':
        return cls(0, spin.vector.reshape(1, 2).copy())


def coin_step(state: WalkState, coin: Coin) -> WalkState:
    """Apply the coin to the spin doublet at every site"""
    matrix = coin_operator(coin)
    return WalkState(state.t, state.amplitudes @ matrix.T)


def shift_step(state: WalkState) -> WalkState:
    """Move up amplitudes one site left and down amplitudes one site right"""
    amplitudes = np.zeros((2 * state.t + 3, 2), dtype=np.complex128)
    amplitudes[:-2, UP] = state.amplitudes[:, UP]
    amplitudes[2:, DOWN] = state.amplitudes[:, DOWN]
    return WalkState(state.t + 1, amplitudes)


def flip_spins(state: WalkState, pauli: NDArray[np.complex128]) -> WalkState:
    """Apply a single-qubit operator to the spin register at every site"""
    return WalkState(state.t, state.amplitudes @ np.asarray(pauli).T)


def walk_states(initial_spin: SpinState, coin: Coin, steps: int) -> Iterator[WalkState]:
    """Yield the walker at t = 0, 1, ..., steps"""
    if steps < 0:
        raise ValueError(f"Number of steps must be non-negative, got {steps}")

    matrix = coin_operator(coin)
    state = WalkState.localized(initial_spin)
    yield state
    for _ in range(steps):
        state = shift_step(coin_step(state, matrix))
        yield state


def evolve(initial_spin: SpinState, coin: Coin, steps: int) -> WalkState:
    """Walker started at the origin after `steps` applications of shift . coin"""
    state = None
    for state in walk_states(initial_spin, coin, steps):
        pass
    logger.debug(f"Evolved {steps} steps, norm drift {abs(state.norm - 1.0):.2e}")
    return state


def position_distribution(state: WalkState) -> NDArray[np.float64]:
    """P(x) over x = -t..t"""
    return np.sum(np.abs(state.amplitudes) ** 2, axis=1)


def raw_moment(state: WalkState, k: int) -> float:
    """Sum_x P(x) x^k"""
    if k < 1:
        raise ValueError(f"Moment order must be >= 1, got {k}")
    probs = position_distribution(state)
    return float(np.sum(probs * state.positions.astype(np.float64) ** k))


def central_moment(state: WalkState, k: int) -> float:
    """Sum_x P(x) (x - mu)^k with mu the mean position"""
    if k < 1:
        raise ValueError(f"Moment order must be >= 1, got {k}")
    probs = position_distribution(state)
    x = state.positions.astype(np.float64)
    mean = np.sum(probs * x)
    return float(np.sum(probs * (x - mean) ** k))


def dense_walk_operator(t: int, coin: Coin) -> NDArray[np.complex128]:
    """
    Explicit one-step walk unitary S.(I x C) on the cyclic lattice [-t, t].

    Basis index is 2 * (x + t) + spin, matching WalkState.amplitudes.ravel().
    A walker started at the origin never wraps within t steps.
    """
    if t < 0:
        raise ValueError(f"Lattice half-width must be non-negative, got {t}")

    n_sites = 2 * t + 1
    eye = np.eye(n_sites)
    move_left = np.roll(eye, -1, axis=0)   # |x> -> |x - 1>
    move_right = np.roll(eye, 1, axis=0)   # |x> -> |x + 1>
    proj_up = np.diag([1.0, 0.0])
    proj_down = np.diag([0.0, 1.0])

    shift = np.kron(move_left, proj_up) + np.kron(move_right, proj_down)
    return shift @ np.kron(eye, coin_operator(coin))

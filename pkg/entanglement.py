"""
Entanglement Measures for Two Walkers
Partial traces and transposes, Hermitian spectra, entropy, negativity and
the small-phase perturbative diagnostics of the reduced density matrix.

Subsystems of the joint state are labelled pos_a, spin_a, pos_b, spin_b.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.special
from numpy.typing import NDArray

from config import ENTANGLEMENT_CONFIG
from gravity_phase import JointState, MassPair, PhaseField

logger = logging.getLogger(__name__)

SUBSYSTEMS = ('pos_a', 'spin_a', 'pos_b', 'spin_b')
PARTY_A = ('pos_a', 'spin_a')
PARTY_B = ('pos_b', 'spin_b')
POSITIONS = ('pos_a', 'pos_b')

Subsystem = Union[str, Iterable[str]]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density operator with an ordered ((label, dim), ...) tensor structure"""
    data: NDArray[np.complex128]
    structure: Tuple[Tuple[str, int], ...]

    def __post_init__(self):
        labels = self.labels
        if len(set(labels)) != len(labels):
            raise ValueError(f"Duplicate subsystem labels in {labels}")
        size = int(np.prod(self.dims))
        if self.data.shape != (size, size):
            raise ValueError(f"Matrix shape {self.data.shape} does not match structure {self.structure}")

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(label for label, _ in self.structure)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(dim for _, dim in self.structure)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.data)))

    def check(self, config=None):
        """Raise ValueError unless Hermitian, unit trace and positive semidefinite"""
        config = config or ENTANGLEMENT_CONFIG
        _check_hermitian(self.data, config['hermitian_tolerance'])
        if abs(self.trace - 1.0) > config['trace_tolerance']:
            raise ValueError(f"Density matrix trace is {self.trace}, expected 1")
        lowest = scipy.linalg.eigvalsh(self.data)[0]
        if lowest < -config['negative_tolerance']:
            raise ValueError(f"Density matrix has negative eigenvalue {lowest:.3e}")


def _check_hermitian(matrix, tolerance):
    deviation = np.max(np.abs(matrix - matrix.conj().T)) if matrix.size else 0.0
    if deviation > tolerance:
        raise ValueError(f"Matrix is not Hermitian (max |A - A^H| = {deviation:.3e})")


def joint_structure(t: int) -> Tuple[Tuple[str, int], ...]:
    n_sites = 2 * t + 1
    return (('pos_a', n_sites), ('spin_a', 2), ('pos_b', n_sites), ('spin_b', 2))


def density_from_state(state: JointState) -> DensityMatrix:
    """|Psi><Psi| on the full (pos_a, spin_a, pos_b, spin_b) space"""
    vector = state.vector
    return DensityMatrix(np.outer(vector, vector.conj()), joint_structure(state.t))


def _as_labels(subsystem: Subsystem) -> Tuple[str, ...]:
    if isinstance(subsystem, str):
        return (subsystem,)
    return tuple(subsystem)


def reduce_density(state: JointState, keep: Subsystem) -> DensityMatrix:
    """Partial trace of |Psi><Psi| over every subsystem not in keep"""
    keep = set(_as_labels(keep))
    unknown = keep - set(SUBSYSTEMS)
    if unknown:
        raise ValueError(f"Unknown subsystem labels {sorted(unknown)}, expected {SUBSYSTEMS}")
    if not keep or keep == set(SUBSYSTEMS):
        raise ValueError(f"Keep-set must be a nonempty proper subset of {SUBSYSTEMS}, got {sorted(keep)}")

    kept = [k for k, label in enumerate(SUBSYSTEMS) if label in keep]
    traced = [k for k, label in enumerate(SUBSYSTEMS) if label not in keep]
    psi = state.amplitudes
    kept_dim = int(np.prod([psi.shape[k] for k in kept]))

    matrix = np.transpose(psi, kept + traced).reshape(kept_dim, -1)
    structure = tuple((SUBSYSTEMS[k], psi.shape[k]) for k in kept)
    return DensityMatrix(matrix @ matrix.conj().T, structure)


def partial_trace(rho: DensityMatrix, keep: Subsystem) -> DensityMatrix:
    """Trace a general density matrix down to the labels in keep (structure order kept)"""
    keep = set(_as_labels(keep))
    unknown = keep - set(rho.labels)
    if unknown:
        raise ValueError(f"Unknown subsystem labels {sorted(unknown)}, structure has {rho.labels}")
    if not keep or keep == set(rho.labels):
        raise ValueError(f"Keep-set must be a nonempty proper subset of {rho.labels}, got {sorted(keep)}")

    n = len(rho.dims)
    rows = list(range(n))
    cols = [k if rho.labels[k] not in keep else n + k for k in range(n)]
    kept = [k for k in range(n) if rho.labels[k] in keep]

    tensor = rho.data.reshape(rho.dims + rho.dims)
    reduced = np.einsum(tensor, rows + cols, kept + [n + k for k in kept])
    structure = tuple(rho.structure[k] for k in kept)
    size = int(np.prod([rho.dims[k] for k in kept]))
    return DensityMatrix(reduced.reshape(size, size), structure)


def partial_transpose(rho: DensityMatrix, subsystem: Subsystem) -> NDArray[np.complex128]:
    """Transpose the row/column indices of the given subsystem(s)"""
    labels = _as_labels(subsystem)
    unknown = [label for label in labels if label not in rho.labels]
    if unknown:
        raise ValueError(f"Unknown subsystem labels {unknown}, structure has {rho.labels}")

    n = len(rho.dims)
    tensor = rho.data.reshape(rho.dims + rho.dims)
    for label in labels:
        k = rho.labels.index(label)
        tensor = np.swapaxes(tensor, k, n + k)
    size = rho.data.shape[0]
    return tensor.reshape(size, size)


def hermitian_spectrum(matrix: NDArray[np.complex128], config=None) -> NDArray[np.float64]:
    """Ascending eigenvalues of a Hermitian matrix"""
    config = config or ENTANGLEMENT_CONFIG
    _check_hermitian(matrix, config['hermitian_tolerance'])
    return scipy.linalg.eigvalsh(matrix)


def entanglement_entropy(rho: DensityMatrix, config=None) -> float:
    """Von Neumann entropy -sum(lambda ln lambda) in nats"""
    config = config or ENTANGLEMENT_CONFIG
    eigenvalues = hermitian_spectrum(rho.data, config)
    if eigenvalues[0] < -config['clamp_warning'] or eigenvalues[-1] > 1.0 + config['clamp_warning']:
        logger.warning(f"Clamping spectrum to [0, 1] (min={eigenvalues[0]:.3e}, max={eigenvalues[-1]:.3e})")
    eigenvalues = np.clip(eigenvalues, 0.0, 1.0)
    eigenvalues = eigenvalues[eigenvalues > config['eigenvalue_floor']]
    return float(np.sum(scipy.special.entr(eigenvalues)))


def negativity(rho: DensityMatrix, subsystem: Subsystem, config=None) -> float:
    """sum(|lambda| - lambda) / 2 over the partial-transpose spectrum"""
    eigenvalues = hermitian_spectrum(partial_transpose(rho, subsystem), config)
    return float(np.sum(np.abs(eigenvalues) - eigenvalues) / 2.0)


def schmidt_coefficients(state: JointState) -> NDArray[np.float64]:
    """Singular values of the (pos_a, spin_a) x (pos_b, spin_b) amplitude matrix"""
    n_sites = 2 * state.t + 1
    matrix = state.amplitudes.reshape(2 * n_sites, 2 * n_sites)
    return scipy.linalg.svdvals(matrix)


def pure_state_negativity(state: JointState) -> float:
    """
    Negativity of the pure joint state across A|B.

    The partial transpose of a pure state has eigenvalues s_k^2 and
    +-s_k s_l (k < l), so the negativity is sum_{k<l} s_k s_l.
    """
    s = schmidt_coefficients(state)
    return float(max((np.sum(s) ** 2 - np.sum(s ** 2)) / 2.0, 0.0))


@dataclass(frozen=True)
class EntanglementReport:
    t: int
    entropy: float
    negativity_full: float
    negativity_spin_traced: float


def entanglement_report(state: JointState, config=None) -> EntanglementReport:
    """Entropy of rho_B, full-state negativity and spin-traced negativity"""
    entropy = entanglement_entropy(reduce_density(state, PARTY_B), config)
    traced = reduce_density(state, POSITIONS)
    report = EntanglementReport(
        t=state.t,
        entropy=entropy,
        negativity_full=pure_state_negativity(state),
        negativity_spin_traced=negativity(traced, 'pos_b', config),
    )
    logger.debug(f"t={report.t}: EE={report.entropy:.6e}, N={report.negativity_full:.6e}, "
                 f"N_traced={report.negativity_spin_traced:.6e}")
    return report


def _check_distributions(P, Q, t):
    expected = 2 * t + 1
    if len(P) != expected or len(Q) != expected:
        raise ValueError(f"Distributions of length {len(P)} and {len(Q)} do not match t={t} ({expected} sites)")


def perturbation_correction(P, Q, field: PhaseField) -> complex:
    """
    sum_{j,k,l} Q_j Q_k P_l (exp(-i (g_lj - g_lk)) - 1).

    l runs over walker A (rows of the field), j and k over walker B. This is
    the first-order shift of the unit eigenvalue of rho_B under the phases.
    """
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    _check_distributions(P, Q, field.t)

    diff = field.g[:, :, None] - field.g[:, None, :]
    # exp(-ix) - 1 without cancellation
    terms = -2.0 * np.sin(diff / 2.0) ** 2 - 1j * np.sin(diff)
    return complex(np.einsum('l,j,k,ljk->', P, Q, Q, terms))


def second_order_eigenvalue_shift(P, Q, field: PhaseField) -> float:
    """
    Estimate of lambda_max(rho_B) - 1 to second order in the phases.

    Adds to perturbation_correction the mixing of the unperturbed
    eigenvector with its orthogonal complement, sum_j Q_j |c_j|^2 - |sum_j Q_j c_j|^2.
    """
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    _check_distributions(P, Q, field.t)

    phases = np.exp(-1j * field.g)
    overlap = phases @ Q
    c = phases.T @ (P * overlap.conj()) - 1.0
    mixing = np.sum(Q * np.abs(c) ** 2) - np.abs(np.sum(Q * c)) ** 2
    return float(perturbation_correction(P, Q, field).real + mixing)


def second_moment_functional(P, Q, t: int, masses: MassPair, form: str = 'variance') -> float:
    """
    Second-moment functional of the interaction durations D_lj = t - max(|l|, |j|).

    form='bracket' gives sin^2(theta_A) sin^2(theta_B) sum_l P_l (sum_j Q_j D_lj)^2,
    the cross terms of the expanded square. form='variance' completes the
    square: E_l Var_Q(D_l) - Var_Q(E_l D), which tracks 1 - lambda_max(rho_B).
    """
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    _check_distributions(P, Q, t)

    sites = np.arange(-t, t + 1)
    l, j = np.meshgrid(sites, sites, indexing='ij')
    durations = (t - np.maximum(np.abs(l), np.abs(j))).astype(np.float64)
    prefactor = np.sin(masses.theta_a) ** 2 * np.sin(masses.theta_b) ** 2

    mean_over_b = durations @ Q
    if form == 'bracket':
        return float(prefactor * (P @ mean_over_b ** 2))
    if form == 'variance':
        within = P @ ((durations ** 2) @ Q - mean_over_b ** 2)
        averaged = P @ durations
        between = Q @ averaged ** 2 - (Q @ averaged) ** 2
        return float(prefactor * (within - between))
    raise ValueError(f"Unknown functional form '{form}', expected 'variance' or 'bracket'")

"""The spin-3/2 unit cell: a center spin coupled to three bond qubits.

The composite space is ordered center (dim 4) first, then bonds 1, 2, 3
(dim 2 each), 32 states in total.
"""
from fractions import Fraction
import math
from typing import Dict, Tuple, Union

import numpy as np
from scipy.linalg import expm

from thermal_cluster import run_log
from thermal_cluster.base import BaseClass
from thermal_cluster.smalldense import (
    DenseHermitian,
    expm_hermitian,
    kron_all,
    spin_matrices,
)

AXES = ("x", "y", "z")
N_BONDS = 3
DEGENERACY_TOL = 1e-9
MIN_FILTER_PROBABILITY = 1e-15

# bond logical |0>, |1> in the physical sigma^z basis (up, down)
BOND_FRAME = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)

# center logical |0~> = |S^z=-3/2>, |1~> = -|S^z=+3/2>
CENTER_FRAME = np.zeros((4, 2), dtype=complex)
CENTER_FRAME[3, 0] = 1
CENTER_FRAME[0, 1] = -1


class FilterProbabilityError(ZeroDivisionError):
    """Raised when a POVM outcome is too unlikely to normalise."""

    pass


def _axis_rotation(spin_ops, axis: str) -> np.ndarray:
    """The rotation carrying the z axis onto the given axis."""
    if axis == "x":
        return expm(-0.5j * math.pi * spin_ops.Sy.entries)
    if axis == "y":
        return expm(0.5j * math.pi * spin_ops.Sx.entries)
    return np.eye(spin_ops.dim, dtype=complex)


def _check_axis(outcome: str, allowed: Tuple[str, ...] = AXES):
    if outcome not in allowed:
        msg = f"POVM outcome must be one of {allowed}, got {outcome!r}"
        run_log.error(msg)
        raise ValueError(msg)


class GhzReference(BaseClass):
    """The four-qubit GHZ state (|0~+++> + |1~--->)/sqrt(2).

    Qubit 0 is the center and the most significant bit of the
    16-dim index.

    Attributes
    ----------
    state : np.ndarray
        Unit norm vector of dimension 16.
    basis_map : np.ndarray
        The (4, 2) embedding of the center qubit into the spin-3/2 space.
    """

    def __init__(self):
        plus = np.array([1, 1], dtype=complex) / math.sqrt(2)
        minus = np.array([1, -1], dtype=complex) / math.sqrt(2)
        zero = np.array([1, 0], dtype=complex)
        one = np.array([0, 1], dtype=complex)
        state = np.kron(np.kron(np.kron(zero, plus), plus), plus) + np.kron(
            np.kron(np.kron(one, minus), minus), minus
        )
        self.state = state / math.sqrt(2)
        self.basis_map = CENTER_FRAME.copy()

    def stabilizers(self) -> Dict[str, np.ndarray]:
        """The dense generators X_c Z1 Z2 Z3 and Z_c X_b.

        Returns
        -------
        dict
            Generator name to 16x16 matrix.
        """
        i2 = np.eye(2)
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        z = np.diag([1.0, -1.0]).astype(complex)
        generators = {"XcZ1Z2Z3": np.kron(np.kron(np.kron(x, z), z), z)}
        for bond in range(1, N_BONDS + 1):
            factors = [z] + [x if b == bond else i2 for b in range(1, N_BONDS + 1)]
            generators[f"ZcX{bond}"] = np.kron(
                np.kron(np.kron(factors[0], factors[1]), factors[2]), factors[3]
            )
        return generators

    def fidelity(self, sigma: DenseHermitian) -> float:
        """<GHZ| sigma |GHZ>."""
        return sigma.expectation(self.state)

    def to_dict(self, exclusions: list = []) -> dict:
        return dict(state=[complex(v) for v in self.state])


class UnitCell(BaseClass):
    """
    The unit cell Hamiltonian H = delta S.(I1 + I2 + I3) of a spin-3/2
    center coupled to three spin-1/2 bond qubits, with its Casimir form
    delta/2 (T^2 - S^2 - I^2) and the axis POVM
    F^alpha = ((S^alpha)^2 - 1/4)/sqrt(6).

    Attributes
    ----------
    delta : float
        The energy scale.
    hamiltonian : DenseHermitian
        The dot product form, dim 32.
    casimir_hamiltonian : DenseHermitian
        The Casimir form, dim 32.
    povm : dict
        F^x, F^y, F^z as DenseHermitian of dim 32.
    reference : GhzReference
        The target GHZ state of the z outcome.
    """

    def __init__(self, delta: float = 1.0):
        if not delta > 0:
            msg = f"delta must be positive, got {delta}"
            run_log.error(msg)
            raise ValueError(msg)
        self.delta = float(delta)
        self._center = spin_matrices(Fraction(3, 2))
        self._bond = spin_matrices(Fraction(1, 2))
        self.hamiltonian = self._dot_product_form()
        self.casimir_hamiltonian = self._casimir_form()
        self.povm = {axis: self._povm_element(axis) for axis in AXES}
        self.reference = GhzReference()
        self._spectrum: Union[np.ndarray, None] = None

    def _embed(self, operator: DenseHermitian, site: int) -> DenseHermitian:
        """Places a single site operator in the 32-dim space, site 0 is
        the center and sites 1..3 the bonds."""
        factors = [DenseHermitian.identity(4)] + [
            DenseHermitian.identity(2) for _ in range(N_BONDS)
        ]
        factors[site] = operator
        return kron_all(*factors)

    def _total_bond(self, axis: str) -> DenseHermitian:
        total = self._embed(self._bond.component(axis), 1)
        for site in range(2, N_BONDS + 1):
            total = total + self._embed(self._bond.component(axis), site)
        return total

    def _dot_product_form(self) -> DenseHermitian:
        terms = np.zeros((32, 32), dtype=complex)
        for axis in AXES:
            terms = terms + (
                self._embed(self._center.component(axis), 0) @ self._total_bond(axis)
            )
        return DenseHermitian(self.delta * terms)

    def _casimir_form(self) -> DenseHermitian:
        t_squared = np.zeros((32, 32), dtype=complex)
        s_squared = np.zeros((32, 32), dtype=complex)
        i_squared = np.zeros((32, 32), dtype=complex)
        for axis in AXES:
            s_axis = self._embed(self._center.component(axis), 0)
            i_axis = self._total_bond(axis)
            t_axis = s_axis + i_axis
            t_squared += t_axis @ t_axis
            s_squared += s_axis @ s_axis
            i_squared += i_axis @ i_axis
        return DenseHermitian(self.delta / 2 * (t_squared - s_squared - i_squared))

    def _povm_element(self, axis: str) -> DenseHermitian:
        s_axis = self._center.component(axis)
        element = (s_axis @ s_axis - np.eye(4) / 4) / math.sqrt(6)
        return self._embed(DenseHermitian(element), 0)

    def frame(self, outcome: str) -> np.ndarray:
        """The isometry from the 16-dim qubit space onto the support
        of the filtered state of the given outcome.

        The outcome frame is the z frame rotated by the joint spin
        rotation carrying z onto the outcome axis, acting on the center
        only; the bond frame is shared by all outcomes.

        Parameters
        ----------
        outcome : str
            x, y or z.

        Returns
        -------
        np.ndarray
            A (32, 16) matrix with orthonormal columns.
        """
        _check_axis(outcome)
        center = _axis_rotation(self._center, outcome) @ CENTER_FRAME
        bonds = BOND_FRAME
        for _ in range(N_BONDS - 1):
            bonds = np.kron(bonds, BOND_FRAME)
        return np.kron(center, bonds)

    def bond_correction(self, outcome: str) -> np.ndarray:
        """The single bond unitary undone by local_correction.

        Returns
        -------
        np.ndarray
            u = W^dagger r W, where r is the spin-1/2 rotation carrying
            z onto the outcome axis and W is the bond frame.
        """
        _check_axis(outcome)
        rotation = _axis_rotation(self._bond, outcome)
        return BOND_FRAME.conj().T @ rotation @ BOND_FRAME

    def spectrum(self) -> np.ndarray:
        """Ascending eigenvalues of the Hamiltonian."""
        if self._spectrum is None:
            self._spectrum = self.hamiltonian.eigenvalues()
        return self._spectrum

    @property
    def ground_energy(self) -> float:
        return float(self.spectrum()[0])

    @property
    def gap(self) -> float:
        """Separation of the ground level from the next distinct level."""
        values = self.spectrum()
        excited = values[values > values[0] + DEGENERACY_TOL * self.delta]
        return float(excited[0] - values[0])

    @property
    def ground_multiplicity(self) -> int:
        values = self.spectrum()
        return int(np.sum(values <= values[0] + DEGENERACY_TOL * self.delta))

    def ground_state(self) -> np.ndarray:
        """The (unique) ground state vector of dimension 32."""
        _, vectors = self.hamiltonian.eigh()
        return vectors[:, 0]

    def to_dict(self, exclusions: list = []) -> dict:
        return dict(
            delta=self.delta,
            ground_energy=self.ground_energy,
            gap=self.gap,
        )


def build_unit_cell(delta: float = 1.0) -> UnitCell:
    """Builds the 32-dim unit cell Hamiltonian in both forms.

    Parameters
    ----------
    delta : float
        The energy scale, must be positive.

    Returns
    -------
    UnitCell
        The cell with dot product and Casimir Hamiltonians and the POVM.
    """
    cell = UnitCell(delta)
    run_log.debug(
        f"unit cell built with delta={cell.delta}, ground energy "
        f"{cell.ground_energy:.12g}, gap {cell.gap:.12g}"
    )
    return cell


def thermal_state(cell: UnitCell, beta: float) -> DenseHermitian:
    """The Gibbs state exp(-beta H)/Z.

    Parameters
    ----------
    cell : UnitCell
        The unit cell.
    beta : float
        Inverse temperature in units of 1/energy, finite and >= 0.

    Returns
    -------
    DenseHermitian
        Unit trace, positive semidefinite, dim 32.
    """
    if not math.isfinite(beta) or beta < 0:
        msg = f"beta must be finite and non-negative, got {beta}"
        run_log.error(msg)
        raise ValueError(msg)
    shift = DenseHermitian.identity(32) * cell.ground_energy
    weights = expm_hermitian(cell.hamiltonian - shift, -beta)
    return weights * (1.0 / weights.trace())


def povm_filter(
    cell: UnitCell, rho: DenseHermitian, outcome: str
) -> Tuple[DenseHermitian, float]:
    """Applies the POVM element F^alpha and reduces to the qubit space.

    Parameters
    ----------
    cell : UnitCell
        The unit cell.
    rho : DenseHermitian
        A 32-dim state.
    outcome : str
        x, y or z.

    Returns
    -------
    sigma : DenseHermitian
        The normalised 16-dim filtered state in the outcome frame.
    probability : float
        tr(F rho F^dagger).

    Raises
    ------
    FilterProbabilityError
        If the outcome probability is below 1e-15.
    """
    _check_axis(outcome)
    filtered = rho.sandwich(cell.povm[outcome].entries)
    probability = filtered.trace()
    if probability < MIN_FILTER_PROBABILITY:
        msg = f"POVM outcome {outcome} has probability {probability:.3e}"
        run_log.error(msg)
        raise FilterProbabilityError(msg)
    sigma = filtered.sandwich(cell.frame(outcome).conj().T)
    return sigma * (1.0 / probability), probability


def local_correction(sigma: DenseHermitian, outcome: str, cell: UnitCell) -> DenseHermitian:
    """Maps the filtered state of outcome x or y onto the z outcome
    frame with one fixed unitary per particle.

    The center is left untouched and every bond receives u^dagger,
    see UnitCell.bond_correction.

    Parameters
    ----------
    sigma : DenseHermitian
        The 16-dim filtered state.
    outcome : str
        x, y or z (z is the identity).
    cell : UnitCell
        The unit cell that fixes the frames.

    Returns
    -------
    DenseHermitian
        The corrected 16-dim state.
    """
    _check_axis(outcome)
    if outcome == "z":
        return sigma
    undo = cell.bond_correction(outcome).conj().T
    operator = np.eye(2, dtype=complex)
    for _ in range(N_BONDS):
        operator = np.kron(operator, undo)
    return sigma.sandwich(operator)

"""Z-type Pauli error channel of the filtered thermal GHZ state."""
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from thermal_cluster import run_log
from thermal_cluster.base import BaseClass
from thermal_cluster.smalldense import DenseHermitian
from thermal_cluster.unitcell import (
    GhzReference,
    UnitCell,
    local_correction,
    povm_filter,
    thermal_state,
)

QUBIT_LABELS = ("c", "1", "2", "3")
CENTER = 1
BONDS = (2, 4, 8)
TRACE_TOL = 1e-10
NEGATIVE_TOL = 1e-12
CURVE_COLUMNS = [
    "T_over_delta",
    "q1",
    "q2",
    "q3",
    "residual_weight",
    "coherence_residual",
]

_PAULI_Z = np.diag([1.0, -1.0]).astype(complex)


class ChannelExtractionError(ValueError):
    """Raised when a state cannot be read as a Z-Pauli channel."""

    pass


def z_string_operator(mask: int, n_qubits: int) -> np.ndarray:
    """The dense Z-string with bit i of mask acting on qubit i.

    Qubit 0 is the leftmost tensor factor.
    """
    operator = np.eye(1, dtype=complex)
    for qubit in range(n_qubits):
        factor = _PAULI_Z if mask >> qubit & 1 else np.eye(2, dtype=complex)
        operator = np.kron(operator, factor)
    return operator


class ZPauliChannel(BaseClass):
    """A probability for each Z-string on a labelled set of qubits.

    Attributes
    ----------
    qubits : list
        Qubit labels, bit i of a mask refers to qubits[i].
    probs : dict
        Mask to probability.
    coherence_residual : float
        Largest off diagonal element in the displaced GHZ basis.
    """

    def __init__(
        self,
        qubits: Sequence[str],
        probs: Dict[int, float],
        coherence_residual: float = 0.0,
    ):
        self.qubits = list(qubits)
        self.probs = dict(probs)
        self.coherence_residual = float(coherence_residual)

    def label(self, mask: int) -> str:
        """A readable name such as 'ZcZ2', 'I' for the identity."""
        names = [f"Z{q}" for i, q in enumerate(self.qubits) if mask >> i & 1]
        return "".join(names) if names else "I"

    def total(self) -> float:
        return float(sum(self.probs.values()))

    def reconstruct(self, reference: GhzReference) -> DenseHermitian:
        """sum_P probs[P] P|GHZ><GHZ|P."""
        dim = 2 ** len(self.qubits)
        total = np.zeros((dim, dim), dtype=complex)
        for mask, prob in self.probs.items():
            vector = z_string_operator(mask, len(self.qubits)) @ reference.state
            total += prob * np.outer(vector, vector.conj())
        return DenseHermitian(total, check=False)

    def to_frame(self) -> pd.DataFrame:
        """One row per Z-string, ordered by mask."""
        masks = sorted(self.probs)
        return pd.DataFrame(
            dict(
                z_string=[self.label(mask) for mask in masks],
                mask=masks,
                probability=[self.probs[mask] for mask in masks],
            )
        )

    def to_dict(self, exclusions: list = []) -> dict:
        return dict(
            qubits=self.qubits,
            probs={self.label(mask): prob for mask, prob in sorted(self.probs.items())},
            coherence_residual=self.coherence_residual,
        )


class QTriple(BaseClass):
    """The error probabilities of the thermal GHZ channel at one
    temperature.

    Attributes
    ----------
    temperature : float
        T/delta.
    q1 : float
        Center phase flip.
    q2 : float
        Bond phase flip (mean over the bonds).
    q3 : float
        Joint center and bond phase flip (mean over the bonds).
    residual_weight : float
        Probability of every other non identity Z-string.
    coherence_residual : float
        Taken from the channel the triple was read from.
    """

    def __init__(
        self,
        temperature: float,
        q1: float,
        q2: float,
        q3: float,
        residual_weight: float = 0.0,
        coherence_residual: float = 0.0,
    ):
        self.temperature = float(temperature)
        self.q1 = float(q1)
        self.q2 = float(q2)
        self.q3 = float(q3)
        self.residual_weight = float(residual_weight)
        self.coherence_residual = float(coherence_residual)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.q1, self.q2, self.q3)

    def row(self) -> list:
        return [
            self.temperature,
            self.q1,
            self.q2,
            self.q3,
            self.residual_weight,
            self.coherence_residual,
        ]


def _displaced_states(reference: GhzReference) -> np.ndarray:
    """Columns P|GHZ> for the 16 Z-strings, ordered by mask."""
    n_qubits = len(QUBIT_LABELS)
    return np.stack(
        [
            z_string_operator(mask, n_qubits) @ reference.state
            for mask in range(2**n_qubits)
        ],
        axis=1,
    )


def extract_z_channel(sigma: DenseHermitian, ref: GhzReference) -> ZPauliChannel:
    """Reads the Z-Pauli channel of a 16-dim state relative to the
    reference GHZ state.

    The 16 displaced states P|GHZ> are orthonormal, so the diagonal
    of sigma in that basis is an exact probability distribution.

    Parameters
    ----------
    sigma : DenseHermitian
        A unit trace 16-dim state.
    ref : GhzReference
        The reference state.

    Returns
    -------
    ZPauliChannel
        The 16 probabilities and the largest coherence.

    Raises
    ------
    ChannelExtractionError
        If sigma is not unit trace or has a negative diagonal element.
    """
    if sigma.dim != 16:
        msg = f"a GHZ channel needs a 16-dim state, got {sigma.dim}"
        run_log.error(msg)
        raise ChannelExtractionError(msg)
    if abs(sigma.trace() - 1) > TRACE_TOL:
        msg = f"state trace {sigma.trace():.12g} is not 1"
        run_log.error(msg)
        raise ChannelExtractionError(msg)
    basis = _displaced_states(ref)
    in_basis = basis.conj().T @ sigma.entries @ basis
    diagonal = np.real(np.diag(in_basis))
    if diagonal.min() < -NEGATIVE_TOL:
        msg = f"negative Z-string probability {diagonal.min():.3e}"
        run_log.error(msg)
        raise ChannelExtractionError(msg)
    off_diagonal = np.abs(in_basis - np.diag(np.diag(in_basis)))
    probs = {mask: max(float(p), 0.0) for mask, p in enumerate(diagonal)}
    return ZPauliChannel(QUBIT_LABELS, probs, float(off_diagonal.max()))


def thermal_channel(cell: UnitCell, delta_beta: float, outcome: str = "z") -> ZPauliChannel:
    """The channel of the filtered and corrected thermal state.

    Parameters
    ----------
    cell : UnitCell
        The unit cell.
    delta_beta : float
        The dimensionless inverse temperature delta*beta.
    outcome : str, optional
        The POVM outcome, by default z.

    Returns
    -------
    ZPauliChannel
        The 16 Z-string probabilities.
    """
    rho = thermal_state(cell, delta_beta / cell.delta)
    sigma, _ = povm_filter(cell, rho, outcome)
    sigma = local_correction(sigma, outcome, cell)
    return extract_z_channel(sigma, cell.reference)


def triple_from_channel(channel: ZPauliChannel, temperature: float) -> QTriple:
    """Groups the 16 probabilities into q1, q2, q3 and the residual."""
    probs = channel.probs
    q1 = probs[CENTER]
    per_bond = [probs[bond] for bond in BONDS]
    per_joint = [probs[CENTER | bond] for bond in BONDS]
    q2 = float(np.mean(per_bond))
    q3 = float(np.mean(per_joint))
    family = {0, CENTER, *BONDS, *(CENTER | bond for bond in BONDS)}
    residual = sum(p for mask, p in probs.items() if mask not in family)
    run_log.debug(
        f"T/delta={temperature:.6g}: bond spread q2 {np.ptp(per_bond):.3e}, "
        f"q3 {np.ptp(per_joint):.3e}, q2-q3 {q2 - q3:.3e}"
    )
    return QTriple(temperature, q1, q2, q3, residual, channel.coherence_residual)


def q_of_beta(cell: UnitCell, delta_beta: float) -> QTriple:
    """The error probabilities at inverse temperature delta*beta.

    Parameters
    ----------
    cell : UnitCell
        The unit cell.
    delta_beta : float
        Positive and finite.

    Returns
    -------
    QTriple
        With temperature = 1/(delta*beta).
    """
    if not delta_beta > 0 or not math.isfinite(delta_beta):
        msg = f"delta*beta must be positive and finite, got {delta_beta}"
        run_log.error(msg)
        raise ValueError(msg)
    channel = thermal_channel(cell, delta_beta)
    return triple_from_channel(channel, 1.0 / delta_beta)


def q_of_temperature(cell: UnitCell, T_over_delta: float) -> QTriple:
    """The error probabilities q1, q2, q3 at temperature T/delta.

    Parameters
    ----------
    cell : UnitCell
        The unit cell.
    T_over_delta : float
        In (0, 2].

    Returns
    -------
    QTriple
        The probabilities and the residual weight.
    """
    if not 0 < T_over_delta <= 2:
        msg = f"T/delta must lie in (0, 2], got {T_over_delta}"
        run_log.error(msg)
        raise ValueError(msg)
    channel = thermal_channel(cell, 1.0 / T_over_delta)
    return triple_from_channel(channel, T_over_delta)


def emit_curves(cell: UnitCell, grid: List[float]) -> pd.DataFrame:
    """The error probabilities over a temperature grid.

    Parameters
    ----------
    cell : UnitCell
        The unit cell.
    grid : list
        T/delta values in (0, 2].

    Returns
    -------
    pd.DataFrame
        One row per temperature with the curve columns.
    """
    triples = [q_of_temperature(cell, t) for t in grid]
    for before, after in zip(triples, triples[1:]):
        if after.temperature > before.temperature and after.q1 < before.q1:
            run_log.warning(
                f"q1 decreases between T/delta={before.temperature} "
                f"and {after.temperature}"
            )
    run_log.info(f"evaluated error curves on {len(grid)} temperatures")
    return pd.DataFrame([t.row() for t in triples], columns=CURVE_COLUMNS)

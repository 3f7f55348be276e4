"""Merging thermal GHZ states by local Pauli measurements.

Two four-qubit GHZ states are fused by measuring Y on the consumed
center and Y Z, Z Y on the two linking bond qubits. The first order
Z channel of the result is derived exactly, and a chain of k centers
generalises the gadget to m-connected cluster states.
"""
import math
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from thermal_cluster import run_log
from thermal_cluster.base import BaseClass
from thermal_cluster.stabsim import (
    AffineProb,
    FirstOrderChannel,
    MeasurementRecord,
    PauliString,
    StabilizerState,
    compose_first_order,
    ghz_state,
    propagate_channel,
    propagate_distribution,
)

MAX_CHAIN = 8
GHZ5_OUTPUT = ("1", "2", "6", "7", "8")
# surviving GHZ: center 6, bonds 7, 8 and link 5; consumed GHZ: center 3,
# bonds 1, 2 and link 4
GHZ5_SURVIVING = ("6", ("7", "8", "5"))
GHZ5_CONSUMED = ("3", ("1", "2", "4"))
GHZ5_MEASUREMENTS = (
    ({"3": "Y"}, "m1"),
    ({"4": "Y", "5": "Z"}, "m2"),
    ({"4": "Z", "5": "Y"}, "m3"),
)

Q1, Q2, Q3 = AffineProb(0, 1), AffineProb(0, 0, 1), AffineProb(0, 0, 0, 1)

E5_REFERENCE: Dict[Tuple[str, ...], AffineProb] = {
    ("6",): Q1.scale(2),
    **{(i,): Q2 for i in ("1", "2", "7", "8")},
    **{(i, "6"): Q3 for i in ("1", "2", "7", "8")},
    ("1", "2"): Q2 + Q3,
    ("1", "2", "6"): Q2 + Q3,
}


class ChainLengthError(ValueError):
    """Raised for a chain length outside 1..8."""

    pass


class FidelityLawError(ValueError):
    """Raised when the fidelity law is used outside (m-2) < 1/q1."""

    pass


def e4_channel(center: str, bonds: Sequence[str]) -> FirstOrderChannel:
    """The symbolic thermal GHZ channel: q1 on the center, q2 on each
    bond and q3 on each center and bond pair.

    Parameters
    ----------
    center : str
        Center qubit label.
    bonds : Sequence[str]
        Bond qubit labels.

    Returns
    -------
    FirstOrderChannel
        With identity coefficient 1 - q1 - n q2 - n q3.
    """
    terms: Dict[Tuple[str, ...], AffineProb] = {(center,): Q1}
    for bond in bonds:
        terms[(bond,)] = Q2
        terms[(center, bond)] = Q3
    return FirstOrderChannel.from_letters([center, *bonds], terms)


class MergedChannel(BaseClass):
    """A first order channel produced by a merge.

    Attributes
    ----------
    output_qubits : list
        The surviving labels.
    channel : FirstOrderChannel
        Z strings over the output qubits with exact coefficients.
    source : str
        'ghz5' or 'chain(k)'.
    state : StabilizerState
        The output stabilizer state in the all zero outcome frame.
    record : MeasurementRecord
        The measurements that produced it.
    """

    def __init__(
        self,
        channel: FirstOrderChannel,
        source: str,
        record: Optional[MeasurementRecord] = None,
    ):
        self.channel = channel
        self.output_qubits = list(channel.labels)
        self.source = source
        self.record = record
        self.state: Optional[StabilizerState] = record.output if record else None

    @property
    def terms(self) -> Dict[int, AffineProb]:
        return self.channel.terms

    def coefficient(self, *qubits: str) -> AffineProb:
        return self.channel.coefficient(*qubits)

    def total(self) -> AffineProb:
        return self.channel.total()

    def fidelity(self) -> AffineProb:
        """The identity coefficient."""
        return self.channel.terms[0]

    def to_dict(self, exclusions: list = []) -> dict:
        dump = dict(
            source=self.source,
            output_qubits=self.output_qubits,
            terms=self.channel.to_dict()["terms"],
            normalization=str(self.total()),
        )
        if self.state is not None:
            dump["stabilizers"] = self.state.canonical_strings()
        return dump


def ghz5_record(
    surviving: Tuple[str, Sequence[str]] = GHZ5_SURVIVING,
    consumed: Tuple[str, Sequence[str]] = GHZ5_CONSUMED,
    measurements: Sequence[Tuple[Mapping[str, str], str]] = GHZ5_MEASUREMENTS,
) -> MeasurementRecord:
    """The three merge measurements on two GHZ states.

    The qubit roles can be overridden to test other labellings.

    Returns
    -------
    MeasurementRecord
        With the measured qubits traced out and the output register
        ordered by label.
    """
    state = ghz_state(*surviving).tensor(ghz_state(*consumed))
    record = MeasurementRecord(state)
    measured = set()
    for ops, var in measurements:
        record.measure(ops, var)
        measured |= set(ops)
    kept = sorted(label for label in state.labels if label not in measured)
    record.trace_out(measured, order=kept)
    return record


def derive_e5() -> MergedChannel:
    """The exact first order channel of the five-qubit merged GHZ state.

    Two symbolic thermal GHZ channels are composed and every term is
    pushed through the merge measurements.

    Returns
    -------
    MergedChannel
        Terms over the qubits 1, 2, 6, 7, 8.
    """
    record = ghz5_record()
    incoming = compose_first_order(
        e4_channel(GHZ5_SURVIVING[0], GHZ5_SURVIVING[1]),
        e4_channel(GHZ5_CONSUMED[0], GHZ5_CONSUMED[1]),
    )
    merged = MergedChannel(propagate_channel(record, incoming), "ghz5", record)
    run_log.info(
        "five-qubit merge channel derived with stabilizers "
        + ", ".join(merged.state.canonical_strings())
    )
    return merged


def compare_with_reference(
    merged: MergedChannel, reference: Mapping[Tuple[str, ...], AffineProb] = E5_REFERENCE
) -> Dict[str, bool]:
    """Checks every coefficient against the reference channel.

    Returns
    -------
    dict
        Z string name to exact agreement, identity included.
    """
    channel = merged.channel
    expected = FirstOrderChannel.from_letters(channel.labels, reference)
    masks = sorted(set(expected.terms) | set(channel.terms))
    return {
        channel.letters(mask): channel.terms.get(mask, AffineProb())
        == expected.terms.get(mask, AffineProb())
        for mask in masks
    }


def chain_labels(k: int) -> List[Tuple[str, Tuple[str, str, str]]]:
    """Center and bond labels of a chain of k centers.

    The first center has outer bonds o1, o2 and link l+, interior
    centers l-, o1, l+ and the last l-, o1, o2. A single center has
    three outer bonds.
    """
    if k == 1:
        return [("c1", ("c1.o1", "c1.o2", "c1.o3"))]
    cells = [("c1", ("c1.o1", "c1.o2", "c1.l+"))]
    for j in range(2, k):
        cells.append((f"c{j}", (f"c{j}.l-", f"c{j}.o1", f"c{j}.l+")))
    cells.append((f"c{k}", (f"c{k}.l-", f"c{k}.o1", f"c{k}.o2")))
    return cells


def chain_record(k: int) -> MeasurementRecord:
    """The merge measurements at every junction of a chain.

    Junction j consumes center c(j+1) into the growing GHZ state
    of c1, with the link c(j+1).l- in the consumed bond role and
    c(j).l+ in the surviving bond role.
    """
    cells = chain_labels(k)
    state = ghz_state(*cells[0])
    for center, bonds in cells[1:]:
        state = state.tensor(ghz_state(center, bonds))
    record = MeasurementRecord(state)
    measured: List[str] = []
    for j in range(1, k):
        consumed, link, surviving_link = f"c{j + 1}", f"c{j + 1}.l-", f"c{j}.l+"
        base = 3 * (j - 1)
        record.measure({consumed: "Y"}, f"m{base + 1}")
        record.measure({link: "Y", surviving_link: "Z"}, f"m{base + 2}")
        record.measure({link: "Z", surviving_link: "Y"}, f"m{base + 3}")
        measured += [consumed, link, surviving_link]
    record.trace_out(measured)
    return record


def derive_chain(k: int) -> MergedChannel:
    """The first order channel of a chain of k thermal GHZ states.

    Parameters
    ----------
    k : int
        Number of centers, 1 to 8.

    Returns
    -------
    MergedChannel
        Terms over the k + 3 surviving qubits, the output state is the
        (k+3)-qubit GHZ state on center c1.

    Raises
    ------
    ChainLengthError
        If k is outside 1..8.
    """
    if isinstance(k, bool) or not isinstance(k, int) or not 1 <= k <= MAX_CHAIN:
        msg = f"chain length must be an integer in 1..{MAX_CHAIN}, got {k!r}"
        run_log.error(msg)
        raise ChainLengthError(msg)
    record = chain_record(k)
    incoming = None
    for center, bonds in chain_labels(k):
        cell = e4_channel(center, bonds)
        incoming = cell if incoming is None else compose_first_order(incoming, cell)
    merged = MergedChannel(propagate_channel(record, incoming), f"chain({k})", record)
    run_log.debug(
        f"chain of {k} centers: center phase weight {merged.coefficient('c1')}, "
        f"fidelity {merged.fidelity()}"
    )
    return merged


def total_variation(a: Mapping[int, float], b: Mapping[int, float]) -> float:
    """Half the l1 distance between two distributions over masks."""
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(key, 0.0) - b.get(key, 0.0)) for key in keys)


def product_distribution(
    first: Mapping[int, float], second: Mapping[int, float], shift: int
) -> Dict[int, float]:
    """The joint distribution of independent channels, second shifted
    by shift bits."""
    return {
        mask_a | mask_b << shift: p_a * p_b
        for mask_a, p_a in first.items()
        for mask_b, p_b in second.items()
        if p_a * p_b > 0
    }


def merge_distribution_exact(
    cell_channel: Mapping[int, float], record: Optional[MeasurementRecord] = None
) -> Dict[int, float]:
    """Pushes the full numeric channel of two cells through the merge,
    to all orders.

    Parameters
    ----------
    cell_channel : Mapping[int, float]
        The 16 Z string probabilities of one cell, bit 0 the center
        and bits 1..3 the bonds.
    record : MeasurementRecord, optional
        The merge, by default the five-qubit merge.

    Returns
    -------
    dict
        Probabilities over the output register.
    """
    record = record or ghz5_record()
    joint = product_distribution(cell_channel, cell_channel, 4)
    return propagate_distribution(record, joint)


def simulate_merge_dense(
    cell_channel: Mapping[int, float], record: Optional[MeasurementRecord] = None
) -> Dict[int, float]:
    """Simulates the merge of two noisy GHZ states with dense vectors.

    Parameters
    ----------
    cell_channel : Mapping[int, float]
        The 16 Z string probabilities of one cell.
    record : MeasurementRecord, optional
        The merge, by default the five-qubit merge.

    Returns
    -------
    dict
        Probabilities over the output register.
    """
    record = record or ghz5_record()
    return simulate_distribution_dense(record, product_distribution(cell_channel, cell_channel, 4))


def simulate_distribution_dense(
    record: MeasurementRecord, distribution: Mapping[int, float]
) -> Dict[int, float]:
    """Dense counterpart of propagate_distribution.

    Every Z string of the input distribution is applied to the ideal
    state, the measurements are post-selected on the all zero outcomes,
    the measured qubits are traced out and the result is read in the
    displaced basis of the ideal output state.

    Parameters
    ----------
    record : MeasurementRecord
        The measurements, at most 8 input qubits.
    distribution : Mapping[int, float]
        Probability of each Z mask over the input register.

    Returns
    -------
    dict
        Probabilities over the output register.
    """
    initial = record.initial
    n_in = initial.n
    if n_in > 8:
        msg = f"dense merge simulation is limited to 8 qubits, got {n_in}"
        run_log.error(msg)
        raise ValueError(msg)
    dim = 2**n_in
    projector = np.eye(dim, dtype=complex)
    for pauli, _, _ in record.measurements:
        projector = projector @ (np.eye(dim) + pauli.dense(n_in)) / 2
    ideal = initial.state_vector()
    kept = [initial.labels.index(label) for label in record.kept]
    traced = [i for i in range(n_in) if i not in kept]
    n_out = len(kept)
    sigma = np.zeros((2**n_out, 2**n_out), dtype=complex)
    for mask, prob in distribution.items():
        vector = projector @ (PauliString.z_string(mask).dense(n_in) @ ideal)
        tensor = vector.reshape([2] * n_in).transpose(kept + traced)
        block = tensor.reshape(2**n_out, 2 ** (n_in - n_out))
        sigma += prob * block @ block.conj().T
    sigma /= np.real(np.trace(sigma))
    target = record.output.state_vector()
    probs = {}
    for mask in range(2**n_out):
        displaced = PauliString.z_string(mask).dense(n_out) @ target
        probs[mask] = float(np.real(displaced.conj() @ sigma @ displaced))
    return probs


class FidelityLaw(BaseClass):
    """F_m = 1 - (m-2) q1 for an m-connected cluster.

    Attributes
    ----------
    m : int
        Connectivity.
    beta : float
        delta*beta.
    q1 : float
        Center phase flip probability at beta.
    F : float
        The fidelity.
    """

    def __init__(self, m: int, beta: float, q1: float, F: float):
        self.m = m
        self.beta = beta
        self.q1 = q1
        self.F = F


class BetaShift(BaseClass):
    """Comparison of F_m at beta + ln(m-2) with F_4 at beta."""

    def __init__(self, m: int, beta: float, beta_shifted: float, F_m_shifted: float, F_4_base: float):
        self.m = m
        self.beta = beta
        self.beta_shifted = beta_shifted
        self.F_m_shifted = F_m_shifted
        self.F_4_base = F_4_base
        self.gap = abs(F_m_shifted - F_4_base)

    def row(self) -> list:
        return [self.m, self.beta, self.beta_shifted, self.F_m_shifted, self.F_4_base, self.gap]


def fidelity_law(m: int, beta: float, q1_of_beta: Callable[[float], float]) -> FidelityLaw:
    """The fidelity of an m-connected cluster built from m-2 centers.

    Parameters
    ----------
    m : int
        Connectivity, at least 3.
    beta : float
        delta*beta.
    q1_of_beta : Callable
        The center phase flip probability as a function of delta*beta.

    Returns
    -------
    FidelityLaw
        F = 1 - (m-2) q1(beta).

    Raises
    ------
    FidelityLawError
        If m < 3 or the law is used outside (m-2) < 1/q1.
    """
    if m < 3:
        msg = f"connectivity m must be at least 3, got {m}"
        run_log.error(msg)
        raise FidelityLawError(msg)
    q1 = float(q1_of_beta(beta))
    if (m - 2) * q1 >= 1:
        msg = (
            f"the fidelity law assumes (m-2) < 1/q1, got m={m} with "
            f"q1={q1:.6g} at delta*beta={beta}"
        )
        run_log.error(msg)
        raise FidelityLawError(msg)
    return FidelityLaw(m, beta, q1, 1 - (m - 2) * q1)


def beta_shift_check(m: int, beta: float, q1_of_beta: Callable[[float], float]) -> BetaShift:
    """Evaluates F_m at delta*beta + ln(m-2) against F_4 at delta*beta.

    Parameters
    ----------
    m : int
        Connectivity, at least 3.
    beta : float
        delta*beta, at least 5.
    q1_of_beta : Callable
        The center phase flip probability as a function of delta*beta.

    Returns
    -------
    BetaShift
        The two fidelities and their gap.
    """
    if m < 3 or beta < 5:
        msg = f"the inverse temperature shift needs m >= 3 and delta*beta >= 5, got m={m}, {beta}"
        run_log.error(msg)
        raise FidelityLawError(msg)
    shifted = beta + math.log(m - 2)
    f_m = fidelity_law(m, shifted, q1_of_beta).F
    f_4 = 1 - float(q1_of_beta(beta))
    return BetaShift(m, beta, shifted, f_m, f_4)

"""Stabilizer states with symbolic measurement signs and the
propagation of Z-type Pauli channels through Pauli measurements.

A Pauli string is stored as i^k X^x Z^z with one bit per qubit in the
x and z masks; bit i refers to the i-th label of the state it acts on.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from thermal_cluster import run_log
from thermal_cluster.base import BaseClass

MAX_QUBITS = 32
MAX_DENSE_QUBITS = 8

Rational = Union[Fraction, int]


class PauliError(ValueError):
    """Raised for malformed Pauli strings or qubit labels."""

    pass


class PropagationError(ValueError):
    """Raised when an error cannot be pushed through a measurement record."""

    pass


class ChannelCompositionError(ValueError):
    """Raised when two channels act on partially overlapping qubits."""

    pass


def _fail(msg: str, error: type = PauliError):
    run_log.error(msg)
    raise error(msg)


def _popcount(value: int) -> int:
    return bin(value).count("1")


@dataclass(frozen=True)
class PauliString:
    """The operator i^k X^x Z^z.

    Attributes
    ----------
    x : int
        X bit mask.
    z : int
        Z bit mask.
    k : int
        Power of i, modulo 4.
    """

    x: int = 0
    z: int = 0
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "k", self.k % 4)

    @classmethod
    def from_ops(
        cls, labels: Sequence[str], ops: Mapping[str, str], sign: int = 1
    ) -> "PauliString":
        """Builds a Hermitian Pauli string from single qubit letters.

        Parameters
        ----------
        labels : Sequence[str]
            The qubit labels of the register.
        ops : Mapping[str, str]
            Label to one of I, X, Y, Z.
        sign : int, optional
            +1 or -1, by default 1.

        Returns
        -------
        PauliString
            e.g. {"4": "Y", "5": "Z"} gives Y4 Z5.
        """
        if sign not in (1, -1):
            _fail(f"a Hermitian Pauli string has sign +1 or -1, got {sign}")
        index = {label: i for i, label in enumerate(labels)}
        x = z = 0
        k = 0 if sign == 1 else 2
        for label, letter in ops.items():
            if label not in index:
                _fail(f"unknown qubit label {label!r}")
            bit = 1 << index[label]
            if letter == "X":
                x |= bit
            elif letter == "Z":
                z |= bit
            elif letter == "Y":
                x |= bit
                z |= bit
                k += 1
            elif letter != "I":
                _fail(f"unknown Pauli letter {letter!r}")
        return cls(x, z, k)

    @classmethod
    def z_string(cls, mask: int) -> "PauliString":
        return cls(0, mask, 0)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return PauliString(
            self.x ^ other.x,
            self.z ^ other.z,
            self.k + other.k + 2 * _popcount(self.z & other.x),
        )

    def commutes(self, other: "PauliString") -> bool:
        return _popcount((self.x & other.z) ^ (self.z & other.x)) % 2 == 0

    @property
    def is_hermitian(self) -> bool:
        return (self.k - _popcount(self.x & self.z)) % 2 == 0

    @property
    def sign(self) -> complex:
        """The prefactor relative to the letter form, where Y = iXZ."""
        return 1j ** ((self.k - _popcount(self.x & self.z)) % 4)

    @property
    def is_z_type(self) -> bool:
        return self.x == 0

    @property
    def support(self) -> int:
        return self.x | self.z

    def normalized(self) -> Tuple["PauliString", int]:
        """Splits a Hermitian string into a +1 sign string and a sign bit."""
        if not self.is_hermitian:
            _fail(f"{self} is not Hermitian")
        bit = int(self.sign.real < 0)
        return PauliString(self.x, self.z, _popcount(self.x & self.z)), bit

    def letters(self, labels: Sequence[str]) -> str:
        """Readable form such as 'Z1 Z2 X6', the sign is not included."""
        parts = []
        for i, label in enumerate(labels):
            xb, zb = self.x >> i & 1, self.z >> i & 1
            if xb or zb:
                parts.append(f"{'Y' if xb and zb else 'X' if xb else 'Z'}{label}")
        return " ".join(parts) if parts else "I"

    def dense(self, n_qubits: int) -> np.ndarray:
        """The 2^n matrix, qubit 0 is the leftmost tensor factor."""
        x_op = np.array([[0, 1], [1, 0]], dtype=complex)
        z_op = np.diag([1.0, -1.0]).astype(complex)
        matrix = np.eye(1, dtype=complex)
        for i in range(n_qubits):
            factor = np.eye(2, dtype=complex)
            if self.x >> i & 1:
                factor = factor @ x_op
            if self.z >> i & 1:
                factor = factor @ z_op
            matrix = np.kron(matrix, factor)
        return (1j**self.k) * matrix


@dataclass(frozen=True)
class Parity:
    """An affine GF(2) expression: constant + sum of outcome variables.

    Attributes
    ----------
    variables : frozenset
        Names of the outcome variables in the sum.
    constant : int
        0 or 1.
    """

    variables: FrozenSet[str] = frozenset()
    constant: int = 0

    @classmethod
    def of(cls, *variables: str, constant: int = 0) -> "Parity":
        return cls(frozenset(variables), constant % 2)

    def __xor__(self, other: "Parity") -> "Parity":
        return Parity(self.variables ^ other.variables, self.constant ^ other.constant)

    def flip(self, bit: int = 1) -> "Parity":
        return Parity(self.variables, self.constant ^ (bit & 1))

    def evaluate(self, assignment: Mapping[str, int]) -> int:
        """The value of the expression, missing variables count as 0."""
        value = self.constant
        for name in self.variables:
            value ^= assignment.get(name, 0) & 1
        return value

    def __str__(self) -> str:
        terms = ([str(self.constant)] if self.constant else []) + sorted(self.variables)
        return "+".join(terms) if terms else "0"


class StabilizerState(BaseClass):
    """
    A stabilizer state on labelled qubits whose generator signs are
    affine GF(2) expressions in symbolic measurement outcomes: the
    state is stabilized by (-1)^{e_j} g_j for every generator g_j
    with sign expression e_j.

    Values are immutable, operations return new states.

    Attributes
    ----------
    labels : tuple
        Qubit labels, bit i of every mask refers to labels[i].
    generators : tuple
        Commuting, independent Pauli strings with sign +1.
    signs : tuple
        One Parity per generator.
    """

    def __init__(
        self,
        labels: Sequence[str],
        generators: Sequence[PauliString],
        signs: Optional[Sequence[Parity]] = None,
    ):
        labels = tuple(str(label) for label in labels)
        if len(set(labels)) != len(labels):
            _fail(f"duplicate qubit labels in {labels}")
        if len(labels) > MAX_QUBITS:
            _fail(f"{len(labels)} qubits exceed the limit of {MAX_QUBITS}")
        if signs is None:
            signs = [Parity() for _ in generators]
        rows = []
        for generator, sign in zip(generators, signs):
            normal, bit = generator.normalized()
            rows.append((normal, sign.flip(bit)))
        self.labels = labels
        self.generators = tuple(row[0] for row in rows)
        self.signs = tuple(row[1] for row in rows)

    @property
    def n(self) -> int:
        return len(self.labels)

    def pauli(self, ops: Mapping[str, str], sign: int = 1) -> PauliString:
        """A Pauli string on this register, see PauliString.from_ops."""
        return PauliString.from_ops(self.labels, ops, sign)

    def tensor(self, other: "StabilizerState") -> "StabilizerState":
        """The product state, other's qubits are appended."""
        shift = self.n
        moved = [PauliString(g.x << shift, g.z << shift, g.k) for g in other.generators]
        return StabilizerState(
            self.labels + other.labels,
            list(self.generators) + moved,
            list(self.signs) + list(other.signs),
        )

    def is_valid(self) -> bool:
        """Generators commute and are independent."""
        for i, a in enumerate(self.generators):
            for b in self.generators[i + 1 :]:
                if not a.commutes(b):
                    return False
        return _rank([self._vector(g) for g in self.generators]) == len(self.generators)

    def _vector(self, pauli: PauliString) -> int:
        return pauli.x | pauli.z << self.n

    def _column_order(self, first: Iterable[int] = ()) -> List[int]:
        first = list(first)
        rest = [i for i in range(self.n) if i not in first]
        order = []
        for qubit in first + rest:
            order.extend([qubit, qubit + self.n])
        return order

    def canonical(self) -> List[Tuple[PauliString, Parity]]:
        """The reduced row echelon generators of the group.

        Two states describe the same signed group exactly when their
        canonical forms are equal.

        Returns
        -------
        list
            (generator, sign) pairs in pivot order.
        """
        rows = list(zip(self.generators, self.signs))
        reduced, _ = _row_reduce(rows, self._column_order(), self.n)
        return reduced

    def canonical_strings(self) -> List[str]:
        """Canonical generators written as '(-1)^{m1+m2} Z1 Z2 X6'."""
        lines = []
        for generator, sign in self.canonical():
            prefix = f"(-1)^{{{sign}}} " if sign.variables or sign.constant else ""
            lines.append(prefix + generator.letters(self.labels))
        return lines

    def solve(self, pauli: PauliString) -> Optional[Parity]:
        """The outcome expression of a Pauli string in the group.

        Returns
        -------
        Parity or None
            The GF(2) outcome of measuring pauli, None if neither pauli
            nor -pauli is in the group.
        """
        combination = _solve([self._vector(g) for g in self.generators], self._vector(pauli))
        if combination is None:
            return None
        product = PauliString()
        outcome = Parity()
        for j, (generator, sign) in enumerate(zip(self.generators, self.signs)):
            if combination >> j & 1:
                product = product * generator
                outcome = outcome ^ sign
        target, target_bit = pauli.normalized()
        _, product_bit = product.normalized()
        return outcome.flip(target_bit ^ product_bit)

    def restrict(self, keep: Sequence[str]) -> "StabilizerState":
        """The subgroup supported on the kept qubits, relabelled onto them.

        Parameters
        ----------
        keep : Sequence[str]
            Labels that survive, in the order of the new register.

        Returns
        -------
        StabilizerState
            The state of the kept qubits.
        """
        keep = [str(label) for label in keep]
        index = {label: i for i, label in enumerate(self.labels)}
        for label in keep:
            if label not in index:
                _fail(f"unknown qubit label {label!r}")
        kept_positions = [index[label] for label in keep]
        traced = [i for i in range(self.n) if i not in kept_positions]
        rows = list(zip(self.generators, self.signs))
        reduced, pivots = _row_reduce(rows, self._column_order(traced), self.n)
        traced_columns = set(traced) | {i + self.n for i in traced}
        generators, signs = [], []
        for (generator, sign), pivot in zip(reduced, pivots):
            if pivot in traced_columns:
                continue
            x = z = 0
            for new, old in enumerate(kept_positions):
                x |= (generator.x >> old & 1) << new
                z |= (generator.z >> old & 1) << new
            generators.append(PauliString(x, z, _popcount(x & z)))
            signs.append(sign)
        return StabilizerState(keep, generators, signs)

    def pure_z_elements(self) -> List[int]:
        """Z masks of a basis of the pure Z subgroup."""
        rows = list(zip(self.generators, self.signs))
        x_first = list(range(self.n)) + [i + self.n for i in range(self.n)]
        reduced, pivots = _row_reduce(rows, x_first, self.n)
        return [g.z for (g, _), pivot in zip(reduced, pivots) if pivot >= self.n]

    def state_vector(self, assignment: Mapping[str, int] = {}) -> np.ndarray:
        """The dense state for given outcome values, at most 8 qubits.

        Parameters
        ----------
        assignment : Mapping[str, int], optional
            Outcome variable values, missing ones are 0.

        Returns
        -------
        np.ndarray
            Unit vector of dimension 2^n, qubit 0 most significant.
        """
        if self.n > MAX_DENSE_QUBITS:
            _fail(f"dense vectors are limited to {MAX_DENSE_QUBITS} qubits")
        if len(self.generators) != self.n:
            _fail("a state vector needs a full set of generators")
        dim = 2**self.n
        projector = np.eye(dim, dtype=complex)
        for generator, sign in zip(self.generators, self.signs):
            value = (-1) ** sign.evaluate(assignment)
            projector = projector @ (np.eye(dim) + value * generator.dense(self.n)) / 2
        column = int(np.argmax(np.linalg.norm(projector, axis=0)))
        vector = projector[:, column]
        return vector / np.linalg.norm(vector)

    def to_dict(self, exclusions: list = []) -> dict:
        return dict(labels=list(self.labels), generators=self.canonical_strings())


def _rank(vectors: Sequence[int]) -> int:
    basis: Dict[int, int] = {}
    for vector in vectors:
        while vector:
            top = vector.bit_length() - 1
            if top not in basis:
                basis[top] = vector
                break
            vector ^= basis[top]
    return len(basis)


def _solve(vectors: Sequence[int], target: int) -> Optional[int]:
    """A subset (bit mask over vectors) whose XOR is target, or None."""
    basis: Dict[int, Tuple[int, int]] = {}
    for j, vector in enumerate(vectors):
        combination = 1 << j
        while vector:
            top = vector.bit_length() - 1
            if top not in basis:
                basis[top] = (vector, combination)
                break
            vector ^= basis[top][0]
            combination ^= basis[top][1]
    combination = 0
    while target:
        top = target.bit_length() - 1
        if top not in basis:
            return None
        target ^= basis[top][0]
        combination ^= basis[top][1]
    return combination


def _multiply(
    a: Tuple[PauliString, Parity], b: Tuple[PauliString, Parity]
) -> Tuple[PauliString, Parity]:
    """Product of two commuting signed generators."""
    product, bit = (a[0] * b[0]).normalized()
    return product, (a[1] ^ b[1]).flip(bit)


def _row_reduce(
    rows: List[Tuple[PauliString, Parity]], column_order: Sequence[int], n: int
) -> Tuple[List[Tuple[PauliString, Parity]], List[int]]:
    """Reduced row echelon form with columns searched in the given order.

    Column c < n is the x bit of qubit c, column c >= n the z bit of
    qubit c - n.
    """

    def bit(row: Tuple[PauliString, Parity], column: int) -> int:
        pauli = row[0]
        return (pauli.x >> column if column < n else pauli.z >> (column - n)) & 1

    rows = list(rows)
    pivots: List[int] = []
    rank = 0
    for column in column_order:
        found = next((r for r in range(rank, len(rows)) if bit(rows[r], column)), None)
        if found is None:
            continue
        rows[rank], rows[found] = rows[found], rows[rank]
        for r in range(len(rows)):
            if r != rank and bit(rows[r], column):
                rows[r] = _multiply(rows[r], rows[rank])
        pivots.append(column)
        rank += 1
    return rows[:rank], pivots


def ghz_state(center: str, bonds: Sequence[str]) -> StabilizerState:
    """The GHZ state stabilized by X_c prod Z_b and Z_c X_b.

    Parameters
    ----------
    center : str
        The center qubit label.
    bonds : Sequence[str]
        The bond qubit labels.

    Returns
    -------
    StabilizerState
        With every sign +1.
    """
    labels = [str(center)] + [str(b) for b in bonds]
    if len(set(labels)) != len(labels):
        _fail(f"duplicate qubit labels in {labels}")
    generators = [PauliString.from_ops(labels, {labels[0]: "X", **{b: "Z" for b in labels[1:]}})]
    for bond in labels[1:]:
        generators.append(PauliString.from_ops(labels, {labels[0]: "Z", bond: "X"}))
    return StabilizerState(labels, generators)


def measure_pauli(
    state: StabilizerState, p: PauliString, outcome_var: str
) -> Tuple[StabilizerState, Parity]:
    """Measures a Hermitian Pauli string with a symbolic outcome.

    Parameters
    ----------
    state : StabilizerState
        The state before the measurement.
    p : PauliString
        The measured operator, sign +1 or -1.
    outcome_var : str
        Name of the outcome variable of a random outcome.

    Returns
    -------
    state : StabilizerState
        The post measurement state, unchanged if the outcome is
        determined.
    outcome : Parity
        The outcome expression, the variable itself when random.

    Raises
    ------
    PauliError
        If p is not Hermitian.
    """
    if not p.is_hermitian:
        _fail(f"measured operator {p.letters(state.labels)} is not Hermitian")
    rows = list(zip(state.generators, state.signs))
    anticommuting = [j for j, (g, _) in enumerate(rows) if not g.commutes(p)]
    if not anticommuting:
        outcome = state.solve(p)
        if outcome is None:
            # a commuting operator outside the group of an incomplete set
            _fail(
                f"{p.letters(state.labels)} commutes with a partial stabilizer "
                "group without belonging to it"
            )
        run_log.debug(f"{p.letters(state.labels)} is determined: {outcome}")
        return state, outcome
    first = anticommuting[0]
    for j in anticommuting[1:]:
        rows[j] = _multiply(rows[j], rows[first])
    normal, bit = p.normalized()
    outcome = Parity.of(outcome_var)
    rows[first] = (normal, outcome.flip(bit))
    return (
        StabilizerState(state.labels, [r[0] for r in rows], [r[1] for r in rows]),
        outcome,
    )


class MeasurementRecord(BaseClass):
    """
    The history of Pauli measurements applied to an input state,
    followed by the removal of the measured qubits.

    Attributes
    ----------
    initial : StabilizerState
        The input state.
    measurements : list
        (operator, variable, outcome expression) in order.
    state : StabilizerState
        The state after the measurements on every input qubit.
    kept : tuple
        Labels that survive.
    """

    def __init__(self, initial: StabilizerState):
        self.initial = initial
        self.state = initial
        self.measurements: List[Tuple[PauliString, str, Parity]] = []
        self.kept: Tuple[str, ...] = initial.labels
        self._output: Optional[StabilizerState] = None

    def measure(self, ops: Mapping[str, str], var: str) -> Parity:
        """Measures the Pauli string given by letters on labels.

        Returns
        -------
        Parity
            The outcome expression.
        """
        pauli = self.initial.pauli(ops)
        self.state, outcome = measure_pauli(self.state, pauli, var)
        self.measurements.append((pauli, var, outcome))
        self._output = None
        return outcome

    def trace_out(self, labels: Iterable[str], order: Optional[Sequence[str]] = None):
        """Removes measured qubits from the output register.

        Parameters
        ----------
        labels : Iterable[str]
            The qubits to remove.
        order : Sequence[str], optional
            The order of the surviving labels in the output register,
            by default the input order.
        """
        removed = {str(label) for label in labels}
        unknown = removed - set(self.initial.labels)
        if unknown:
            _fail(f"unknown qubit labels {sorted(unknown)}")
        kept = tuple(label for label in self.kept if label not in removed)
        if order is not None:
            order = tuple(str(label) for label in order)
            if sorted(order) != sorted(kept):
                _fail(f"output order {order} does not match the kept qubits {kept}")
            kept = order
        self.kept = kept
        self._output = None

    @property
    def output(self) -> StabilizerState:
        """The state of the kept qubits."""
        if self._output is None:
            self._output = self.state.restrict(self.kept)
        return self._output

    @property
    def variables(self) -> List[str]:
        return [var for _, var, outcome in self.measurements if var in outcome.variables]

    def to_dict(self, exclusions: list = []) -> dict:
        labels = self.initial.labels
        return dict(
            measurements=[
                dict(operator=p.letters(labels), variable=var, outcome=str(outcome))
                for p, var, outcome in self.measurements
            ],
            output=self.output.to_dict(),
        )


def propagate_error(
    record: MeasurementRecord, error: PauliString
) -> Tuple[PauliString, Tuple[int, ...]]:
    """Pushes a Z-type error on the input qubits through a measurement
    record.

    The error flips every outcome whose operator it anticommutes with.
    Reading the flipped outcomes as the recorded ones leaves a Z-type
    frame difference on the kept qubits, which is added to the part
    of the error on the kept qubits.

    Parameters
    ----------
    record : MeasurementRecord
        The measurements and the kept qubits.
    error : PauliString
        A Z string over the input register.

    Returns
    -------
    residual : PauliString
        Z string over the kept register, reduced by the pure Z
        elements of the output group.
    outcome_flips : tuple
        One bit per measurement in record order.

    Raises
    ------
    PropagationError
        If the error is not Z-type, touches qubits outside the input
        register or cannot be compensated by a Z string.
    """
    initial = record.initial
    if not error.is_z_type:
        _fail(f"only Z-type errors propagate, got {error.letters(initial.labels)}", PropagationError)
    if error.z >> initial.n:
        _fail("error acts on qubits outside the input register", PropagationError)
    flips = tuple(int(not error.commutes(p)) for p, _, _ in record.measurements)
    flipped = {var: bit for (_, var, _), bit in zip(record.measurements, flips)}
    output = record.output
    # a Z string C with <C, x_j> = e_j(flips) for every output generator
    equations = []
    for generator, sign in zip(output.generators, output.signs):
        target = 0
        for name in sign.variables:
            target ^= flipped.get(name, 0)
        equations.append((generator.x, target))
    correction = _solve_z_frame(equations, output.n)
    if correction is None:
        _fail("no Z-type frame compensates the flipped outcomes", PropagationError)
    kept_index = {label: i for i, label in enumerate(output.labels)}
    restricted = 0
    for i, label in enumerate(initial.labels):
        if error.z >> i & 1 and label in kept_index:
            restricted |= 1 << kept_index[label]
    residual = _reduce_mask(restricted ^ correction, output.pure_z_elements())
    return PauliString.z_string(residual), flips


def _solve_z_frame(equations: List[Tuple[int, int]], n: int) -> Optional[int]:
    """Solves popcount(c & a_j) = b_j (mod 2) for the mask c."""
    basis: Dict[int, Tuple[int, int]] = {}
    for a, b in equations:
        while a:
            top = a.bit_length() - 1
            if top not in basis:
                basis[top] = (a, b)
                break
            a ^= basis[top][0]
            b ^= basis[top][1]
        if a == 0 and b:
            return None
    solution = 0
    # back substitution from the lowest pivot, free bits set to 0
    for top in sorted(basis):
        a, b = basis[top]
        lower = a & ~(1 << top)
        value = b ^ (_popcount(lower & solution) & 1)
        solution |= value << top
    return solution


def _reduce_mask(mask: int, elements: Sequence[int]) -> int:
    """Canonical representative of mask modulo the span of elements."""
    basis: Dict[int, int] = {}
    for element in elements:
        while element:
            top = element.bit_length() - 1
            if top not in basis:
                basis[top] = element
                break
            element ^= basis[top]
    for top in sorted(basis, reverse=True):
        if mask >> top & 1:
            mask ^= basis[top]
    return mask


class AffineProb(BaseClass):
    """The exact degree one polynomial c0 + c1 q1 + c2 q2 + c3 q3.

    Attributes
    ----------
    coefficients : tuple
        (c0, c1, c2, c3) as Fractions.
    """

    NAMES = ("q1", "q2", "q3")

    def __init__(self, c0: Rational = 0, c1: Rational = 0, c2: Rational = 0, c3: Rational = 0):
        self.coefficients = tuple(Fraction(c) for c in (c0, c1, c2, c3))

    @classmethod
    def one(cls) -> "AffineProb":
        return cls(1)

    @classmethod
    def parse(cls, text: str) -> "AffineProb":
        """Reads the form written by __str__, e.g. '1 - 2*q1 - 6*q2'."""
        coefficients = [Fraction(0)] * 4
        for term in text.replace(" - ", " + -").replace(" ", "").split("+"):
            if not term:
                continue
            if "*" in term:
                value, name = term.split("*")
                coefficients[1 + cls.NAMES.index(name)] += Fraction(value)
            elif term.lstrip("-") in cls.NAMES:
                sign = -1 if term.startswith("-") else 1
                coefficients[1 + cls.NAMES.index(term.lstrip("-"))] += sign
            else:
                coefficients[0] += Fraction(term)
        return cls(*coefficients)

    @property
    def constant(self) -> Fraction:
        return self.coefficients[0]

    @property
    def linear(self) -> Tuple[Fraction, ...]:
        return self.coefficients[1:]

    def __add__(self, other: "AffineProb") -> "AffineProb":
        return AffineProb(*(a + b for a, b in zip(self.coefficients, other.coefficients)))

    def __sub__(self, other: "AffineProb") -> "AffineProb":
        return AffineProb(*(a - b for a, b in zip(self.coefficients, other.coefficients)))

    def __neg__(self) -> "AffineProb":
        return AffineProb(*(-a for a in self.coefficients))

    def scale(self, factor: Rational) -> "AffineProb":
        return AffineProb(*(a * factor for a in self.coefficients))

    def truncated_product(self, other: "AffineProb") -> "AffineProb":
        """The product with every term of degree two dropped."""
        c0, d0 = self.constant, other.constant
        return AffineProb(
            c0 * d0,
            *(c0 * d + d0 * c for c, d in zip(self.linear, other.linear)),
        )

    def evaluate(self, q1: float, q2: float, q3: float) -> float:
        c0, c1, c2, c3 = (float(c) for c in self.coefficients)
        return c0 + c1 * q1 + c2 * q2 + c3 * q3

    def is_zero(self) -> bool:
        return not any(self.coefficients)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AffineProb):
            return NotImplemented
        return self.coefficients == other.coefficients

    def __hash__(self) -> int:
        return hash(self.coefficients)

    def __str__(self) -> str:
        terms = []
        if self.constant:
            terms.append(str(self.constant))
        for name, value in zip(self.NAMES, self.linear):
            if value:
                magnitude = abs(value)
                body = name if magnitude == 1 else f"{magnitude}*{name}"
                if not terms:
                    terms.append(body if value > 0 else f"-{body}")
                else:
                    terms.append(f"{'+' if value > 0 else '-'} {body}")
        return " ".join(terms) if terms else "0"

    def __repr__(self) -> str:
        return f"AffineProb({self})"

    def to_dict(self, exclusions: list = []) -> dict:
        return dict(zip(("const",) + self.NAMES, (str(c) for c in self.coefficients)))


class FirstOrderChannel(BaseClass):
    """A Z-Pauli channel with exact degree one coefficients.

    Attributes
    ----------
    labels : tuple
        Qubit labels, bit i of a mask refers to labels[i].
    terms : dict
        Z mask to AffineProb, the identity (mask 0) is always present
        and keeps the total at exactly 1.
    """

    def __init__(self, labels: Sequence[str], terms: Mapping[int, AffineProb]):
        self.labels = tuple(str(label) for label in labels)
        if len(set(self.labels)) != len(self.labels):
            _fail(f"duplicate qubit labels in {self.labels}", ChannelCompositionError)
        self.terms = {mask: coeff for mask, coeff in terms.items() if mask and not coeff.is_zero()}
        for mask in self.terms:
            if mask >> len(self.labels):
                _fail(f"mask {mask:b} exceeds the register {self.labels}", ChannelCompositionError)
        total = AffineProb()
        for coeff in self.terms.values():
            total = total + coeff
        self.terms[0] = AffineProb.one() - total

    @classmethod
    def from_letters(cls, labels: Sequence[str], terms: Mapping[Tuple[str, ...], AffineProb]) -> "FirstOrderChannel":
        """Builds a channel from tuples of labels carrying a Z."""
        index = {str(label): i for i, label in enumerate(labels)}
        masks: Dict[int, AffineProb] = {}
        for qubits, coeff in terms.items():
            mask = 0
            for label in qubits:
                if label not in index:
                    _fail(f"unknown qubit label {label!r}", ChannelCompositionError)
                mask |= 1 << index[label]
            masks[mask] = masks.get(mask, AffineProb()) + coeff
        return cls(labels, masks)

    def coefficient(self, *qubits: str) -> AffineProb:
        """The coefficient of the Z string on the given labels."""
        mask = 0
        for label in qubits:
            mask |= 1 << self.labels.index(str(label))
        return self.terms.get(mask, AffineProb())

    def total(self) -> AffineProb:
        total = AffineProb()
        for coeff in self.terms.values():
            total = total + coeff
        return total

    def letters(self, mask: int) -> str:
        return PauliString.z_string(mask).letters(self.labels)

    def relabel(self, mapping: Mapping[str, str]) -> "FirstOrderChannel":
        """Renames qubits, labels missing from mapping keep their name."""
        return FirstOrderChannel([mapping.get(label, label) for label in self.labels], self.terms)

    def in_order(self, labels: Sequence[str]) -> Dict[int, AffineProb]:
        """The terms with masks over another ordering of the same labels."""
        labels = [str(label) for label in labels]
        if sorted(labels) != sorted(self.labels):
            _fail(f"labels {labels} differ from {self.labels}", ChannelCompositionError)
        moved = {}
        for mask, coeff in self.terms.items():
            new = 0
            for i, label in enumerate(self.labels):
                if mask >> i & 1:
                    new |= 1 << labels.index(label)
            moved[new] = coeff
        return moved

    def evaluate(self, q1: float, q2: float, q3: float) -> Dict[int, float]:
        return {mask: coeff.evaluate(q1, q2, q3) for mask, coeff in self.terms.items()}

    def to_dict(self, exclusions: list = []) -> dict:
        return dict(
            labels=list(self.labels),
            terms={self.letters(mask): str(coeff) for mask, coeff in sorted(self.terms.items())},
        )


def compose_first_order(a: FirstOrderChannel, b: FirstOrderChannel) -> FirstOrderChannel:
    """Composes two channels keeping terms up to degree one.

    Channels on disjoint registers combine as a product; channels on
    the same register compose one after the other.

    Raises
    ------
    ChannelCompositionError
        If the registers partially overlap.
    """
    shared = set(a.labels) & set(b.labels)
    if shared and set(a.labels) != set(b.labels):
        _fail(
            f"registers {a.labels} and {b.labels} partially overlap",
            ChannelCompositionError,
        )
    if shared:
        labels = a.labels
        b_terms = b.in_order(labels)
    else:
        labels = a.labels + b.labels
        b_terms = {mask << len(a.labels): coeff for mask, coeff in b.terms.items()}
    terms: Dict[int, AffineProb] = {}
    for mask_a, coeff_a in a.terms.items():
        for mask_b, coeff_b in b_terms.items():
            product = coeff_a.truncated_product(coeff_b)
            if not product.is_zero():
                mask = mask_a ^ mask_b
                terms[mask] = terms.get(mask, AffineProb()) + product
    return FirstOrderChannel(labels, terms)


def propagate_channel(record: MeasurementRecord, channel: FirstOrderChannel) -> FirstOrderChannel:
    """Pushes every term of a first order channel through the record.

    Parameters
    ----------
    record : MeasurementRecord
        The measurements, the channel register must be the input one.
    channel : FirstOrderChannel
        The error channel on the input qubits.

    Returns
    -------
    FirstOrderChannel
        The channel on the kept qubits.
    """
    terms = channel.in_order(record.initial.labels)
    output: Dict[int, AffineProb] = {}
    for mask, coeff in terms.items():
        if mask == 0:
            continue
        residual, _ = propagate_error(record, PauliString.z_string(mask))
        output[residual.z] = output.get(residual.z, AffineProb()) + coeff
    return FirstOrderChannel(record.output.labels, output)


def propagate_distribution(
    record: MeasurementRecord, distribution: Mapping[int, float]
) -> Dict[int, float]:
    """Pushes a numeric distribution over input Z strings through the
    record, to all orders.

    Parameters
    ----------
    record : MeasurementRecord
        The measurements.
    distribution : Mapping[int, float]
        Probability of each Z mask over the input register.

    Returns
    -------
    dict
        Probability of each Z mask over the kept register.
    """
    output: Dict[int, float] = {}
    for mask, prob in distribution.items():
        residual, _ = propagate_error(record, PauliString.z_string(mask))
        output[residual.z] = output.get(residual.z, 0.0) + prob
    return output

"""Small dense complex linear algebra for spin Hilbert spaces.

Spin bases are ordered with m descending (s, s-1, ..., -s) and
composite spaces are ordered center first, then bonds 1, 2, 3.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple, Union

import numpy as np

from thermal_cluster import run_log

MAX_DIM = 64
HERMITIAN_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when a matrix would exceed the supported dimension
    or a spin value cannot be represented."""

    pass


class NotHermitianError(ValueError):
    """Raised when a matrix declared Hermitian is not."""

    pass


class EigenSolverError(RuntimeError):
    """Raised when the eigendecomposition fails or does not
    reconstruct the matrix.

    Attributes
    ----------
    condition : float
        The condition number of the offending matrix.
    """

    def __init__(self, msg: str, condition: float):
        super().__init__(msg)
        self.condition = condition


class DenseHermitian:
    """A complex Hermitian matrix of dimension at most 64.

    Values are immutable, every operation returns a new matrix.

    Attributes
    ----------
    entries : np.ndarray
        The (dim, dim) complex entries.
    """

    def __init__(self, entries: Union[np.ndarray, list], check: bool = True):
        """Stores the matrix after checking it is square, small and
        Hermitian.

        Parameters
        ----------
        entries : array_like
            The square matrix.
        check : bool, optional
            Check Hermiticity within 1e-12, by default True.

        Raises
        ------
        DimensionError
            If the matrix is not square or is larger than 64.
        NotHermitianError
            If the matrix differs from its conjugate transpose.
        """
        matrix = np.array(entries, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            msg = f"a dense Hermitian matrix must be square, got shape {matrix.shape}"
            run_log.error(msg)
            raise DimensionError(msg)
        if not 0 < matrix.shape[0] <= MAX_DIM:
            msg = f"dimension {matrix.shape[0]} is outside 1..{MAX_DIM}"
            run_log.error(msg)
            raise DimensionError(msg)
        if check:
            residue = np.max(np.abs(matrix - matrix.conj().T))
            if residue > HERMITIAN_TOL:
                msg = f"matrix is not Hermitian, max |A - A^dagger| = {residue:.3e}"
                run_log.error(msg)
                raise NotHermitianError(msg)
        self.entries = (matrix + matrix.conj().T) / 2
        self.entries.setflags(write=False)

    @property
    def dim(self) -> int:
        """The dimension of the space the matrix acts on."""
        return self.entries.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "DenseHermitian":
        """The identity of the given dimension."""
        return cls(np.eye(dim), check=False)

    @classmethod
    def diagonal(cls, values: Union[np.ndarray, list]) -> "DenseHermitian":
        """A diagonal matrix with real entries."""
        return cls(np.diag(np.asarray(values, dtype=float)), check=False)

    @classmethod
    def projector(cls, vector: np.ndarray) -> "DenseHermitian":
        """The rank one projector onto a normalised vector."""
        vector = np.asarray(vector, dtype=complex)
        vector = vector / np.linalg.norm(vector)
        return cls(np.outer(vector, vector.conj()), check=False)

    def __add__(self, other: "DenseHermitian") -> "DenseHermitian":
        return DenseHermitian(self.entries + other.entries, check=False)

    def __sub__(self, other: "DenseHermitian") -> "DenseHermitian":
        return DenseHermitian(self.entries - other.entries, check=False)

    def __neg__(self) -> "DenseHermitian":
        return DenseHermitian(-self.entries, check=False)

    def __mul__(self, scale: float) -> "DenseHermitian":
        if np.iscomplexobj(scale) and np.imag(scale) != 0:
            msg = "a Hermitian matrix can only be scaled by a real number"
            run_log.error(msg)
            raise NotHermitianError(msg)
        return DenseHermitian(self.entries * np.real(scale), check=False)

    __rmul__ = __mul__

    def __matmul__(self, other: "DenseHermitian") -> np.ndarray:
        """The plain product, which is not Hermitian in general."""
        return self.entries @ other.entries

    def trace(self) -> float:
        """The (real) trace."""
        return float(np.real(np.trace(self.entries)))

    def expectation(self, vector: np.ndarray) -> float:
        """<v|A|v> for a vector v."""
        vector = np.asarray(vector, dtype=complex)
        return float(np.real(vector.conj() @ self.entries @ vector))

    def sandwich(self, operator: np.ndarray) -> "DenseHermitian":
        """O A O^dagger, the result is Hermitian for any O.

        Parameters
        ----------
        operator : np.ndarray
            A (k, dim) matrix, the result has dimension k.
        """
        operator = np.asarray(operator, dtype=complex)
        return DenseHermitian(operator @ self.entries @ operator.conj().T, check=False)

    def distance(self, other: "DenseHermitian") -> float:
        """Frobenius norm of the difference."""
        return float(np.linalg.norm(self.entries - other.entries))

    def eigh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Eigendecomposition A = V diag(w) V^dagger.

        Returns
        -------
        values : np.ndarray
            Ascending real eigenvalues.
        vectors : np.ndarray
            Orthonormal eigenvectors in the columns.

        Raises
        ------
        EigenSolverError
            If LAPACK does not converge or the decomposition does not
            reconstruct the matrix within 1e-10.
        """
        try:
            values, vectors = np.linalg.eigh(self.entries)
        except np.linalg.LinAlgError as e:
            condition = float(np.linalg.cond(self.entries))
            msg = f"eigensolver failed ({e}), condition number {condition:.3e}"
            run_log.error(msg)
            raise EigenSolverError(msg, condition)
        rebuilt = (vectors * values) @ vectors.conj().T
        error = np.linalg.norm(rebuilt - self.entries)
        if error > RECONSTRUCTION_TOL * max(1.0, np.linalg.norm(self.entries)):
            condition = float(np.linalg.cond(self.entries))
            msg = (
                f"eigendecomposition reconstructs with error {error:.3e}, "
                f"condition number {condition:.3e}"
            )
            run_log.error(msg)
            raise EigenSolverError(msg, condition)
        return values, vectors

    def eigenvalues(self) -> np.ndarray:
        """Ascending real eigenvalues."""
        return self.eigh()[0]

    def __repr__(self) -> str:
        return f"DenseHermitian(dim={self.dim})"


@dataclass(frozen=True)
class SpinOperators:
    """Angular momentum matrices of a single spin.

    Attributes
    ----------
    s : Fraction
        The spin.
    Sx, Sy, Sz : DenseHermitian
        The components in the descending m basis.
    """

    s: Fraction
    Sx: DenseHermitian
    Sy: DenseHermitian
    Sz: DenseHermitian

    @property
    def dim(self) -> int:
        return self.Sz.dim

    def component(self, axis: str) -> DenseHermitian:
        """The component along x, y or z."""
        return {"x": self.Sx, "y": self.Sy, "z": self.Sz}[axis]

    def casimir(self) -> DenseHermitian:
        """Sx^2 + Sy^2 + Sz^2."""
        total = sum(
            (op @ op for op in (self.Sx, self.Sy, self.Sz)),
            np.zeros((self.dim, self.dim), dtype=complex),
        )
        return DenseHermitian(total)


def spin_matrices(s: Union[Fraction, float, int, str]) -> SpinOperators:
    """Builds the spin matrices of a spin s in the basis |s, m>
    ordered m = s, s-1, ..., -s.

    Parameters
    ----------
    s : Fraction or float
        A positive half integer, at most 5/2.

    Returns
    -------
    SpinOperators
        Sx, Sy, Sz.

    Raises
    ------
    DimensionError
        If 2s is not a positive integer or s > 5/2.
    """
    spin = Fraction(s).limit_denominator(1000) if not isinstance(s, Fraction) else s
    if (2 * spin).denominator != 1 or spin <= 0 or spin > Fraction(5, 2):
        msg = f"spin {s} must be a positive half integer no larger than 5/2"
        run_log.error(msg)
        raise DimensionError(msg)
    m = np.array([float(spin) - i for i in range(int(2 * spin) + 1)])
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1)), raising moves one index up
    raising = np.diag(np.sqrt(float(spin) * (float(spin) + 1) - m[1:] * (m[1:] + 1)), 1)
    lowering = raising.T
    return SpinOperators(
        s=spin,
        Sx=DenseHermitian((raising + lowering) / 2),
        Sy=DenseHermitian((raising - lowering) / 2j),
        Sz=DenseHermitian.diagonal(m),
    )


def kron(a: DenseHermitian, b: DenseHermitian) -> DenseHermitian:
    """The Kronecker product a (x) b.

    Raises
    ------
    DimensionError
        If dim(a) * dim(b) exceeds 64.
    """
    if a.dim * b.dim > MAX_DIM:
        msg = f"kron of dimensions {a.dim} and {b.dim} exceeds {MAX_DIM}"
        run_log.error(msg)
        raise DimensionError(msg)
    return DenseHermitian(np.kron(a.entries, b.entries), check=False)


def kron_all(*factors: DenseHermitian) -> DenseHermitian:
    """Kronecker product of several factors, left to right."""
    result = factors[0]
    for factor in factors[1:]:
        result = kron(result, factor)
    return result


def expm_hermitian(h: DenseHermitian, scale: float) -> DenseHermitian:
    """exp(scale * h) through the eigendecomposition of h.

    Parameters
    ----------
    h : DenseHermitian
        The exponent.
    scale : float
        A real factor, e.g. -beta.

    Returns
    -------
    DenseHermitian
        V exp(scale * Lambda) V^dagger, positive definite.
    """
    values, vectors = h.eigh()
    weights = np.exp(scale * values)
    return DenseHermitian((vectors * weights) @ vectors.conj().T, check=False)

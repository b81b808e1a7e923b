"""Linear-algebra and quantum-state primitives shared by the rest of the package.

Conventions
-----------
Qubit 0 is the leftmost tensor factor and the most significant bit of a
computational-basis index.  A ``BitVector`` with bits ``(1, 0, 1)`` therefore
labels basis index ``0b101 = 5``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

ATOL = 1e-10
MAX_DENSE_PAULI_QUBITS = 12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


class StateError(ValueError):
    """A matrix or vector fails a physical-state invariant."""


class DimensionError(ValueError):
    """Operands have incompatible dimensions."""


def num_qubits_for_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class BitVector:
    """Length-``n`` binary string stored as an integer (bit 0 = MSB)."""

    n: int
    value: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        if not 0 <= self.value < (1 << self.n) or (self.n == 0 and self.value != 0):
            raise ValueError(f"value {self.value} does not fit in {self.n} bits")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "BitVector":
        value = 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"bits must be 0/1, got {b!r}")
            value = (value << 1) | int(b)
        return cls(len(bits), value)

    @classmethod
    def from_string(cls, s: str) -> "BitVector":
        return cls.from_bits([int(c) for c in s])

    @classmethod
    def zeros(cls, n: int) -> "BitVector":
        return cls(n, 0)

    @classmethod
    def ones(cls, n: int) -> "BitVector":
        return cls(n, (1 << n) - 1)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.value >> (self.n - 1 - i)) & 1 for i in range(self.n))

    @property
    def weight(self) -> int:
        return bin(self.value).count("1")

    def support(self) -> list[int]:
        """Qubit indices carrying a 1, in increasing order."""
        return [i for i, b in enumerate(self.bits) if b]

    def __add__(self, other: "BitVector") -> "BitVector":
        if not isinstance(other, BitVector):
            return NotImplemented
        if other.n != self.n:
            raise DimensionError(f"cannot add {self.n}-bit and {other.n}-bit vectors")
        return BitVector(self.n, self.value ^ other.value)

    def __index__(self) -> int:
        return self.value

    def __str__(self) -> str:
        return format(self.value, f"0{self.n}b") if self.n else ""


@dataclass(frozen=True)
class PauliString:
    letters: str
    phase: complex = 1

    def __post_init__(self):
        if any(c not in PAULIS for c in self.letters):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")
        if self.phase not in (1, -1, 1j, -1j):
            raise ValueError(f"phase must be one of +-1, +-i, got {self.phase!r}")

    @property
    def n(self) -> int:
        return len(self.letters)


def pauli_matrix(p: Union[PauliString, str]) -> np.ndarray:
    """Dense matrix of a Pauli string, leftmost letter = qubit 0."""
    if isinstance(p, str):
        p = PauliString(p)
    if p.n > MAX_DENSE_PAULI_QUBITS:
        raise DimensionError(f"{p.n} qubits is too large for a dense Pauli matrix")
    if p.n == 0:
        return np.array([[p.phase]], dtype=complex)
    mat = reduce(np.kron, (PAULIS[c] for c in p.letters))
    return p.phase * mat


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)


def _as_square(mat) -> np.ndarray:
    arr = np.asarray(mat, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.flags.writeable = False
    return arr


class DensityMatrix:
    """Validated, read-only density matrix.

    Construction checks Hermiticity, unit trace and positivity to ``atol``.
    Pass ``check=False`` for states produced by trusted internal code paths,
    where an eigendecomposition per construction would dominate runtime.
    """

    __slots__ = ("mat",)

    def __init__(self, mat, *, check: bool = True, atol: float = ATOL):
        arr = _as_square(mat)
        num_qubits_for_dim(arr.shape[0])
        if check:
            herm_err = np.max(np.abs(arr - arr.conj().T))
            if herm_err > atol:
                raise StateError(f"not Hermitian (max |M - M^dag| = {herm_err:.3g})")
            tr = np.trace(arr)
            if abs(tr - 1) > atol:
                raise StateError(f"trace {tr.real:.12g} is not 1")
            lam_min = np.linalg.eigvalsh((arr + arr.conj().T) / 2)[0]
            if lam_min < -atol:
                raise StateError(f"negative eigenvalue {lam_min:.3g}")
        object.__setattr__(self, "mat", _frozen(arr))

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def n(self) -> int:
        return num_qubits_for_dim(self.dim)

    @classmethod
    def from_ket(cls, psi: "Ket") -> "DensityMatrix":
        v = psi.amplitudes
        return cls(np.outer(v, v.conj()), check=False)

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        d = 1 << n
        return cls(np.eye(d, dtype=complex) / d, check=False)

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    def __repr__(self) -> str:
        return f"DensityMatrix(n={self.n})"


class Ket:
    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes, *, atol: float = ATOL):
        v = np.asarray(amplitudes, dtype=complex).ravel()
        num_qubits_for_dim(v.size)
        norm2 = float(np.vdot(v, v).real)
        if abs(norm2 - 1) > atol:
            raise StateError(f"squared norm {norm2:.12g} is not 1")
        object.__setattr__(self, "amplitudes", _frozen(v))

    def __setattr__(self, name, value):
        raise AttributeError("Ket is immutable")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def n(self) -> int:
        return num_qubits_for_dim(self.dim)

    @classmethod
    def basis(cls, n: int, index: int) -> "Ket":
        v = np.zeros(1 << n, dtype=complex)
        v[index] = 1
        return cls(v)

    @classmethod
    def ghz(cls, n: int) -> "Ket":
        v = np.zeros(1 << n, dtype=complex)
        v[0] = v[-1] = 1 / np.sqrt(2)
        return cls(v)

    @classmethod
    def all_plus(cls, n: int) -> "Ket":
        d = 1 << n
        return cls(np.full(d, 1 / np.sqrt(d), dtype=complex))


def as_density(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


def _check_dims(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def _clip_roundoff(lam: np.ndarray) -> np.ndarray:
    """Zero eigenvalues below the round-off floor so their square roots do not add noise."""
    floor = lam.size * np.finfo(float).eps * max(float(np.max(np.abs(lam))), 1e-300)
    return np.where(lam > floor, lam, 0.0)


def psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian PSD matrix; eigenvalues at round-off level are set to 0."""
    lam, vec = np.linalg.eigh((mat + mat.conj().T) / 2)
    return (vec * np.sqrt(_clip_roundoff(lam))) @ vec.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    a = as_density(rho).mat
    b = as_density(sigma).mat
    _check_dims(a, b)
    s = psd_sqrt(a)
    m = s @ b @ s
    lam = np.linalg.eigvalsh((m + m.conj().T) / 2)
    f = float(np.sum(np.sqrt(_clip_roundoff(lam))) ** 2)
    return min(max(f, 0.0), 1.0)


def pure_fidelity(psi, rho) -> float:
    """``<psi|rho|psi>`` for a pure reference state."""
    v = psi.amplitudes if isinstance(psi, Ket) else Ket(psi).amplitudes
    m = rho.mat if isinstance(rho, DensityMatrix) else _as_square(rho)
    if m.shape[0] != v.size:
        raise DimensionError(f"ket of dim {v.size} vs matrix of dim {m.shape[0]}")
    return float(np.vdot(v, m @ v).real)


def trace_distance(rho, sigma) -> float:
    a = rho.mat if isinstance(rho, DensityMatrix) else _as_square(rho)
    b = sigma.mat if isinstance(sigma, DensityMatrix) else _as_square(sigma)
    _check_dims(a, b)
    d = a - b
    lam = np.linalg.eigvalsh((d + d.conj().T) / 2)
    return float(0.5 * np.sum(np.abs(lam)))


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex.

    Sort-based: find the largest ``j`` with ``u_j > (sum_{i<=j} u_i - 1) / j``
    over the descending sort ``u`` and shift by that threshold.
    """
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    cond = u - (css - 1) / j > 0
    r = j[cond][-1]
    theta = (css[r - 1] - 1) / r
    return np.maximum(v - theta, 0.0)


def random_density_matrix(n: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Ginibre-distributed random state (full rank unless ``rank`` is given)."""
    d = 1 << n
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    m /= np.trace(m).real
    return DensityMatrix((m + m.conj().T) / 2)

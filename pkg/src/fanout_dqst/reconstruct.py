"""Physical projection of raw estimates, the Pauli-QST baseline, and state comparison."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .dqst import RawMatrix
from .qcore import (
    H,
    DensityMatrix,
    DimensionError,
    Ket,
    fidelity,
    kron_all,
    pauli_matrix,
    project_simplex,
    pure_fidelity,
    trace_distance,
)
from .rng import make_rng
from .simkernel import NoiseModel, apply_local_matrices, readout_matrices

HERMITIAN_TOL = 1e-8


@dataclass(frozen=True)
class ProjectionReport:
    input: np.ndarray
    output: DensityMatrix
    frobenius_shift: float
    negative_mass_removed: float
    eigenvalues_in: np.ndarray
    eigenvalues_out: np.ndarray


def project_physical(raw) -> ProjectionReport:
    """Frobenius-nearest density matrix to a Hermitian estimate.

    Diagonalize, project the eigenvalues onto the probability simplex, and
    recompose in the same eigenbasis.
    """
    m = raw.mat if isinstance(raw, (RawMatrix, DensityMatrix)) else np.asarray(raw, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    herm_err = np.max(np.abs(m - m.conj().T))
    if herm_err > HERMITIAN_TOL:
        raise ValueError(f"input is not Hermitian (max deviation {herm_err:.3g})")
    mh = (m + m.conj().T) / 2
    lam, vec = np.linalg.eigh(mh)
    order = np.argsort(-lam, kind="stable")
    lam, vec = lam[order], vec[:, order]
    mu = project_simplex(lam)
    out = (vec * mu) @ vec.conj().T
    out = (out + out.conj().T) / 2
    return ProjectionReport(
        input=m,
        output=DensityMatrix(out),
        frobenius_shift=float(np.linalg.norm(m - out)),
        negative_mass_removed=float(-lam[lam < 0].sum()),
        eigenvalues_in=lam,
        eigenvalues_out=mu,
    )


# ------------------------------------------------------------ standard QST

_ROT = {
    "Z": np.eye(2, dtype=complex),
    "X": H,
    "Y": H @ np.diag([1, -1j]),
}


def qst_settings(n: int) -> list[str]:
    """All ``3**n`` local Pauli measurement settings, lexicographic over X, Y, Z."""
    return ["".join(s) for s in itertools.product("XYZ", repeat=n)]


@dataclass(frozen=True)
class QstCounts:
    """Computational-basis counts (after basis rotation) for each Pauli setting."""

    n: int
    shots: int
    counts: Mapping[str, np.ndarray]

    def frequencies(self, setting: str) -> np.ndarray:
        c = np.asarray(self.counts[setting], dtype=float)
        return c / c.sum()


def qst_distribution(rho, setting: str, noise: NoiseModel = NoiseModel()) -> np.ndarray:
    m = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    u = kron_all(_ROT[c] for c in setting)
    probs = np.clip(np.real(np.einsum("ij,jk,ik->i", u, m, u.conj())), 0, None)
    probs /= probs.sum()
    if noise.has_readout_error:
        probs = apply_local_matrices(probs, readout_matrices(noise, len(setting)))
    return probs


def simulate_qst(rho, noise: NoiseModel, shots: int, seed: int) -> QstCounts:
    m = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    n = m.shape[0].bit_length() - 1
    counts = {}
    for i, s in enumerate(qst_settings(n)):
        p = qst_distribution(m, s, noise)
        counts[s] = make_rng(seed, i).multinomial(shots, p / p.sum())
    return QstCounts(n, shots, counts)


def shot_matched(total_shots: int, num_settings: int) -> int:
    """Per-circuit shots that spend the same total budget over ``num_settings`` circuits."""
    return total_shots // num_settings


def _parity_signs(n: int) -> np.ndarray:
    d = 1 << n
    idx = np.arange(d)
    pc = np.array([bin(v).count("1") for v in range(d)])
    return np.where(pc[idx[:, None] & idx[None, :]] % 2, -1.0, 1.0)


def pauli_expectations(freqs: Mapping[str, np.ndarray], n: int) -> dict[str, float]:
    """Every Pauli-string expectation, averaged over all settings that measure it."""
    settings = qst_settings(n)
    missing = [s for s in settings if s not in freqs]
    if missing:
        raise ValueError(f"{len(missing)} of {len(settings)} Pauli settings are missing")
    signs = _parity_signs(n)
    total: dict[str, float] = {}
    hits: dict[str, int] = {}
    for s in settings:
        f = np.asarray(freqs[s], dtype=float)
        if f.shape != (1 << n,):
            raise DimensionError(f"setting {s} has {f.size} outcomes, expected {1 << n}")
        parities = signs @ f
        for mask in range(1 << n):
            label = "".join(c if (mask >> (n - 1 - q)) & 1 else "I" for q, c in enumerate(s))
            total[label] = total.get(label, 0.0) + parities[mask]
            hits[label] = hits.get(label, 0) + 1
    return {p: total[p] / hits[p] for p in total}


def standard_qst(counts, confusion=None) -> RawMatrix:
    """Linear-inversion estimate ``2**-n sum_P <P> P`` from all ``3**n`` settings.

    ``counts`` is a :class:`QstCounts` or a mapping ``setting -> probabilities``.
    ``confusion`` (an ``n``-qubit ConfusionMatrix) applies readout mitigation
    to each setting first.
    """
    if isinstance(counts, QstCounts):
        n = counts.n
        missing = [s for s in qst_settings(n) if s not in counts.counts]
        if missing:
            raise ValueError(f"{len(missing)} of {3 ** n} Pauli settings are missing")
        freqs = {s: counts.frequencies(s) for s in counts.counts}
    else:
        freqs = {s: np.asarray(p, dtype=float) for s, p in counts.items()}
        n = len(next(iter(freqs)))
    if confusion is not None:
        from .mitigation import mitigate_distribution

        freqs = {s: mitigate_distribution(f, confusion) for s, f in freqs.items()}
    expect = pauli_expectations(freqs, n)
    d = 1 << n
    m = np.zeros((d, d), dtype=complex)
    for label, val in expect.items():
        m += val * pauli_matrix(label)
    m /= d
    return RawMatrix((m + m.conj().T) / 2)


# -------------------------------------------------------------- comparison


@dataclass(frozen=True)
class StateComparison:
    """``cross_fidelity`` is the Uhlmann fidelity; ``cross_overlap`` is ``<v|b|v>`` with
    ``v`` the dominant eigenvector of ``a`` (the pure-state reading of the same quantity)."""

    cross_fidelity: float
    trace_distance: float
    fidelity_a: float
    fidelity_b: float
    cross_overlap: float = float("nan")


def compare_states(rho_a, rho_b, ideal: Optional[Ket] = None) -> StateComparison:
    a = rho_a if isinstance(rho_a, DensityMatrix) else DensityMatrix(rho_a)
    b = rho_b if isinstance(rho_b, DensityMatrix) else DensityMatrix(rho_b)
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")
    fa = pure_fidelity(ideal, a) if ideal is not None else float("nan")
    fb = pure_fidelity(ideal, b) if ideal is not None else float("nan")
    _, vec = np.linalg.eigh(a.mat)
    overlap = float(np.vdot(vec[:, -1], b.mat @ vec[:, -1]).real)
    return StateComparison(fidelity(a, b), trace_distance(a, b), fa, fb, overlap)

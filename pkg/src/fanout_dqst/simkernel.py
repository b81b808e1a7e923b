"""Forward simulation of the fan-out selection circuit.

The joint register holds the ``n`` system qubits followed by the meter, so a
joint basis index is ``2 * a + m`` with ``m`` the meter bit.  System qubit
``q`` sits at bit position ``n - q`` and the meter at bit position 0.

Two simulation modes share one noise model:

* dense density-matrix evolution (exact outcome distributions, ``n <= 10``);
* per-shot trajectories for pure targets up to ``n = 20``: the ideal final
  statevector is sampled once per shot and each sampled Pauli error is pushed
  through the remaining CNOTs as a Pauli frame, which flips outcome bits.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .qcore import BitVector, DensityMatrix, DimensionError, Ket
from .rng import make_rng
from .twirl import CZ, TwirlSet, cnot_frame_paulis, twirled_cnot_layers

MAX_DENSE_QUBITS = 10
MAX_TRAJECTORY_QUBITS = 20


class TargetKind(str, enum.Enum):
    GHZ = "GHZ"
    ALL_ZERO = "AllZero"
    ALL_PLUS = "AllPlus"
    EXPLICIT = "ExplicitMatrix"


@dataclass(frozen=True)
class TargetSpec:
    kind: TargetKind
    n: int
    matrix: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", TargetKind(self.kind))
        if self.n < 1:
            raise ValueError("need at least one qubit")
        if self.kind is TargetKind.EXPLICIT:
            if self.matrix is None:
                raise ValueError("ExplicitMatrix target needs a matrix")
            rho = DensityMatrix(self.matrix)
            if rho.n != self.n:
                raise DimensionError(f"matrix has {rho.n} qubits, target declares {self.n}")

    def ket(self) -> Ket:
        """Ideal pure state (not available for explicit matrices)."""
        if self.kind is TargetKind.GHZ:
            return Ket.ghz(self.n)
        if self.kind is TargetKind.ALL_ZERO:
            return Ket.basis(self.n, 0)
        if self.kind is TargetKind.ALL_PLUS:
            return Ket.all_plus(self.n)
        raise ValueError("explicit targets have no ket")


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing noise on selection CNOTs plus classical readout flips.

    ``readout_flip`` is either one ``(p(1|0), p(0|1))`` pair used for every
    qubit, or one pair per qubit of the joint register (meter last).
    """

    two_qubit_depol: float = 0.0
    readout_flip: tuple = (0.0, 0.0)
    state_prep_depol: float = 0.0

    def __post_init__(self):
        ro = self.readout_flip
        if len(ro) and not isinstance(ro[0], (tuple, list)):
            ro = (float(ro[0]), float(ro[1]))
        else:
            ro = tuple((float(a), float(b)) for a, b in ro)
        object.__setattr__(self, "readout_flip", ro)
        for name in ("two_qubit_depol", "state_prep_depol"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        for p01, p10 in self._pairs():
            if not (0.0 <= p01 < 1.0 and 0.0 <= p10 < 1.0):
                raise ValueError(f"readout flip ({p01}, {p10}) outside [0, 1)")

    def _pairs(self):
        ro = self.readout_flip
        return [ro] if not isinstance(ro[0], tuple) else list(ro)

    @property
    def per_qubit(self) -> bool:
        return isinstance(self.readout_flip[0], tuple)

    def readout_pairs(self, num_qubits: int) -> list[tuple[float, float]]:
        if not self.per_qubit:
            return [self.readout_flip] * num_qubits
        if len(self.readout_flip) != num_qubits:
            raise DimensionError(f"{len(self.readout_flip)} readout pairs for {num_qubits} qubits")
        return list(self.readout_flip)

    @property
    def has_readout_error(self) -> bool:
        return any(p01 or p10 for p01, p10 in self._pairs())

    @property
    def is_zero(self) -> bool:
        return self.two_qubit_depol == 0 and self.state_prep_depol == 0 and not self.has_readout_error


NOISELESS = NoiseModel()


@dataclass(frozen=True)
class Setting:
    k: BitVector
    basis: str = "X"
    fold: int = 1

    def __post_init__(self):
        if self.basis not in ("X", "Y"):
            raise ValueError(f"meter basis must be X or Y, got {self.basis!r}")
        if self.fold < 1 or self.fold % 2 == 0:
            raise ValueError(f"fold must be an odd positive integer, got {self.fold}")

    @property
    def n(self) -> int:
        return self.k.n

    def label(self) -> str:
        return f"k{self.k}_{self.basis}_f{self.fold}"


@dataclass(frozen=True)
class OutcomeDistribution:
    """Joint probabilities ``probs[a, j]`` with ``j = 0`` for meter ``+`` and 1 for ``-``."""

    setting: Setting
    probs: np.ndarray

    @property
    def n(self) -> int:
        return self.setting.n

    def p(self, a: int, sign: int) -> float:
        return float(self.probs[a, 0 if sign > 0 else 1])


@dataclass(frozen=True)
class CountTable:
    """Shot counts keyed by ``(a, meter_sign)`` with ``a`` the integer system outcome."""

    setting: Setting
    shots: int
    counts: Mapping[tuple[int, int], int]
    seed: Optional[int] = None

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be positive")
        total = sum(self.counts.values())
        if total != self.shots:
            raise ValueError(f"counts sum to {total}, expected {self.shots}")

    @property
    def n(self) -> int:
        return self.setting.n

    def get(self, a: int, sign: int) -> int:
        return self.counts.get((int(a), 1 if sign > 0 else -1), 0)

    def to_array(self) -> np.ndarray:
        arr = np.zeros((1 << self.n, 2), dtype=np.int64)
        for (a, s), c in self.counts.items():
            arr[a, 0 if s > 0 else 1] = c
        return arr

    def frequencies(self) -> np.ndarray:
        return self.to_array() / self.shots

    def codes(self) -> tuple[np.ndarray, np.ndarray]:
        """Joint-register codes ``2a + m`` and their counts, sorted by code."""
        items = sorted((2 * a + (0 if s > 0 else 1), c) for (a, s), c in self.counts.items())
        if not items:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        code, cnt = zip(*items)
        return np.array(code, dtype=np.int64), np.array(cnt, dtype=np.int64)

    def merge(self, other: "CountTable") -> "CountTable":
        if other.setting != self.setting:
            raise ValueError("cannot merge tables from different settings")
        merged = dict(self.counts)
        for key, c in other.counts.items():
            merged[key] = merged.get(key, 0) + c
        return CountTable(self.setting, self.shots + other.shots, merged, self.seed)


def counts_from_codes(setting: Setting, codes: np.ndarray, seed=None) -> CountTable:
    uniq, cnt = np.unique(np.asarray(codes, dtype=np.int64), return_counts=True)
    counts = {(int(c) >> 1, -1 if c & 1 else 1): int(m) for c, m in zip(uniq, cnt)}
    return CountTable(setting, int(cnt.sum()), counts, seed)


# ---------------------------------------------------------------- dense mode


def prepare_target(spec: TargetSpec, noise: NoiseModel = NOISELESS) -> DensityMatrix:
    if spec.n > MAX_DENSE_QUBITS:
        raise DimensionError(f"dense mode supports n <= {MAX_DENSE_QUBITS}, got {spec.n}")
    if spec.kind is TargetKind.EXPLICIT:
        mat = np.asarray(spec.matrix, dtype=complex)
    else:
        v = spec.ket().amplitudes
        mat = np.outer(v, v.conj())
    p = noise.state_prep_depol
    if p:
        d = mat.shape[0]
        mat = (1 - p) * mat + p * np.eye(d) / d
    return DensityMatrix(mat, check=spec.kind is TargetKind.EXPLICIT)


def fanout_permutation(k: BitVector) -> np.ndarray:
    """Joint-index permutation of controlled-``U_ES``: XOR ``k`` into ``a`` when the meter is 1."""
    idx = np.arange(1 << (k.n + 1))
    return np.where(idx & 1, idx ^ (k.value << 1), idx)


def _cnot_permutation(n: int, target: int) -> np.ndarray:
    idx = np.arange(1 << (n + 1))
    return np.where(idx & 1, idx ^ (1 << (n - target)), idx)


def _apply_two_qubit(rho: np.ndarray, u: np.ndarray, bit_c: int, bit_t: int) -> np.ndarray:
    """``u rho u^dag`` for a 4x4 ``u`` on (control, target) ordered as ``|c t>``."""
    d = rho.shape[0]
    mc, mt = 1 << bit_c, 1 << bit_t
    base = np.arange(d)
    base = base[(base & (mc | mt)) == 0]
    idx = base[:, None] | np.array([0, mt, mc, mc | mt])[None, :]
    out = rho.copy()
    rows = rho[idx]  # (d/4, 4, d)
    out[idx] = np.einsum("st,btj->bsj", u, rows)
    cols = out[:, idx]  # (d, d/4, 4)
    out[:, idx] = np.einsum("ibt,st->ibs", cols, u.conj())
    return out


def selection_gate_targets(k: BitVector, fold: int) -> list[int]:
    """System-qubit target of every CNOT in the (folded) selection block, in order."""
    return k.support() * fold


def joint_state(
    rho,
    k: BitVector,
    noise: NoiseModel = NOISELESS,
    fold: int = 1,
    twirls: Optional[Sequence[TwirlSet]] = None,
    backend: Optional[str] = None,
) -> DensityMatrix:
    """System-meter state after the controlled selection unitary.

    Without gate noise or twirls the selection block is applied as one
    permutation per fold. Otherwise each meter-controlled CNOT is applied in
    turn (optionally as a Pauli-twirled CZ) and followed by a two-qubit
    depolarizing channel on (meter, target).
    """
    r = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    n = k.n
    if r.shape != (1 << n, 1 << n):
        raise DimensionError(f"state of shape {r.shape} does not match {n}-qubit mask")
    if fold < 1 or fold % 2 == 0:
        raise ValueError(f"fold must be odd, got {fold}")
    plus = np.full((2, 2), 0.5, dtype=complex)
    lam = np.kron(r, plus)
    p = noise.two_qubit_depol
    targets = selection_gate_targets(k, fold)
    if twirls is not None and len(twirls) != len(targets):
        raise ValueError(f"{len(twirls)} twirl sets for {len(targets)} CNOTs")
    if p == 0 and twirls is None:
        perm = fanout_permutation(k)
        for _ in range(fold):
            lam = lam[np.ix_(perm, perm)]
        return DensityMatrix(lam, check=False)
    for g, t in enumerate(targets):
        bit_t = n - t
        if twirls is None:
            perm = _cnot_permutation(n, t)
            lam = lam[np.ix_(perm, perm)]
            lam = kernels.pair_depolarize(lam, 0, bit_t, p, backend=backend)
        else:
            pre, post = twirled_cnot_layers(twirls[g])
            lam = _apply_two_qubit(lam, CZ @ pre, 0, bit_t)
            lam = kernels.pair_depolarize(lam, 0, bit_t, p, backend=backend)
            lam = _apply_two_qubit(lam, post, 0, bit_t)
    return DensityMatrix(lam, check=False)


def readout_matrices(noise: NoiseModel, num_qubits: int) -> list[np.ndarray]:
    """Column-stochastic 2x2 blocks ``[[P(0|0), P(0|1)], [P(1|0), P(1|1)]]``."""
    return [np.array([[1 - p01, p10], [p01, 1 - p10]]) for p01, p10 in noise.readout_pairs(num_qubits)]


def apply_local_matrices(vec: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Apply ``M_0 (x) M_1 (x) ...`` to a length-``2**len(mats)`` vector without forming it."""
    t = np.asarray(vec).reshape((2,) * len(mats))
    for axis, m in enumerate(mats):
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def outcome_distribution(
    joint,
    basis: str,
    noise: NoiseModel = NOISELESS,
    setting: Optional[Setting] = None,
) -> OutcomeDistribution:
    """Probabilities of (system outcome ``a``, meter sign) for an X or Y meter readout."""
    lam = joint.mat if isinstance(joint, DensityMatrix) else np.asarray(joint, dtype=complex)
    dim = lam.shape[0]
    n = dim.bit_length() - 2
    if n < 1 or dim != 1 << (n + 1):
        raise DimensionError(f"joint state dimension {dim} is not 2^(n+1)")
    even = np.arange(0, dim, 2)
    pop = (lam[even, even].real + lam[even + 1, even + 1].real) / 2
    c = lam[even, even + 1]
    if basis == "X":
        coh = c.real
    elif basis == "Y":
        coh = -c.imag
    else:
        raise ValueError(f"meter basis must be X or Y, got {basis!r}")
    probs = np.stack([pop + coh, pop - coh], axis=1)
    if noise.has_readout_error:
        probs = apply_local_matrices(probs.ravel(), readout_matrices(noise, n + 1)).reshape(-1, 2)
    if setting is None:
        setting = Setting(BitVector.zeros(n), basis)
    elif setting.basis != basis or setting.n != n:
        raise ValueError("setting does not match the joint state")
    return OutcomeDistribution(setting, probs)


def exact_distribution(rho, setting: Setting, noise: NoiseModel = NOISELESS, twirls=None) -> OutcomeDistribution:
    lam = joint_state(rho, setting.k, noise, setting.fold, twirls)
    return outcome_distribution(lam, setting.basis, noise, setting)


def sample_shots(dist: OutcomeDistribution, shots: int, seed) -> CountTable:
    """Multinomial draw of ``shots`` outcomes; bit-exact for a given integer seed."""
    if shots < 1:
        raise ValueError("shots must be positive")
    flat = np.asarray(dist.probs, dtype=float).ravel()
    if np.any(flat < -1e-12) or abs(flat.sum() - 1) > 1e-9:
        raise ValueError("invalid probability distribution")
    flat = np.clip(flat, 0, None)
    rng = make_rng(seed)
    draws = rng.multinomial(shots, flat / flat.sum())
    nz = np.flatnonzero(draws)
    counts = {(int(c) >> 1, -1 if c & 1 else 1): int(draws[c]) for c in nz}
    return CountTable(dist.setting, shots, counts, seed if isinstance(seed, (int, np.integer)) else None)


# ----------------------------------------------------------- trajectory mode

_PAULI_XZ = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=np.uint64)  # I, X, Y, Z


def _ideal_code_probs(psi: np.ndarray, k: BitVector, basis: str) -> np.ndarray:
    n = k.n
    joint = np.zeros(1 << (n + 1), dtype=complex)
    joint[0::2] = psi / np.sqrt(2)
    joint[1::2] = psi[np.arange(1 << n) ^ k.value] / np.sqrt(2)
    a0, a1 = joint[0::2], joint[1::2]
    if basis == "X":
        plus, minus = (a0 + a1) / np.sqrt(2), (a0 - a1) / np.sqrt(2)
    else:
        plus, minus = (a0 - 1j * a1) / np.sqrt(2), (a0 + 1j * a1) / np.sqrt(2)
    probs = np.empty(1 << (n + 1))
    probs[0::2] = np.abs(plus) ** 2
    probs[1::2] = np.abs(minus) ** 2
    return probs / probs.sum()


def trajectory_counts(
    target: Ket,
    setting: Setting,
    noise: NoiseModel,
    shots: int,
    seed,
    twirls: Optional[Sequence[TwirlSet]] = None,
    backend: Optional[str] = None,
) -> CountTable:
    """Per-shot trajectory simulation for a pure target state."""
    n = setting.n
    if n > MAX_TRAJECTORY_QUBITS:
        raise DimensionError(f"trajectory mode supports n <= {MAX_TRAJECTORY_QUBITS}, got {n}")
    if target.n != n:
        raise DimensionError("target and setting disagree on n")
    k = setting.k
    rng = make_rng(seed)
    probs = _ideal_code_probs(target.amplitudes, k, setting.basis)
    codes = rng.choice(probs.size, size=shots, p=probs).astype(np.int64)

    if noise.state_prep_depol:
        hit = np.flatnonzero(rng.random(shots) < noise.state_prep_depol)
        r = rng.integers(0, 1 << n, size=hit.size)
        branch = rng.integers(0, 2, size=hit.size)
        meter = rng.integers(0, 2, size=hit.size)
        if k.value == 0 and setting.basis == "X":
            meter[:] = 0
        codes[hit] = ((r ^ (branch * k.value)) << 1) | meter

    targets = selection_gate_targets(k, setting.fold)
    tbits = np.array([n - t for t in targets], dtype=np.int64)
    if twirls is not None and len(twirls) != len(targets):
        raise ValueError(f"{len(twirls)} twirl sets for {len(targets)} CNOTs")

    x = np.zeros(shots, dtype=np.uint64)
    z = np.zeros(shots, dtype=np.uint64)
    p = noise.two_qubit_depol
    if p and len(targets):
        ev_shot, ev_slot, ev_x, ev_z = [], [], [], []
        for g, tb in enumerate(tbits):
            hits = np.flatnonzero(rng.random(shots) < p)
            which = rng.integers(0, 16, size=hits.size)
            pm, pt = _PAULI_XZ[which >> 2], _PAULI_XZ[which & 3]
            ev_shot.append(hits)
            ev_slot.append(np.full(hits.size, g))
            ev_x.append(pm[:, 0] | (pt[:, 0] << np.uint64(tb)))
            ev_z.append(pm[:, 1] | (pt[:, 1] << np.uint64(tb)))
        x, z = kernels.propagate_frames(
            tbits, 0, shots, np.concatenate(ev_shot), np.concatenate(ev_slot),
            np.concatenate(ev_x), np.concatenate(ev_z), backend=backend,
        )
    if twirls is not None:
        tx, tz = _twirl_frame(twirls, tbits, backend)
        x ^= tx
        z ^= tz

    meter_flip = (z if setting.basis == "X" else x ^ z) & np.uint64(1)
    sys_flip = x & ~np.uint64(1)
    codes ^= (sys_flip | meter_flip).astype(np.int64)

    if noise.has_readout_error:
        for q, (p01, p10) in enumerate(noise.readout_pairs(n + 1)):
            pos = n - q
            bit = (codes >> pos) & 1
            flip = rng.random(shots) < np.where(bit == 1, p10, p01)
            codes ^= flip.astype(np.int64) << pos

    table = counts_from_codes(setting, codes)
    return CountTable(setting, table.shots, table.counts, seed if isinstance(seed, (int, np.integer)) else None)


def _twirl_frame(twirls, tbits, backend):
    """Net Pauli frame of the twirl layers alone (shared by every shot).

    Frame propagation is linear over GF(2), so it can be XORed onto the
    per-shot error frames.
    """
    ev_slot, ev_x, ev_z = [], [], []
    for g, (tw, tb) in enumerate(zip(twirls, tbits)):
        pre, post = cnot_frame_paulis(tw)
        for slot, (xc, zc, xt, zt) in ((g - 1, pre), (g, post)):
            ev_slot.append(slot)
            ev_x.append(xc | (xt << int(tb)))
            ev_z.append(zc | (zt << int(tb)))
    x, z = kernels.propagate_frames(tbits, 0, 1, np.zeros(len(ev_slot)), ev_slot, ev_x, ev_z, backend=backend)
    return x[0], z[0]


def trajectory_ghz_counts(n: int, noise: NoiseModel, fold: int, shots: int, seed, twirls=None, backend=None) -> CountTable:
    """Counts for the single GHZ-fidelity setting (``k`` = all ones, X meter)."""
    setting = Setting(BitVector.ones(n), "X", fold)
    return trajectory_counts(Ket.ghz(n), setting, noise, shots, seed, twirls, backend)

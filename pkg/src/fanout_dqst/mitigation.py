"""Readout mitigation, Pauli twirling, zero-noise extrapolation and bootstrap errors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .dqst import ghz_fidelity_estimate, ghz_fidelity_exact, ghz_fidelity_from_frequencies
from .qcore import BitVector, DimensionError, Ket, project_simplex
from .rng import child_seed, make_rng
from .simkernel import (
    MAX_DENSE_QUBITS,
    CountTable,
    NoiseModel,
    Setting,
    apply_local_matrices,
    exact_distribution,
    prepare_target,
    TargetSpec,
    sample_shots,
    trajectory_counts,
)
from .twirl import TwirlSet, cz_twirl_sets, sample_twirls  # noqa: F401  (re-exported)

SINGULAR_TOL = 1e-9
MAX_FULL_CONFUSION_QUBITS = 12


class MitigationError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Column-stochastic readout matrix ``C[b, a] = P(read b | prepared a)``.

    ``mode`` is ``"per_qubit"`` (``blocks`` holds one 2x2 matrix per qubit) or
    ``"full"`` (``full`` holds the ``2**n x 2**n`` matrix).
    """

    num_qubits: int
    mode: str
    blocks: tuple = ()
    full: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode == "per_qubit":
            blocks = tuple(np.asarray(b, dtype=float) for b in self.blocks)
            if len(blocks) != self.num_qubits or any(b.shape != (2, 2) for b in blocks):
                raise DimensionError("per-qubit mode needs one 2x2 block per qubit")
            object.__setattr__(self, "blocks", blocks)
            mats = blocks
        elif self.mode == "full":
            full = np.asarray(self.full, dtype=float)
            if full.shape != (1 << self.num_qubits,) * 2:
                raise DimensionError(f"full confusion matrix has shape {full.shape}")
            object.__setattr__(self, "full", full)
            mats = (full,)
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        for m in mats:
            if np.any(m < -1e-12) or np.any(m > 1 + 1e-12) or np.max(np.abs(m.sum(axis=0) - 1)) > 1e-10:
                raise MitigationError("confusion matrix must be column-stochastic with entries in [0, 1]")

    def matrix(self) -> np.ndarray:
        return self.full if self.mode == "full" else tensor_confusion(self).full

    def check_invertible(self):
        if self.mode == "per_qubit":
            for q, b in enumerate(self.blocks):
                if abs(np.linalg.det(b)) < SINGULAR_TOL:
                    raise MitigationError(f"confusion block of qubit {q} is singular")
        elif np.linalg.cond(self.full) > 1 / SINGULAR_TOL:
            raise MitigationError("full confusion matrix is singular")

    def restrict(self, qubits: Sequence[int]) -> "ConfusionMatrix":
        if self.mode != "per_qubit":
            raise MitigationError("only per-qubit calibrations can be restricted")
        return ConfusionMatrix(len(qubits), "per_qubit", tuple(self.blocks[q] for q in qubits))


def calibrate_confusion(noise: NoiseModel, num_qubits: int, shots: Optional[int] = None, seed: int = 0) -> ConfusionMatrix:
    """Per-qubit calibration from ``|0>`` and ``|1>`` preparations.

    ``shots=None`` returns the model's flip probabilities exactly.
    """
    blocks = []
    for q, (p01, p10) in enumerate(noise.readout_pairs(num_qubits)):
        if shots is None:
            e01, e10 = p01, p10
        else:
            if shots < 1:
                raise ValueError("shots must be positive")
            e01 = make_rng(seed, q, 0).binomial(shots, p01) / shots
            e10 = make_rng(seed, q, 1).binomial(shots, p10) / shots
        blocks.append(np.array([[1 - e01, e10], [e01, 1 - e10]]))
    return ConfusionMatrix(num_qubits, "per_qubit", tuple(blocks))


def calibrate_confusion_full(noise: NoiseModel, num_qubits: int, shots: Optional[int] = None, seed: int = 0) -> ConfusionMatrix:
    """Full calibration by preparing every basis state of the register."""
    if num_qubits > MAX_FULL_CONFUSION_QUBITS:
        raise DimensionError(f"full calibration limited to {MAX_FULL_CONFUSION_QUBITS} qubits")
    d = 1 << num_qubits
    pairs = noise.readout_pairs(num_qubits)
    idx = np.arange(d)
    full = np.empty((d, d))
    for a in range(d):
        col = np.ones(d)
        for q, (p01, p10) in enumerate(pairs):
            shift = num_qubits - 1 - q
            prep = (a >> shift) & 1
            read = (idx >> shift) & 1
            flip_p = p10 if prep else p01
            col *= np.where(read == prep, 1 - flip_p, flip_p)
        if shots is not None:
            col = make_rng(seed, 1 << 20, a).multinomial(shots, col / col.sum()) / shots
        full[:, a] = col
    return ConfusionMatrix(num_qubits, "full", full=full)


def tensor_confusion(per_qubit: ConfusionMatrix) -> ConfusionMatrix:
    if per_qubit.mode != "per_qubit":
        raise MitigationError("tensor_confusion expects a per-qubit calibration")
    if per_qubit.num_qubits > MAX_FULL_CONFUSION_QUBITS:
        raise DimensionError(f"{per_qubit.num_qubits} qubits is too large for a dense confusion matrix")
    full = per_qubit.blocks[0]
    for b in per_qubit.blocks[1:]:
        full = np.kron(full, b)
    return ConfusionMatrix(per_qubit.num_qubits, "full", full=full)


def apply_confusion(probs: np.ndarray, cm: ConfusionMatrix) -> np.ndarray:
    """Push a (flattened or ``[a, meter]``) distribution through the readout channel."""
    shape = np.shape(probs)
    flat = np.asarray(probs, dtype=float).ravel()
    if cm.mode == "full":
        out = cm.full @ flat
    else:
        out = apply_local_matrices(flat, cm.blocks)
    return out.reshape(shape)


def mitigate_distribution(probs: np.ndarray, cm: ConfusionMatrix, clip: bool = False) -> np.ndarray:
    """Solve ``C q = p``; entries of ``q`` may be negative unless ``clip`` is set."""
    shape = np.shape(probs)
    flat = np.asarray(probs, dtype=float).ravel()
    if flat.size != 1 << cm.num_qubits:
        raise DimensionError(f"distribution of size {flat.size} vs {cm.num_qubits}-qubit confusion matrix")
    cm.check_invertible()
    if cm.mode == "full":
        q = np.linalg.solve(cm.full, flat)
    else:
        q = apply_local_matrices(flat, [np.linalg.inv(b) for b in cm.blocks])
    if clip:
        q = project_simplex(q)
    return q.reshape(shape)


def mitigate_counts(counts: CountTable, cm: ConfusionMatrix, clip: bool = False) -> np.ndarray:
    """Quasi-probabilities ``q[a, meter]`` for a count table; the meter is the last qubit of ``cm``."""
    if cm.num_qubits != counts.n + 1:
        raise DimensionError(f"confusion matrix covers {cm.num_qubits} qubits, table needs {counts.n + 1}")
    return mitigate_distribution(counts.frequencies(), cm, clip)


def mitigated_at(counts: CountTable, cm: ConfusionMatrix, codes: Sequence[int]) -> dict[int, float]:
    """Selected entries of ``C^-1 p`` without forming the full vector (per-qubit mode).

    ``codes`` are joint-register indices ``2a + m``.  Cost scales with the
    number of observed outcomes, which keeps 20-qubit tables cheap.
    """
    if cm.mode != "per_qubit":
        q = mitigate_counts(counts, cm).ravel()
        return {int(c): float(q[c]) for c in codes}
    if cm.num_qubits != counts.n + 1:
        raise DimensionError(f"confusion matrix covers {cm.num_qubits} qubits, table needs {counts.n + 1}")
    cm.check_invertible()
    inv = np.array([np.linalg.inv(b) for b in cm.blocks])  # (N, 2, 2)
    obs, cnt = counts.codes()
    p = cnt / counts.shots
    nq = cm.num_qubits
    shifts = nq - 1 - np.arange(nq)
    obs_bits = (obs[:, None] >> shifts[None, :]) & 1  # (m, N)
    out = {}
    for c in codes:
        c_bits = (int(c) >> shifts) & 1
        w = inv[np.arange(nq)[None, :], c_bits[None, :], obs_bits].prod(axis=1)
        out[int(c)] = float(w @ p)
    return out


# ------------------------------------------------------------------ ZNE


@dataclass(frozen=True)
class ZneSeries:
    """Per-fold means with bootstrap errors and a straight-line extrapolation to fold 0."""

    points: tuple  # ((fold, mean, stderr), ...)
    extrapolated: float
    slope: float
    weighted: bool = False
    instance_values: dict = field(default_factory=dict, compare=False)

    @property
    def folds(self) -> list[int]:
        return [p[0] for p in self.points]

    def line(self, fold: float) -> float:
        return self.extrapolated + self.slope * fold


def fit_line(folds, means, stderrs=None, weighted: bool = False) -> tuple[float, float]:
    """Least-squares ``(intercept, slope)``; inverse-variance weights when ``weighted``."""
    x = np.asarray(folds, dtype=float)
    y = np.asarray(means, dtype=float)
    w = np.ones_like(x)
    if weighted:
        s = np.asarray(stderrs, dtype=float)
        if np.any(s <= 0):
            raise ValueError("weighted fit needs positive standard errors")
        w = 1 / s**2
    a = np.stack([np.ones_like(x), x], axis=1) * np.sqrt(w)[:, None]
    coef, *_ = np.linalg.lstsq(a, y * np.sqrt(w), rcond=None)
    return float(coef[0]), float(coef[1])


def intercept_stderr(folds, stderrs, weighted: bool = False) -> float:
    """Standard error of the fitted fold-0 intercept, treating per-fold errors as independent."""
    x = np.asarray(folds, dtype=float)
    s = np.asarray(stderrs, dtype=float)
    w = 1 / s**2 if weighted else np.ones_like(x)
    a = np.stack([np.ones_like(x), x], axis=1)
    # intercept = e0^T (A^T W A)^-1 A^T W y
    row = np.linalg.solve(a.T @ (w[:, None] * a), (a * w[:, None]).T)[0]
    return float(np.sqrt(np.sum(row**2 * s**2)))


def bootstrap_stats(instance_values: Sequence[float], resamples: int = 50, seed: int = 0) -> tuple[float, float]:
    """Mean over bootstrap sets and the standard deviation of the bootstrap-set means."""
    v = np.asarray(instance_values, dtype=float)
    if v.size == 0:
        raise ValueError("no values to bootstrap")
    if resamples < 2:
        raise ValueError("need at least two resamples")
    rng = make_rng(seed)
    idx = rng.integers(0, v.size, size=(resamples, v.size))
    means = v[idx].mean(axis=1)
    return float(means.mean()), float(means.std(ddof=1))


Experiment = Callable[[int, int, np.random.Generator], float]


def run_zne(
    experiment: Experiment,
    folds: Sequence[int] = (1, 3, 5),
    twirl_instances: int = 100,
    shots_per_instance: int = 1000,
    seed: int = 0,
    resamples: int = 50,
    weighted: bool = False,
) -> ZneSeries:
    """Run ``experiment(fold, shots, rng)`` once per twirl instance and fold, then extrapolate.

    Instance ``j`` at fold ``f`` draws from the stream keyed ``(seed, f, j)``.
    """
    folds = [int(f) for f in folds]
    if any(f < 1 or f % 2 == 0 for f in folds):
        raise ValueError(f"folds must be odd positive integers, got {folds}")
    if len(set(folds)) < 2:
        raise ValueError("need at least two distinct folds")
    if folds != sorted(folds):
        raise ValueError("folds must be increasing")
    if twirl_instances < 1:
        raise ValueError("twirl_instances must be at least 1")
    points, values = [], {}
    for f in folds:
        vals = [float(experiment(f, shots_per_instance, make_rng(seed, f, j))) for j in range(twirl_instances)]
        values[f] = vals
        if twirl_instances >= 2:
            mean, err = bootstrap_stats(vals, resamples, child_seed(seed, f, 1 << 30))
        else:
            mean, err = vals[0], 0.0
        points.append((f, mean, err))
    intercept, slope = fit_line(folds, [p[1] for p in points], [p[2] for p in points], weighted)
    return ZneSeries(tuple(points), intercept, slope, weighted, values)


def ghz_experiment(
    n: int,
    noise: NoiseModel,
    confusion: Optional[ConfusionMatrix] = None,
    mode: str = "trajectory",
    twirl: bool = True,
    backend: Optional[str] = None,
) -> Experiment:
    """GHZ-fidelity closure for :func:`run_zne`: fresh twirl sets per instance, optional QREM."""
    if mode not in ("trajectory", "dense"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "dense" and n > MAX_DENSE_QUBITS:
        raise DimensionError(f"dense mode supports n <= {MAX_DENSE_QUBITS}")
    rho = prepare_target(TargetSpec("GHZ", n), noise) if mode == "dense" else None
    ket = Ket.ghz(n)
    ones = (1 << n) - 1
    codes = (0, 1, 2 * ones, 2 * ones + 1)

    def experiment(fold: int, shots: int, rng: np.random.Generator) -> float:
        setting = Setting(BitVector.ones(n), "X", fold)
        twirls = sample_twirls(n * fold, rng) if twirl else None
        sim_seed = int(rng.integers(0, 2**63 - 1))
        if mode == "dense":
            table = sample_shots(exact_distribution(rho, setting, noise, twirls), shots, sim_seed)
        else:
            table = trajectory_counts(ket, setting, noise, shots, sim_seed, twirls, backend)
        if confusion is None:
            return ghz_fidelity_estimate(table)[0]
        q = mitigated_at(table, confusion, codes)
        return ghz_fidelity_from_frequencies(setting, q, shots)[0]

    return experiment


def exact_ghz_fold_values(n: int, noise: NoiseModel, folds: Sequence[int], readout: bool = True) -> list[float]:
    """Dense-mode GHZ fidelity estimator expectation at each fold (the ZNE oracle)."""
    if not readout:
        noise = NoiseModel(noise.two_qubit_depol, (0.0, 0.0), noise.state_prep_depol)
    rho = prepare_target(TargetSpec("GHZ", n), noise)
    return [ghz_fidelity_exact(exact_distribution(rho, Setting(BitVector.ones(n), "X", f), noise)) for f in folds]

"""Matrix-element estimation from meter-coupled measurement records.

For selection mask ``k`` and system outcome ``a`` the joint probabilities
``P(a, +)`` and ``P(a, -)`` of an X-basis meter readout satisfy
``P(a,+) - P(a,-) = Re<a+k|rho|a>``; the Y-basis readout gives the imaginary
part.  Probabilities are joint over ``(a, meter)``, i.e. normalized by the
total shots of the setting, not conditioned on ``a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .qcore import BitVector, DimensionError
from .rng import make_rng
from .simkernel import CountTable, OutcomeDistribution, Setting

HOEFFDING_BOUND = 2.0


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class ElementEstimate:
    """Estimate of ``<row|rho|col>`` with ``row = col + k``.

    A single setting measures one part: ``part`` is ``"re"`` for X-basis and
    diagonal settings, ``"im"`` for Y-basis ones; the other component of
    ``value`` and its standard error are zero.
    """

    row: BitVector
    col: BitVector
    value: complex
    stderr_re: float
    stderr_im: float
    part: str = "re"


@dataclass(frozen=True)
class RawMatrix:
    """Hermitian assembly of element estimates; neither trace nor positivity is enforced.

    ``measured`` marks entries backed by data (all True after full coverage).
    """

    mat: np.ndarray
    measured: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.mat.shape[0].bit_length() - 1

    @property
    def complete(self) -> bool:
        return self.measured is None or bool(self.measured.all())


def enumerate_settings(n: int, fold: int = 1) -> list[Setting]:
    """The ``2**(n+1) - 1`` settings for full reconstruction: ``(0, X)`` then ``(k, X), (k, Y)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    out = [Setting(BitVector.zeros(n), "X", fold)]
    for kv in range(1, 1 << n):
        k = BitVector(n, kv)
        out.append(Setting(k, "X", fold))
        out.append(Setting(k, "Y", fold))
    return out


def _linear_stderr(coef: np.ndarray, freqs: np.ndarray, shots: int) -> np.ndarray:
    """Multinomial standard error of ``sum_i coef[r, i] * f_i`` for each row ``r``."""
    mean = coef @ freqs
    second = (coef**2) @ np.clip(freqs, 0, None)
    return np.sqrt(np.clip(second - mean**2, 0, None) / shots)


def _combination(n: int, k: int, basis: str) -> np.ndarray:
    """Coefficients over the flattened ``(a, meter)`` table for every element of setting ``k``.

    Row ``a`` estimates ``<a+k|rho|a>`` (real or imaginary part); off-diagonal
    rows average the two outcomes ``a`` and ``a+k`` that see the same element.
    """
    d = 1 << n
    a = np.arange(d)
    coef = np.zeros((d, 2 * d))
    if k == 0:
        coef[a, 2 * a] = 1.0
        coef[a, 2 * a + 1] = 1.0
        return coef
    b = a ^ k
    sign_b = 1.0 if basis == "X" else -1.0
    coef[a, 2 * a] += 0.5
    coef[a, 2 * a + 1] -= 0.5
    coef[a, 2 * b] += 0.5 * sign_b
    coef[a, 2 * b + 1] -= 0.5 * sign_b
    return coef


def estimate_from_frequencies(setting: Setting, freqs: np.ndarray, shots: int) -> list[ElementEstimate]:
    """Element estimates from a (possibly quasi-) probability table ``freqs[a, meter]``."""
    n = setting.n
    k = setting.k.value
    if k == 0 and setting.basis == "Y":
        raise EstimationError("k = 0 with a Y meter measures nothing: diagonals are real")
    if shots < 1:
        raise EstimationError("zero shots")
    freqs = np.asarray(freqs, dtype=float)
    if freqs.shape != (1 << n, 2):
        raise DimensionError(f"frequency table shape {freqs.shape} does not match n={n}")
    coef = _combination(n, k, setting.basis)
    flat = freqs.ravel()
    vals = coef @ flat
    errs = _linear_stderr(coef, flat, shots)
    return _package(setting, vals, errs)


def _package(setting: Setting, vals: np.ndarray, errs: np.ndarray) -> list[ElementEstimate]:
    n, k = setting.n, setting.k.value
    imag = setting.basis == "Y"
    out = []
    for a in range(1 << n):
        v = complex(0.0, vals[a]) if imag else complex(vals[a], 0.0)
        out.append(
            ElementEstimate(
                row=BitVector(n, a ^ k),
                col=BitVector(n, a),
                value=v,
                stderr_re=0.0 if imag else float(errs[a]),
                stderr_im=float(errs[a]) if imag else 0.0,
                part="im" if imag else "re",
            )
        )
    return out


def estimate_elements(
    counts: CountTable,
    stderr: str = "analytic",
    resamples: int = 500,
    seed: int = 0,
) -> list[ElementEstimate]:
    """Unbiased estimates of the ``2**n`` elements selected by the table's setting.

    ``stderr="resample"`` replaces the analytic multinomial errors with the
    spread over ``resamples`` parametric Monte-Carlo redraws of the table.
    """
    if counts.shots < 1:
        raise EstimationError("zero shots")
    freqs = counts.frequencies()
    est = estimate_from_frequencies(counts.setting, freqs, counts.shots)
    if stderr == "analytic":
        return est
    if stderr != "resample":
        raise ValueError(f"unknown stderr method {stderr!r}")
    coef = _combination(counts.n, counts.setting.k.value, counts.setting.basis)
    rng = make_rng(seed)
    draws = rng.multinomial(counts.shots, freqs.ravel(), size=resamples) / counts.shots
    errs = (draws @ coef.T).std(axis=0, ddof=1)
    vals = np.array([e.value.imag if e.part == "im" else e.value.real for e in est])
    return _package(counts.setting, vals, errs)


def reconstruct_raw(all_estimates: Iterable[ElementEstimate] | Mapping, n: Optional[int] = None, allow_partial: bool = False) -> RawMatrix:
    """Assemble element estimates into a Hermitian matrix.

    Accepts a flat iterable of estimates or a mapping from setting to estimate
    lists.  Each off-diagonal entry takes its real part from an X setting and
    its imaginary part from a Y setting; diagonals come from ``k = 0``.
    """
    if isinstance(all_estimates, Mapping):
        all_estimates = [e for ests in all_estimates.values() for e in ests]
    ests = list(all_estimates)
    if not ests:
        raise EstimationError("no estimates given")
    if n is None:
        n = ests[0].row.n
    d = 1 << n
    re = np.zeros((d, d))
    im = np.zeros((d, d))
    have_re = np.zeros((d, d), dtype=bool)
    have_im = np.zeros((d, d), dtype=bool)
    for e in ests:
        if e.row.n != n or e.col.n != n:
            raise DimensionError("estimates with inconsistent qubit counts")
        r, c = e.row.value, e.col.value
        if e.part == "re":
            re[r, c] = e.value.real
            have_re[r, c] = True
        else:
            im[r, c] = e.value.imag
            have_im[r, c] = True
    np.fill_diagonal(have_im, True)
    measured = have_re & have_im
    if not measured.all() and not allow_partial:
        missing = int((~measured).sum())
        raise EstimationError(f"{missing} matrix entries lack estimates; settings are missing")
    m = re + 1j * im
    m = (m + m.conj().T) / 2
    return RawMatrix(m, None if measured.all() else measured)


def reconstruct_from_frequencies(settings: Sequence[Setting], freqs: Sequence[np.ndarray]) -> RawMatrix:
    """Same matrix as ``reconstruct_raw`` over ``estimate_from_frequencies``, without
    building per-element records (used inside resampling loops)."""
    if not settings:
        raise EstimationError("no settings given")
    n = settings[0].n
    d = 1 << n
    a = np.arange(d)
    m = np.zeros((d, d), dtype=complex)
    have = np.zeros((2, d, d), dtype=bool)
    for s, f in zip(settings, freqs):
        vals = _combination(n, s.k.value, s.basis) @ np.asarray(f, dtype=float).ravel()
        rows = a ^ s.k.value
        if s.basis == "Y":
            m[rows, a] += 1j * vals
            have[1, rows, a] = True
        else:
            m[rows, a] += vals
            have[0, rows, a] = True
    have[1, a, a] = True
    if not have.all():
        raise EstimationError("settings do not cover every matrix entry")
    return RawMatrix((m + m.conj().T) / 2)


def estimates_by_setting(tables: Sequence[CountTable], **kwargs) -> dict[Setting, list[ElementEstimate]]:
    return {t.setting: estimate_elements(t, **kwargs) for t in tables}


def shots_for_accuracy(epsilon: float, delta_f: float, num_settings: int = 1) -> int:
    """Hoeffding shots per setting: ``ceil(2 b^2 / eps^2 * ln(2 K / delta))`` with ``b = 2``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not 0 < delta_f < 1:
        raise ValueError("delta_f must lie in (0, 1)")
    if num_settings < 1:
        raise ValueError("num_settings must be at least 1")
    b = HOEFFDING_BOUND
    return math.ceil(2 * b * b / epsilon**2 * math.log(2 * num_settings / delta_f))


# ---------------------------------------------------------------- GHZ fidelity

GHZ_COMBINATIONS = ("four_term", "plus_zero", "plus_one")


def _ghz_coef(n: int, combination: str) -> dict[int, float]:
    zero, one = 0, 2 * ((1 << n) - 1)  # codes 2a + m
    if combination == "four_term":
        return {zero: 1.0, zero + 1: 1.0, one: 1.0, one + 1: -1.0}
    if combination == "plus_zero":
        return {zero: 2.0}
    if combination == "plus_one":
        return {one: 2.0}
    raise ValueError(f"unknown combination {combination!r}; choose from {GHZ_COMBINATIONS}")


def _check_ghz_setting(setting: Setting):
    if setting.basis != "X" or setting.k.value != (1 << setting.n) - 1:
        raise EstimationError(f"GHZ fidelity needs k = all ones with an X meter, got {setting.label()}")


def ghz_fidelity_from_frequencies(setting: Setting, freqs, shots: int, combination: str = "four_term") -> tuple[float, float]:
    """GHZ fidelity estimate and multinomial stderr from a probability table or a sparse code map.

    ``freqs`` is either an array ``[a, meter]`` or a mapping ``code -> probability``
    with ``code = 2a + m``.
    """
    _check_ghz_setting(setting)
    coef = _ghz_coef(setting.n, combination)
    if isinstance(freqs, Mapping):
        f = {c: float(freqs.get(c, 0.0)) for c in coef}
    else:
        flat = np.asarray(freqs, dtype=float).ravel()
        f = {c: float(flat[c]) for c in coef}
    mean = sum(coef[c] * f[c] for c in coef)
    second = sum(coef[c] ** 2 * max(f[c], 0.0) for c in coef)
    return mean, math.sqrt(max(second - mean**2, 0.0) / shots)


def ghz_fidelity_estimate(counts: CountTable, combination: str = "four_term") -> tuple[float, float]:
    """``p(0,+) + p(0,-) + p(1,+) - p(1,-)`` over the all-zero / all-one outcomes."""
    _check_ghz_setting(counts.setting)
    n = counts.n
    ones = (1 << n) - 1
    f = {
        0: counts.get(0, +1) / counts.shots,
        1: counts.get(0, -1) / counts.shots,
        2 * ones: counts.get(ones, +1) / counts.shots,
        2 * ones + 1: counts.get(ones, -1) / counts.shots,
    }
    return ghz_fidelity_from_frequencies(counts.setting, f, counts.shots, combination)


def ghz_fidelity_exact(dist: OutcomeDistribution, combination: str = "four_term") -> float:
    return ghz_fidelity_from_frequencies(dist.setting, dist.probs, 1, combination)[0]

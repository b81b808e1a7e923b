"""Pauli twirl sets for the CZ gate.

A set ``(P1, P2, P3, P4)`` satisfies ``(P1 (x) P3) CZ (P2 (x) P4) = CZ``:
``P2, P4`` act on (control, target) before the gate and ``P1, P3`` after it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .qcore import H, PAULIS

CZ = np.diag([1, 1, 1, -1]).astype(complex)
LETTERS = "IXYZ"


@dataclass(frozen=True)
class SignedPauli:
    letter: str
    sign: int = 1

    def matrix(self) -> np.ndarray:
        return self.sign * PAULIS[self.letter]

    def __str__(self) -> str:
        return ("-" if self.sign < 0 else "+") + self.letter


@dataclass(frozen=True)
class TwirlSet:
    p1: SignedPauli
    p2: SignedPauli
    p3: SignedPauli
    p4: SignedPauli

    def before(self) -> np.ndarray:
        return np.kron(self.p2.matrix(), self.p4.matrix())

    def after(self) -> np.ndarray:
        return np.kron(self.p1.matrix(), self.p3.matrix())

    def satisfies_identity(self) -> bool:
        """Exact check: every entry is a small Gaussian integer, so no tolerance."""
        return bool(np.array_equal(self.after() @ CZ @ self.before(), CZ))

    def as_tuple(self) -> tuple[str, str, str, str]:
        return (str(self.p1), str(self.p2), str(self.p3), str(self.p4))


def cz_twirl_sets() -> list[TwirlSet]:
    """All 16 twirl sets, found by brute force over signed Pauli quadruples."""
    found: dict[tuple[str, str], TwirlSet] = {}
    for l2, l4 in itertools.product(LETTERS, repeat=2):
        for l1, l3, s in itertools.product(LETTERS, LETTERS, (1, -1)):
            tw = TwirlSet(SignedPauli(l1, s), SignedPauli(l2), SignedPauli(l3), SignedPauli(l4))
            if tw.satisfies_identity():
                # global phase -1 on the outer pair would flip the sign; keep the first hit
                found.setdefault((l2, l4), tw)
    return [found[key] for key in sorted(found)]


_IH = np.kron(np.eye(2), H)


def twirled_cnot_layers(tw: TwirlSet) -> tuple[np.ndarray, np.ndarray]:
    """(pre, post) unitaries so that ``post @ CZ @ pre`` is the twirled CNOT.

    CNOT (control first) is ``(I (x) H) CZ (I (x) H)``.
    """
    return tw.before() @ _IH, _IH @ tw.after()


def _xz(letter: str) -> tuple[int, int]:
    return int(letter in "XY"), int(letter in "YZ")


_H_CONJ = {"I": "I", "X": "Z", "Y": "Y", "Z": "X"}


def cnot_frame_paulis(tw: TwirlSet) -> tuple[tuple[int, int, int, int], tuple[int, int, int, int]]:
    """Sign-free (x_c, z_c, x_t, z_t) bits of the twirl layers in the CNOT frame.

    The target-side Paulis are conjugated by the Hadamards that turn CZ into CNOT.
    """
    pre = _xz(tw.p2.letter) + _xz(_H_CONJ[tw.p4.letter])
    post = _xz(tw.p1.letter) + _xz(_H_CONJ[tw.p3.letter])
    return pre, post


def sample_twirls(num_gates: int, rng: np.random.Generator) -> list[TwirlSet]:
    """Uniform, independent draw from the 16 sets for each gate."""
    table = _TABLE
    return [table[i] for i in rng.integers(0, len(table), size=num_gates)]


_TABLE = cz_twirl_sets()

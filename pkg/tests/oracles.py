"""Brute-force reference implementations used as test oracles.

These build full operators with Kronecker products and Kraus sums and share
no code with the package's optimized paths.
"""

import itertools

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)
PAULI = [I2, X, Y, Z]


def kron(*ops):
    out = np.eye(1, dtype=complex)
    for o in ops:
        out = np.kron(out, o)
    return out


def local(op, q, num):
    """``op`` on factor ``q`` of a ``num``-factor register."""
    return kron(*[op if i == q else I2 for i in range(num)])


def cnot_meter_to(t, n):
    """Meter (last factor) controls X on system qubit ``t``."""
    num = n + 1
    return local(P0, n, num) + local(X, t, num) @ local(P1, n, num)


def depolarize_pair(rho, q1, q2, num, p):
    out = (1 - p) * rho
    for a, b in itertools.product(PAULI, repeat=2):
        op = local(a, q1, num) @ local(b, q2, num)
        out = out + (p / 16) * op @ rho @ op.conj().T
    return out


def joint_state(rho, k_bits, p=0.0, fold=1):
    n = len(k_bits)
    plus = np.full((2, 2), 0.5, dtype=complex)
    lam = np.kron(rho, plus)
    for _ in range(fold):
        for t in [i for i, b in enumerate(k_bits) if b]:
            u = cnot_meter_to(t, n)
            lam = u @ lam @ u.conj().T
            if p:
                lam = depolarize_pair(lam, n, t, n + 1, p)
    return lam


def readout_matrix(pairs):
    return kron(*[np.array([[1 - a, b], [a, 1 - b]]) for a, b in pairs])


def outcome_probs(lam, basis, readout_pairs=None):
    """``P[a, j]`` with ``j = 0`` for meter ``+`` (or ``+i``) and 1 for ``-``."""
    d = lam.shape[0] // 2
    if basis == "X":
        vecs = [np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)]
    else:
        vecs = [np.array([1, 1j]) / np.sqrt(2), np.array([1, -1j]) / np.sqrt(2)]
    out = np.zeros((d, 2))
    for a in range(d):
        ea = np.zeros(d)
        ea[a] = 1
        for j, v in enumerate(vecs):
            proj = np.outer(np.kron(ea, v), np.kron(ea, v).conj())
            out[a, j] = np.trace(proj @ lam).real
    if readout_pairs is not None:
        out = (readout_matrix(readout_pairs) @ out.ravel()).reshape(d, 2)
    return out


def simplex_projection_bisect(v, iters=200):
    """Projection onto the simplex by bisection on the shift (independent of sorting)."""
    v = np.asarray(v, dtype=float)
    lo, hi = v.min() - 1, v.max()
    for _ in range(iters):
        mid = (lo + hi) / 2
        if np.maximum(v - mid, 0).sum() > 1:
            lo = mid
        else:
            hi = mid
    return np.maximum(v - (lo + hi) / 2, 0)


def uhlmann_fidelity_scipy(a, b):
    from scipy.linalg import sqrtm

    s = sqrtm(a)
    return float(np.real(np.trace(sqrtm(s @ b @ s))) ** 2)


def random_state(n, rng, rank=None):
    d = 2**n
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return m / np.trace(m).real

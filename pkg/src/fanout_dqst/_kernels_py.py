"""Pure-numpy implementations of the compiled kernels (same contracts)."""

import numpy as np


def propagate_frames(targets, meter_bit, shots, ev_shot, ev_slot, ev_x, ev_z):
    """Push per-shot Pauli frames through a meter-controlled CNOT sequence.

    Events must be sorted by ``(shot, slot)``.  An event at slot ``g`` is
    applied right after gate ``g``; slot ``-1`` means before the first gate.
    Returns the final X and Z masks per shot (bit positions as in the codes).
    """
    x_out = np.zeros(shots, dtype=np.uint64)
    z_out = np.zeros(shots, dtype=np.uint64)
    if len(ev_shot) == 0:
        return x_out, z_out
    uniq, inv = np.unique(ev_shot, return_inverse=True)
    x = np.zeros(uniq.size, dtype=np.uint64)
    z = np.zeros(uniq.size, dtype=np.uint64)
    order = np.argsort(ev_slot, kind="stable")
    slots = ev_slot[order]
    bounds = np.searchsorted(slots, np.arange(-1, len(targets) + 1))
    mbit = np.uint64(1 << meter_bit)

    def apply(slot):
        sel = order[bounds[slot + 1]:bounds[slot + 2]]
        if sel.size:
            np.bitwise_xor.at(x, inv[sel], ev_x[sel])
            np.bitwise_xor.at(z, inv[sel], ev_z[sel])

    apply(-1)
    for g, t in enumerate(targets):
        tbit = np.uint64(1 << int(t))
        x ^= np.where(x & mbit, tbit, np.uint64(0))
        z ^= np.where(z & tbit, mbit, np.uint64(0))
        apply(g)
    x_out[uniq] = x
    z_out[uniq] = z
    return x_out, z_out


def pair_depolarize(rho, bit_a, bit_b, p):
    """``(1-p) rho + p * (I/4 (x) Tr_ab rho)`` on the qubits at two bit positions."""
    d = rho.shape[0]
    ma, mb = 1 << bit_a, 1 << bit_b
    base = np.arange(d)
    base = base[(base & (ma | mb)) == 0]
    idx = base[:, None] | np.array([0, ma, mb, ma | mb])[None, :]
    sub = rho[idx[:, :, None, None], idx[None, None, :, :]]
    tr = np.einsum("isjs->ij", sub)
    out = (1 - p) * rho
    for s in range(4):
        out[np.ix_(idx[:, s], idx[:, s])] += (p / 4) * tr
    return out

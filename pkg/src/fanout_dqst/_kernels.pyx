# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Contracts are identical to ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()


def propagate_frames(const int64_t[::1] targets, int meter_bit, Py_ssize_t shots,
                     const int64_t[::1] ev_shot, const int64_t[::1] ev_slot,
                     const uint64_t[::1] ev_x, const uint64_t[::1] ev_z):
    cdef Py_ssize_t n_gates = targets.shape[0]
    cdef Py_ssize_t n_ev = ev_shot.shape[0]
    cdef Py_ssize_t e = 0, g, cur
    cdef int64_t s
    cdef uint64_t x, z, tbit
    cdef uint64_t mbit = (<uint64_t>1) << meter_bit
    x_out = np.zeros(shots, dtype=np.uint64)
    z_out = np.zeros(shots, dtype=np.uint64)
    cdef uint64_t[::1] xo = x_out
    cdef uint64_t[::1] zo = z_out
    with nogil:
        while e < n_ev:
            s = ev_shot[e]
            cur = ev_slot[e]
            x = 0
            z = 0
            while e < n_ev and ev_shot[e] == s and ev_slot[e] == cur:
                x ^= ev_x[e]
                z ^= ev_z[e]
                e += 1
            for g in range(cur + 1, n_gates):
                tbit = (<uint64_t>1) << targets[g]
                if x & mbit:
                    x ^= tbit
                if z & tbit:
                    z ^= mbit
                while e < n_ev and ev_shot[e] == s and ev_slot[e] == g:
                    x ^= ev_x[e]
                    z ^= ev_z[e]
                    e += 1
            xo[s] = x
            zo[s] = z
    return x_out, z_out


def pair_depolarize(const double complex[:, ::1] rho, int bit_a, int bit_b, double p):
    cdef Py_ssize_t d = rho.shape[0]
    cdef Py_ssize_t ma = (<Py_ssize_t>1) << bit_a
    cdef Py_ssize_t mb = (<Py_ssize_t>1) << bit_b
    cdef Py_ssize_t mask = ma | mb
    cdef Py_ssize_t offs[4]
    offs[0] = 0
    offs[1] = ma
    offs[2] = mb
    offs[3] = ma | mb
    cdef Py_ssize_t i, j, s, t
    cdef double complex tr
    cdef double keep = 1.0 - p
    cdef double mix = p / 4.0
    out = np.empty((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    with nogil:
        for i in range(d):
            if i & mask:
                continue
            for j in range(d):
                if j & mask:
                    continue
                tr = rho[i, j] + rho[i | ma, j | ma] + rho[i | mb, j | mb] + rho[i | mask, j | mask]
                for s in range(4):
                    for t in range(4):
                        if s == t:
                            o[i | offs[s], j | offs[t]] = keep * rho[i | offs[s], j | offs[t]] + mix * tr
                        else:
                            o[i | offs[s], j | offs[t]] = keep * rho[i | offs[s], j | offs[t]]
    return out

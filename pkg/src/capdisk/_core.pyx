# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Philox4x64-10 blocks and paired point geometry.

Bit-compatible with the numpy twins in ``_pykernels`` (same operation
order, IEEE-exact primitives only; built with -ffp-contract=off).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fmax, sqrt
from libc.stdint cimport uint64_t

cnp.import_array()

BACKEND_NAME = "cython"

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t capdisk_mulhilo64(uint64_t a, uint64_t b, uint64_t *hi) {
        __uint128_t p = (__uint128_t)a * (__uint128_t)b;
        *hi = (uint64_t)(p >> 64);
        return (uint64_t)p;
    }
    """
    uint64_t capdisk_mulhilo64(uint64_t a, uint64_t b, uint64_t *hi) nogil

cdef uint64_t M0 = 0xD2E7470EE14C6C93ULL
cdef uint64_t M1 = 0xCA5A826395121157ULL
cdef uint64_t W0 = 0x9E3779B97F4A7C15ULL
cdef uint64_t W1 = 0xBB67AE8584CAA73BULL


def philox4x64(counters, key):
    """Philox4x64-10 block function; see ``_pykernels.philox4x64``."""
    cdef cnp.ndarray[cnp.uint64_t, ndim=2, mode="c"] ctr = \
        np.ascontiguousarray(counters, dtype=np.uint64)
    cdef uint64_t key0 = <uint64_t> int(key[0])
    cdef uint64_t key1 = <uint64_t> int(key[1])
    cdef Py_ssize_t n = ctr.shape[0]
    cdef cnp.ndarray[cnp.uint64_t, ndim=2, mode="c"] out = \
        np.empty((n, 4), dtype=np.uint64)

    cdef Py_ssize_t i
    cdef int r
    cdef uint64_t c0, c1, c2, c3, k0, k1, hi0, hi1, lo0, lo1
    with nogil:
        for i in range(n):
            c0 = ctr[i, 0]
            c1 = ctr[i, 1]
            c2 = ctr[i, 2]
            c3 = ctr[i, 3]
            k0 = key0
            k1 = key1
            for r in range(10):
                lo0 = capdisk_mulhilo64(M0, c0, &hi0)
                lo1 = capdisk_mulhilo64(M1, c2, &hi1)
                c0 = hi1 ^ c1 ^ k0
                c1 = lo1
                c2 = hi0 ^ c3 ^ k1
                c3 = lo0
                k0 = k0 + W0
                k1 = k1 + W1
            out[i, 0] = c0
            out[i, 1] = c1
            out[i, 2] = c2
            out[i, 3] = c3
    return out


def pair_geometry(u, double r_s, double cos_theta_max, double rho_max,
                  double h_p, double r_earth):
    """Paired squared distances/displacements; see ``_pykernels.pair_geometry``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] uu = \
        np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] d2_sph = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] d2_pln = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] disp2 = np.empty(n)

    cdef double omc = 1.0 - cos_theta_max
    cdef double c0 = r_earth * r_earth + r_s * r_s
    cdef double two_re_rs = 2.0 * r_earth * r_s
    cdef double dz_p = h_p - r_earth
    cdef double dz2_p = dz_p * dz_p

    cdef Py_ssize_t i
    cdef double ct, s2, sin_t, rho, dr, dz
    with nogil:
        for i in range(n):
            ct = 1.0 - uu[i] * omc
            s2 = 1.0 - ct * ct
            s2 = fmax(s2, 0.0)
            sin_t = sqrt(s2)
            rho = sqrt(uu[i]) * rho_max
            d2_sph[i] = c0 - two_re_rs * ct
            d2_pln[i] = rho * rho + dz2_p
            dr = r_s * sin_t - rho
            dz = r_s * ct - h_p
            disp2[i] = dr * dr + dz * dz
    return d2_sph, d2_pln, disp2

"""Pure-numpy implementations of the hot kernels.

These are the fallback twins of the compiled kernels in ``_core``; both
backends produce bit-identical output (integer kernels are exact, float
kernels use the same operation order and IEEE-exact primitives only).
"""

import numpy as np

BACKEND_NAME = "python"

# Philox4x64-10 round and Weyl constants (Random123 convention).
_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)

_U32_MASK = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


def _mulhilo(a, b):
    """128-bit product of uint64 scalar ``a`` and uint64 array ``b``.

    Returns (hi, lo) words, computed with 32-bit limbs since numpy has no
    native 128-bit integer.
    """
    a_hi = a >> _SHIFT32
    a_lo = a & _U32_MASK
    b_hi = b >> _SHIFT32
    b_lo = b & _U32_MASK

    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi

    carry = ((ll >> _SHIFT32) + (lh & _U32_MASK) + (hl & _U32_MASK)) >> _SHIFT32
    hi = hh + (lh >> _SHIFT32) + (hl >> _SHIFT32) + carry
    lo = a * b
    return hi, lo


def philox4x64(counters, key):
    """Philox4x64-10 block function.

    Parameters
    ----------
    counters : (n, 4) uint64 array
        One 256-bit counter per row.
    key : (2,) uint64 array
        128-bit key.

    Returns
    -------
    (n, 4) uint64 array of output words.
    """
    counters = np.ascontiguousarray(counters, dtype=np.uint64)
    c0 = counters[:, 0].copy()
    c1 = counters[:, 1].copy()
    c2 = counters[:, 2].copy()
    c3 = counters[:, 3].copy()
    # Round keys precomputed in Python ints: numpy warns on scalar overflow.
    mask = (1 << 64) - 1
    k0s = [np.uint64((int(key[0]) + r * int(_W0)) & mask) for r in range(10)]
    k1s = [np.uint64((int(key[1]) + r * int(_W1)) & mask) for r in range(10)]

    for r in range(10):
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0 = hi1 ^ c1 ^ k0s[r]
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1s[r]
        c3 = lo0

    out = np.empty_like(counters)
    out[:, 0] = c0
    out[:, 1] = c1
    out[:, 2] = c2
    out[:, 3] = c3
    return out


def pair_geometry(u, r_s, cos_theta_max, rho_max, h_p, r_earth):
    """Map shared uniforms to paired squared distances and displacements.

    For each uniform u the spherical point sits at polar angle
    arccos(1 - u*(1 - cos_theta_max)) on the radius-``r_s`` cap and the
    planar point at horizontal radius sqrt(u)*rho_max on the disk at axis
    height ``h_p``; the shared azimuth cancels from every output.

    Returns
    -------
    (d2_sph, d2_pln, disp2) : three float64 arrays
        Squared user-to-point distances for both models and the squared
        distance between the paired points (after the common rotation).
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    omc = 1.0 - cos_theta_max
    c0 = r_earth * r_earth + r_s * r_s
    two_re_rs = 2.0 * r_earth * r_s
    dz_p = h_p - r_earth
    dz2_p = dz_p * dz_p

    ct = 1.0 - u * omc
    s2 = 1.0 - ct * ct
    s2 = np.maximum(s2, 0.0)
    sin_t = np.sqrt(s2)
    rho = np.sqrt(u) * rho_max

    d2_sph = c0 - two_re_rs * ct
    d2_pln = rho * rho + dz2_p
    dr = r_s * sin_t - rho
    dz = r_s * ct - h_p
    disp2 = dr * dr + dz * dz
    return d2_sph, d2_pln, disp2

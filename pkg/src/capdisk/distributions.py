"""Analytic distance laws, squared-distance moments, and the optimal altitude.

These closed forms are the analysis half of the toolkit: they back the
joint simulation-analysis estimation mode and serve as oracles for the
Monte Carlo paths. The planar law uses the Earth-center convention for
``h_p`` throughout (user-to-plane height is ``h_p - R_earth``).
"""

import math
from dataclasses import dataclass

import numpy as np

from capdisk.errors import DomainError
from capdisk.geom import EARTH, EarthConstants


def cdf_spherical(d, r_s, theta_max, earth: EarthConstants = EARTH):
    """CDF of the user-to-point distance on a uniform cap.

    F(d) = (1 - (R**2 + r_s**2 - d**2) / (2*R*r_s)) / (1 - cos(theta_max))
    on [r_s - R, sqrt(R**2 + r_s**2 - 2*R*r_s*cos(theta_max))], clamped to
    0/1 outside the support.
    """
    re = earth.earth_radius
    raw = (1.0 - (re * re + r_s * r_s - np.square(d)) / (2.0 * re * r_s)) / (
        1.0 - np.cos(theta_max)
    )
    return np.clip(raw, 0.0, 1.0)


def cdf_planar(d, rho_max, h_p, earth: EarthConstants = EARTH):
    """CDF of the user-to-point distance on a uniform disk at axis height h_p.

    F(d) = (d**2 - (h_p - R)**2) / rho_max**2 on
    [h_p - R, sqrt((h_p - R)**2 + rho_max**2)], clamped outside.
    """
    dz = h_p - earth.earth_radius
    raw = (np.square(d) - dz * dz) / (rho_max * rho_max)
    return np.clip(raw, 0.0, 1.0)


def mean_sq_distance_spherical(r_s, theta_max, earth: EarthConstants = EARTH):
    """E[d**2] on the cap: R**2 + r_s**2 - R*r_s*(1 + cos(theta_max)).

    For a line-of-sight cap (cos(theta_max) = R/r_s) this collapses to
    r_s*(r_s - R).
    """
    re = earth.earth_radius
    return re * re + r_s * r_s - re * r_s * (1.0 + np.cos(theta_max))


def mean_sq_distance_planar(rho_max, h_p, earth: EarthConstants = EARTH):
    """E[d**2] on the disk: (h_p - R)**2 + rho_max**2 / 2."""
    dz = h_p - earth.earth_radius
    return dz * dz + 0.5 * rho_max * rho_max


def optimal_altitude(r_s, theta_max, rho_max, earth: EarthConstants = EARTH):
    """Axis height equalizing the two mean squared distances.

    h_opt = R + sqrt(R**2 - rho_max**2/2 - (1 + cos(theta_max))*r_s*R + r_s**2);
    raises if the radicand is negative (no equalizing altitude above the
    user exists).
    """
    re = earth.earth_radius
    radicand = (
        re * re
        - 0.5 * rho_max * rho_max
        - (1.0 + math.cos(theta_max)) * r_s * re
        + r_s * r_s
    )
    if radicand < 0.0:
        raise DomainError(
            f"no equalizing altitude: radicand {radicand} < 0 for "
            f"r_s={r_s}, theta_max={theta_max}, rho_max={rho_max}"
        )
    return re + math.sqrt(radicand)


@dataclass(frozen=True)
class DistanceLaw:
    """A distance distribution with its support, for sampling and checks."""

    kind: str
    d_min: float
    d_max: float
    _cdf: callable
    _icdf: callable

    @classmethod
    def spherical(cls, r_s, theta_max, earth: EarthConstants = EARTH):
        re = earth.earth_radius
        d_min = r_s - re
        d_max = math.sqrt(re * re + r_s * r_s - 2.0 * re * r_s * math.cos(theta_max))

        def icdf(q):
            d2 = d_min * d_min + np.asarray(q) * (d_max * d_max - d_min * d_min)
            return np.sqrt(d2)

        return cls(
            kind="spherical",
            d_min=d_min,
            d_max=d_max,
            _cdf=lambda d: cdf_spherical(d, r_s, theta_max, earth),
            _icdf=icdf,
        )

    @classmethod
    def planar(cls, rho_max, h_p, earth: EarthConstants = EARTH):
        dz = h_p - earth.earth_radius
        if dz <= 0:
            raise DomainError(f"h_p={h_p} must exceed the Earth radius")
        d_min = dz
        d_max = math.sqrt(dz * dz + rho_max * rho_max)

        def icdf(q):
            d2 = dz * dz + np.asarray(q) * rho_max * rho_max
            return np.sqrt(d2)

        return cls(
            kind="planar",
            d_min=d_min,
            d_max=d_max,
            _cdf=lambda d: cdf_planar(d, rho_max, h_p, earth),
            _icdf=icdf,
        )

    def cdf(self, d):
        return self._cdf(d)


def sample_distance(law: DistanceLaw, u):
    """Inverse-CDF sample: cdf(sample_distance(u)) == u on [0, 1)."""
    uu = np.asarray(u)
    if not (np.all(uu >= 0.0) and np.all(uu < 1.0)):
        raise DomainError(f"u must lie in [0, 1), got {u}")
    return law._icdf(uu)

"""Coordinate systems, Earth/cap geometry, and user-to-point distances.

Conventions shared by the whole package: lengths in km, angles in radians,
double precision. The typical user sits at Cartesian (0, 0, earth_radius)
on the zenith axis; planar axis heights (``axis_height``, ``h_p``) are
measured from the Earth center along that axis, not from the ground.
All functions accept scalars or numpy arrays in their numeric fields.
"""

import math
from dataclasses import dataclass

import numpy as np

from capdisk.errors import DomainError

SPEED_OF_LIGHT_KM_S = 299_792.458


@dataclass(frozen=True)
class EarthConstants:
    """Earth model; the default radius is the mean radius in km."""

    earth_radius: float = 6371.0

    def __post_init__(self):
        if not self.earth_radius > 0:
            raise DomainError(f"earth_radius must be positive, got {self.earth_radius}")


EARTH = EarthConstants()


@dataclass(frozen=True)
class SphericalPoint:
    """Point on a sphere: radius (km), azimuth in [0, 2pi), polar in [0, pi]."""

    radius: float
    azimuth: float
    polar: float


@dataclass(frozen=True)
class PlanarPoint:
    """Point on a horizontal disk in cylindrical coordinates.

    ``axis_height`` is the distance from the Earth center along the user's
    zenith axis (km).
    """

    horizontal_radius: float
    azimuth: float
    axis_height: float


@dataclass(frozen=True)
class CartesianPoint:
    x: float
    y: float
    z: float


def cap_area(r_s, theta_max):
    """Area of a spherical cap: 2*pi*r_s**2*(1 - cos(theta_max)).

    Parameters
    ----------
    r_s : sphere radius in km, > 0
    theta_max : cap polar angle in radians, within (0, pi]
    """
    if not np.all(np.asarray(r_s) > 0):
        raise DomainError(f"r_s must be positive, got {r_s}")
    t = np.asarray(theta_max)
    if not (np.all(t > 0) and np.all(t <= math.pi)):
        raise DomainError(f"theta_max must lie in (0, pi], got {theta_max}")
    return 2.0 * np.pi * r_s**2 * (1.0 - np.cos(theta_max))


def spherical_to_cartesian(p: SphericalPoint) -> CartesianPoint:
    """(r sin(theta) cos(phi), r sin(theta) sin(phi), r cos(theta))."""
    st = np.sin(p.polar)
    return CartesianPoint(
        x=p.radius * st * np.cos(p.azimuth),
        y=p.radius * st * np.sin(p.azimuth),
        z=p.radius * np.cos(p.polar),
    )


def planar_to_cartesian(p: PlanarPoint) -> CartesianPoint:
    """(rho cos(phi), rho sin(phi), axis_height)."""
    return CartesianPoint(
        x=p.horizontal_radius * np.cos(p.azimuth),
        y=p.horizontal_radius * np.sin(p.azimuth),
        z=p.axis_height * np.ones_like(np.asarray(p.horizontal_radius, dtype=float)),
    )


def user_distance_spherical(theta, r_s, earth: EarthConstants = EARTH):
    """Distance from the user at (0, 0, R_earth) to a cap point at polar theta.

    sqrt(R_earth**2 + r_s**2 - 2*R_earth*r_s*cos(theta)); strictly
    increasing in theta on [0, pi].
    """
    t = np.asarray(theta)
    if not (np.all(t >= 0) and np.all(t <= math.pi)):
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    re = earth.earth_radius
    return np.sqrt(re * re + r_s * r_s - 2.0 * re * r_s * np.cos(theta))


def user_distance_planar(rho, h_p, earth: EarthConstants = EARTH):
    """Distance from the user to a disk point: sqrt(rho**2 + (h_p - R_earth)**2)."""
    if not np.all(np.asarray(rho) >= 0):
        raise DomainError(f"rho must be nonnegative, got {rho}")
    dz = h_p - earth.earth_radius
    return np.sqrt(rho * rho + dz * dz)


def squared_user_distance(p, earth: EarthConstants = EARTH):
    """Squared user-to-point distance for any point type."""
    if isinstance(p, SphericalPoint):
        re = earth.earth_radius
        return re * re + p.radius * p.radius - 2.0 * re * p.radius * np.cos(p.polar)
    if isinstance(p, PlanarPoint):
        dz = p.axis_height - earth.earth_radius
        return p.horizontal_radius * p.horizontal_radius + dz * dz
    if isinstance(p, CartesianPoint):
        dz = p.z - earth.earth_radius
        return p.x * p.x + p.y * p.y + dz * dz
    raise TypeError(f"unsupported point type {type(p).__name__}")


def elevation_deg(p, earth: EarthConstants = EARTH):
    """Elevation angle of a point above the user's horizon plane, in degrees.

    0 deg on the horizon plane, 90 deg at zenith; needed by channel models
    whose line-of-sight probability is parameterized in degrees.
    """
    if isinstance(p, SphericalPoint):
        height = p.radius * np.cos(p.polar) - earth.earth_radius
    elif isinstance(p, PlanarPoint):
        height = (p.axis_height - earth.earth_radius) * np.ones_like(
            np.asarray(p.horizontal_radius, dtype=float)
        )
    elif isinstance(p, CartesianPoint):
        height = p.z - earth.earth_radius
    else:
        raise TypeError(f"unsupported point type {type(p).__name__}")
    d = np.sqrt(squared_user_distance(p, earth))
    ratio = np.clip(height / d, -1.0, 1.0)
    return np.degrees(np.arcsin(ratio))

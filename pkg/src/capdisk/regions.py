"""Deployment-region specifications and their reduction to a cap angle.

A region is given either as the user's line-of-sight range, as the central
angle of a zenith-pointing antenna main lobe, or as a cap area; all three
reduce to the cap polar angle theta_max.
"""

import math
from dataclasses import dataclass

import numpy as np

from capdisk.errors import DomainError
from capdisk.geom import EARTH, EarthConstants, user_distance_spherical
from capdisk.pointgen import los_theta_max


@dataclass(frozen=True)
class RegionSpec:
    """One of: line-of-sight ('los'), beam angle ('beam'), cap area ('area')."""

    variant: str
    value: float | None = None

    def __post_init__(self):
        if self.variant not in ("los", "beam", "area"):
            raise DomainError(f"unknown region variant {self.variant!r}")
        if self.variant == "los" and self.value is not None:
            raise DomainError("los region takes no value")
        if self.variant == "beam" and not (0.0 < (self.value or 0.0) < 2.0 * math.pi):
            raise DomainError(f"beam angle must lie in (0, 2*pi), got {self.value}")
        if self.variant == "area" and not (self.value or 0.0) > 0.0:
            raise DomainError(f"cap area must be positive, got {self.value}")


@dataclass(frozen=True)
class ResolvedRegion:
    theta_max: float
    d_max: float | None = None


def theta_max_from_beam(psi, r_s, earth: EarthConstants = EARTH) -> ResolvedRegion:
    """Cap angle subtended by a zenith beam of central main-lobe angle psi.

    The beam edge meets the sphere at the maximum user-to-point distance
    d_max = R*cos(pi - psi/2) + sqrt(R**2*cos(pi - psi/2)**2 + r_s**2 - R**2)
    (positive root of the law-of-cosines quadratic, R the Earth radius),
    and theta_max follows from the triangle user / Earth center / point.
    Beams that see past the horizon are rejected rather than clipped.
    """
    if not (0.0 < psi < 2.0 * math.pi):
        raise DomainError(f"psi must lie in (0, 2*pi), got {psi}")
    re = earth.earth_radius
    if not r_s > re:
        raise DomainError(f"r_s={r_s} must exceed the Earth radius {re}")
    c = re * math.cos(math.pi - psi / 2.0)
    d_max = c + math.sqrt(c * c + r_s * r_s - re * re)
    cos_tm = (re * re + r_s * r_s - d_max * d_max) / (2.0 * re * r_s)
    theta_max = math.acos(min(1.0, max(-1.0, cos_tm)))
    horizon = los_theta_max(r_s, earth)
    if theta_max > horizon * (1.0 + 1e-12):
        raise DomainError(
            f"beam psi={psi} resolves to theta_max={theta_max:.6f} past the "
            f"horizon bound {horizon:.6f}"
        )
    return ResolvedRegion(theta_max=min(theta_max, horizon), d_max=d_max)


def theta_max_from_area(area, r_s) -> float:
    """Cap angle for a given cap area: arccos(1 - A / (2*pi*r_s**2))."""
    hemisphere = 2.0 * math.pi * r_s * r_s
    if not (0.0 < area <= hemisphere):
        raise DomainError(f"area must lie in (0, {hemisphere}], got {area}")
    return math.acos(1.0 - area / hemisphere)


def beam_from_theta_max(theta_max, r_s, earth: EarthConstants = EARTH) -> float:
    """Inverse of ``theta_max_from_beam``, for round-trip checks."""
    horizon = los_theta_max(r_s, earth)
    if not (0.0 < theta_max <= horizon * (1.0 + 1e-12)):
        raise DomainError(
            f"theta_max={theta_max} outside (0, {horizon}] for r_s={r_s}"
        )
    re = earth.earth_radius
    d_max = float(user_distance_spherical(theta_max, r_s, earth))
    cos_half = (d_max * d_max + re * re - r_s * r_s) / (2.0 * d_max * re)
    return 2.0 * (math.pi - math.acos(min(1.0, max(-1.0, cos_half))))


def resolve(region: RegionSpec, r_s, earth: EarthConstants = EARTH) -> ResolvedRegion:
    """Reduce any region specification to the cap angle."""
    if region.variant == "los":
        return ResolvedRegion(theta_max=float(los_theta_max(r_s, earth)))
    if region.variant == "beam":
        return theta_max_from_beam(region.value, r_s, earth)
    return ResolvedRegion(theta_max=theta_max_from_area(region.value, r_s))

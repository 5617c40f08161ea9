"""Paired point-process generation on a spherical cap and a planar disk.

A single pair of uniforms (u, v) drives both models: the spherical point
takes polar angle arccos(1 - u*(1 - cos(theta_max))) and the planar point
horizontal radius sqrt(u)*rho_max, with a shared azimuth 2*pi*v. Under the
coupling rho_max = r_s*sin(theta_max) the two processes are homogeneous on
their supports and coincide as r_s grows with the cap area held fixed.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from capdisk import rng as rng_mod
from capdisk.errors import DomainError
from capdisk.geom import EARTH, EarthConstants, PlanarPoint, SphericalPoint

_RHO_COUPLING_RTOL = 1e-9


@dataclass(frozen=True)
class DeploymentParams:
    """Geometry of one paired deployment.

    Invariants enforced at construction: rho_max = r_s*sin(theta_max),
    r_s*cos(theta_max) < h_p < r_s, n_points >= 1, 0 < theta_max <= pi/2.
    """

    r_s: float
    theta_max: float
    rho_max: float
    h_p: float
    n_points: int

    def __post_init__(self):
        if not (0.0 < self.theta_max <= math.pi / 2.0):
            raise DomainError(f"theta_max must lie in (0, pi/2], got {self.theta_max}")
        if self.n_points < 1:
            raise DomainError(f"n_points must be >= 1, got {self.n_points}")
        coupled = self.r_s * math.sin(self.theta_max)
        if not math.isclose(self.rho_max, coupled, rel_tol=_RHO_COUPLING_RTOL):
            raise DomainError(
                f"rho_max={self.rho_max} violates the coupling "
                f"r_s*sin(theta_max)={coupled}"
            )
        lo = self.r_s * math.cos(self.theta_max)
        if not (lo < self.h_p < self.r_s):
            raise DomainError(
                f"h_p={self.h_p} outside the open interval ({lo}, {self.r_s})"
            )

    @classmethod
    def coupled(cls, r_s, theta_max, h_p, n_points) -> "DeploymentParams":
        """Construct with rho_max derived from the coupling."""
        return cls(
            r_s=r_s,
            theta_max=theta_max,
            rho_max=r_s * math.sin(theta_max),
            h_p=h_p,
            n_points=n_points,
        )


@dataclass(frozen=True)
class PairedDeployment:
    """The shared uniforms plus the two point sets they induce."""

    params: DeploymentParams
    u: np.ndarray
    v: np.ndarray
    spherical: SphericalPoint = field(init=False)
    planar: PlanarPoint = field(init=False)

    def __post_init__(self):
        p = self.params
        phi = 2.0 * np.pi * self.v
        theta = sample_polar(self.u, p.theta_max)
        rho = sample_horizontal_radius(self.u, p.rho_max)
        object.__setattr__(
            self, "spherical", SphericalPoint(radius=p.r_s, azimuth=phi, polar=theta)
        )
        object.__setattr__(
            self,
            "planar",
            PlanarPoint(horizontal_radius=rho, azimuth=phi, axis_height=p.h_p),
        )

    def __len__(self) -> int:
        return self.u.shape[0]

    def side(self, name: str):
        if name == "spherical":
            return self.spherical
        if name == "planar":
            return self.planar
        raise ValueError(f"side must be 'spherical' or 'planar', got {name!r}")


def sample_polar(u, theta_max):
    """Inverse-transform polar angle: arccos(1 - u*(1 - cos(theta_max))).

    u = 0 maps to the cap center, u = 1 to the rim; the generator itself
    only ever produces u in [0, 1).
    """
    uu = np.asarray(u, dtype=np.float64)
    if not (np.all(uu >= 0.0) and np.all(uu <= 1.0)):
        raise DomainError(f"u must lie in [0, 1], got {u}")
    if not (0.0 < theta_max <= math.pi / 2.0):
        raise DomainError(f"theta_max must lie in (0, pi/2], got {theta_max}")
    arg = 1.0 - uu * (1.0 - np.cos(theta_max))
    return np.arccos(np.clip(arg, -1.0, 1.0))


def sample_horizontal_radius(u, rho_max):
    """Inverse-transform disk radius: sqrt(u) * rho_max."""
    return np.sqrt(u) * rho_max


def generate_pair(
    params: DeploymentParams,
    rng: rng_mod.RngSpec,
    start: int = 0,
    stop: int | None = None,
) -> PairedDeployment:
    """Generate the paired deployment for point indices [start, stop).

    The optional index window exists for parallel generation: concatenating
    windows reproduces the full run bit for bit.
    """
    if stop is None:
        stop = params.n_points
    if not (0 <= start <= stop <= params.n_points):
        raise DomainError(f"invalid index window [{start}, {stop})")
    u, v = rng_mod.point_uniforms(rng, stop - start, start=start)
    return PairedDeployment(params=params, u=u, v=v)


def los_theta_max(r_s, earth: EarthConstants = EARTH):
    """Polar angle of the cap visible above the user's horizon: arccos(R_earth/r_s)."""
    if not np.all(np.asarray(r_s) > earth.earth_radius):
        raise DomainError(f"r_s={r_s} must exceed the Earth radius {earth.earth_radius}")
    return np.arccos(earth.earth_radius / r_s)


@dataclass(frozen=True)
class HomogeneityResult:
    statistic: float
    p_value: float
    dof: int
    cells: int


def _factor_cells(cells: int) -> tuple[int, int]:
    for bands in range(int(math.isqrt(cells)), 0, -1):
        if cells % bands == 0:
            return bands, cells // bands
    raise DomainError(f"cannot factor cell count {cells}")


def homogeneity_test(
    pair: PairedDeployment, side: str, cells: int
) -> HomogeneityResult:
    """Pearson chi-square test of area-uniformity over equal-area cells.

    The support is split into ``cells`` equal-area regions (polar bands x
    azimuth sectors for the cap, annuli x sectors for the disk; band edges
    follow cos(theta_k) = 1 - (k/K)*(1 - cos(theta_max)) and
    rho_k = rho_max*sqrt(k/K)). Counts are compared against the uniform
    expectation with ``cells - 1`` degrees of freedom.
    """
    if cells < 2:
        raise DomainError(f"need at least 2 cells, got {cells}")
    n = len(pair)
    expected = n / cells
    if expected < 5.0:
        raise DomainError(
            f"expected count per cell is {expected:.2f} < 5; use more points"
        )
    n_bands, n_sectors = _factor_cells(cells)
    p = pair.params
    if side == "spherical":
        frac = (1.0 - np.cos(pair.spherical.polar)) / (1.0 - math.cos(p.theta_max))
    else:
        rho = pair.side(side).horizontal_radius
        frac = (rho / p.rho_max) ** 2
    band = np.minimum((frac * n_bands).astype(np.int64), n_bands - 1)
    phi = pair.side(side).azimuth
    sector = np.minimum(
        (phi / (2.0 * np.pi) * n_sectors).astype(np.int64), n_sectors - 1
    )
    counts = np.bincount(band * n_sectors + sector, minlength=cells)
    statistic = float(np.sum((counts - expected) ** 2) / expected)
    dof = cells - 1
    p_value = float(stats.chi2.sf(statistic, dof))
    return HomogeneityResult(statistic=statistic, p_value=p_value, dof=dof, cells=cells)


def biased_polar_reference(params: DeploymentParams, rng: rng_mod.RngSpec):
    """Deliberately non-area-uniform cap sampler (theta = u * theta_max).

    Exists only to verify that the homogeneity test has power; never used
    by the generators.
    """
    u, v = rng_mod.point_uniforms(rng, params.n_points)
    return SphericalPoint(
        radius=params.r_s, azimuth=2.0 * np.pi * v, polar=u * params.theta_max
    )


def similarity_displacement(
    cap_area_km2: float, r_s: float, n_points: int, rng: rng_mod.RngSpec
) -> float:
    """Max paired displacement at fixed cap area, after centering both surfaces.

    The cap is translated so its apex (theta = 0) meets the disk center
    (rho = 0); the returned value is max_n |x_n - y_n| in km. With the cap
    area held fixed this shrinks to zero as r_s grows.
    """
    area_max = 2.0 * np.pi * r_s * r_s
    if not (0.0 < cap_area_km2 <= area_max):
        raise DomainError(
            f"cap area {cap_area_km2} outside (0, {area_max}] for r_s={r_s}"
        )
    cos_tm = 1.0 - cap_area_km2 / area_max
    theta_max = math.acos(cos_tm)
    rho_max = r_s * math.sin(theta_max)
    u, _ = rng_mod.point_uniforms(rng, n_points)
    cos_t = 1.0 - u * (1.0 - cos_tm)
    sin_t = np.sqrt(np.maximum(1.0 - cos_t * cos_t, 0.0))
    rho = np.sqrt(u) * rho_max
    dr = r_s * sin_t - rho
    dz = r_s * (cos_t - 1.0)
    return float(np.max(np.sqrt(dr * dr + dz * dz)))


_CSV_HEADER = "n,u,v,theta_s,phi,rho_p,x_s,y_s,z_s,x_p,y_p,z_p"


def write_points_csv(pair: PairedDeployment, path) -> None:
    """Dump the paired point set with 17 significant digits per value."""
    sph = pair.spherical
    pln = pair.planar
    st = np.sin(sph.polar)
    xs = sph.radius * st * np.cos(sph.azimuth)
    ys = sph.radius * st * np.sin(sph.azimuth)
    zs = sph.radius * np.cos(sph.polar)
    xp = pln.horizontal_radius * np.cos(pln.azimuth)
    yp = pln.horizontal_radius * np.sin(pln.azimuth)
    zp = np.full_like(xp, pln.axis_height)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_CSV_HEADER + "\n")
        for i in range(len(pair)):
            vals = (
                pair.u[i], pair.v[i], sph.polar[i], sph.azimuth[i],
                pln.horizontal_radius[i], xs[i], ys[i], zs[i], xp[i], yp[i], zp[i],
            )
            fh.write(str(i) + "," + ",".join(f"{x:.17g}" for x in vals) + "\n")

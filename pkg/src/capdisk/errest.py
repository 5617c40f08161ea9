"""Relative-error estimation between the paired models.

Two execution modes: the complete simulation mode (CSM) sweeps the planar
axis height over an equally spaced grid inside its admissible interval and
reports the minimizing altitude; the joint simulation-analysis mode (JSAM)
evaluates only at the closed-form equalizing altitude. Each inner
iteration regenerates the pair from fresh counter-addressed uniforms, so
estimates are bit-identical for a given config at any worker count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from capdisk import backend
from capdisk import metrics as metrics_mod
from capdisk import rng as rng_mod
from capdisk.distributions import optimal_altitude
from capdisk.errors import ConfigError, DomainError
from capdisk.geom import EARTH, EarthConstants
from capdisk.metrics import ChannelModel, MetricId, TransportNormalization

# Fraction of zero-reference iterations above which an estimate is flagged.
EXCLUSION_LIMIT = 0.01

_STREAM_DOMAIN = "errest"


@dataclass(frozen=True)
class EstimationConfig:
    """Inputs of one error-estimation run."""

    r_s: float
    theta_max: float
    metric: MetricId
    n_inner: int
    n_outer: int
    mode: str
    seed: int
    channel: ChannelModel | None = None
    n_points: int = 20
    mc_draws: int = 64
    stream_id: int = 0
    t1_normalization: TransportNormalization = TransportNormalization.TO_USER
    earth: EarthConstants = field(default=EARTH)

    def __post_init__(self):
        object.__setattr__(self, "metric", MetricId(self.metric))
        if self.mode not in ("csm", "jsam"):
            raise ConfigError(f"mode must be 'csm' or 'jsam', got {self.mode!r}")
        if self.n_inner < 1:
            raise ConfigError(f"n_inner must be >= 1, got {self.n_inner}")
        if self.mode == "csm" and self.n_outer < 1:
            raise ConfigError(f"n_outer must be >= 1, got {self.n_outer}")
        if self.n_points < 1:
            raise ConfigError(f"n_points must be >= 1, got {self.n_points}")
        if not (0.0 < self.theta_max <= math.pi / 2.0):
            raise DomainError(f"theta_max={self.theta_max} outside (0, pi/2]")
        if self.r_s <= self.earth.earth_radius:
            raise DomainError(f"r_s={self.r_s} must exceed the Earth radius")

    @property
    def rho_max(self) -> float:
        return self.r_s * math.sin(self.theta_max)

    @property
    def h_s(self) -> float:
        return self.r_s - self.earth.earth_radius

    def resolved_channel(self) -> ChannelModel | None:
        if not self.metric.is_system_level:
            return None
        return ChannelModel.for_altitude(self.h_s, self.channel)


@dataclass(frozen=True)
class AltitudeError:
    """Mean relative error at one planar axis height."""

    h_p: float
    rel_err: float
    excluded: int
    n_used: int


@dataclass(frozen=True)
class Provenance:
    seed: int
    n_inner: int
    n_outer: int
    mode: str
    metric: MetricId
    n_points: int
    mc_draws: int


@dataclass(frozen=True)
class ErrorEstimate:
    """Minimum relative error, the altitude achieving it, and the sweep."""

    e_min: float
    h_opt: float
    per_altitude: tuple
    provenance: Provenance

    @property
    def reliable(self) -> bool:
        """False if any altitude excluded more than 1% of its iterations."""
        return all(
            a.excluded <= EXCLUSION_LIMIT * (a.excluded + a.n_used)
            for a in self.per_altitude
        )


def _iteration_chunks(n_inner: int, per_iteration_cost: int):
    """Yield iteration index ranges capped to a bounded working-set size."""
    chunk = max(1, int(8_000_000 // max(1, per_iteration_cost)))
    for a in range(0, n_inner, chunk):
        yield a, min(a + chunk, n_inner)


def relative_error_at(
    h_p: float, cfg: EstimationConfig, alt_index: int = 0
) -> AltitudeError:
    """Mean over inner iterations of |g_s - g_p| / g_s at one axis height.

    Iterations whose spherical reference g_s is zero are excluded and
    counted (the transport metric needs no reference and never excludes).
    The uniform stream is keyed by (seed, altitude index) with the
    iteration number in the counter, so any parallel schedule reproduces
    the same estimate.
    """
    p = cfg
    lo = p.r_s * math.cos(p.theta_max)
    if not (lo < h_p < p.r_s):
        raise DomainError(f"h_p={h_p} outside the open interval ({lo}, {p.r_s})")
    spec = rng_mod.RngSpec(p.seed, p.stream_id).substream(_STREAM_DOMAIN, alt_index)
    metric = p.metric
    channel = p.resolved_channel()
    re = p.earth.earth_radius
    cos_tm = math.cos(p.theta_max)

    per_iter_cost = p.n_points * (4 * p.mc_draws if metric.is_system_level else 1)
    err_sum = 0.0
    n_used = 0
    excluded = 0
    point_idx = np.arange(p.n_points, dtype=np.uint64)[None, :]
    for a, b in _iteration_chunks(p.n_inner, per_iter_cost):
        iters = np.arange(a, b, dtype=np.uint64)
        blocks = rng_mod.uniform_blocks(spec, point_idx, iters[:, None])
        u = blocks[..., 0]
        d2s, d2p, disp2 = backend.pair_geometry(
            u.ravel(), p.r_s, cos_tm, p.rho_max, h_p, re
        )
        d2s = d2s.reshape(u.shape)
        d2p = d2p.reshape(u.shape)
        if metric is MetricId.T1_PAIRED_TRANSPORT:
            disp2 = disp2.reshape(u.shape)
            if p.t1_normalization is TransportNormalization.TO_USER:
                denom = d2s
            else:
                denom = p.r_s * p.r_s
            errs = np.mean(disp2 / denom, axis=1)
            err_sum += float(np.sum(errs))
            n_used += errs.shape[0]
            continue
        if metric is MetricId.T2_AVG_ENERGY:
            g_s = d2s.mean(axis=1)
            g_p = d2p.mean(axis=1)
        elif metric is MetricId.T3_CONTACT_ENERGY:
            g_s = d2s.min(axis=1)
            g_p = d2p.min(axis=1)
        else:
            d_s = np.sqrt(d2s)
            d_p = np.sqrt(d2p)
            elev_s = _elevation_spherical(d2s, d_s, p.r_s, re, cos_tm, u)
            elev_p = _elevation_planar(d_p, h_p, re)
            sinr_s = metrics_mod.sinr_batch(
                channel, d_s, elev_s, spec, p.mc_draws, iters,
                metrics_mod.TAG_CHANNEL_SPHERICAL,
            )
            sinr_p = metrics_mod.sinr_batch(
                channel, d_p, elev_p, spec, p.mc_draws, iters,
                metrics_mod.TAG_CHANNEL_PLANAR,
            )
            g_s = metrics_mod.reduce_sinr(metric, sinr_s, channel, axis=1)
            g_p = metrics_mod.reduce_sinr(metric, sinr_p, channel, axis=1)
        ok = g_s != 0.0
        errs = np.abs(g_s[ok] - g_p[ok]) / g_s[ok]
        err_sum += float(np.sum(errs))
        n_used += int(np.count_nonzero(ok))
        excluded += int(ok.size - np.count_nonzero(ok))

    rel = err_sum / n_used if n_used > 0 else math.nan
    return AltitudeError(h_p=h_p, rel_err=rel, excluded=excluded, n_used=n_used)


def _elevation_spherical(d2, d, r_s, re, cos_tm, u):
    # Recover cos(theta) from the uniform rather than from d2 (cheaper and
    # immune to cancellation): height above the user's horizon plane.
    height = r_s * (1.0 - u * (1.0 - cos_tm)) - re
    return np.degrees(np.arcsin(np.clip(height / d, -1.0, 1.0)))


def _elevation_planar(d, h_p, re):
    return np.degrees(np.arcsin(np.clip((h_p - re) / d, -1.0, 1.0)))


def csm_altitudes(cfg: EstimationConfig) -> np.ndarray:
    """The CSM sweep grid: n_outer equally spaced heights above the cap base.

    delta_h = (r_s - r_s*cos(theta_max)) / (n_outer + 1); the grid starts
    one step above r_s*cos(theta_max) and stays strictly below r_s.
    """
    base = cfg.r_s * math.cos(cfg.theta_max)
    delta = (cfg.r_s - base) / (cfg.n_outer + 1)
    return base + delta * np.arange(1, cfg.n_outer + 1)


def estimate_csm(cfg: EstimationConfig, workers: int = 1) -> ErrorEstimate:
    """Full altitude sweep; O(n_inner * n_outer) metric evaluations."""
    if cfg.mode != "csm":
        raise ConfigError(f"estimate_csm needs mode='csm', got {cfg.mode!r}")
    heights = csm_altitudes(cfg)
    indices = range(1, cfg.n_outer + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_altitude = list(
                pool.map(lambda args: relative_error_at(args[0], cfg, args[1]),
                         zip(heights, indices))
            )
    else:
        per_altitude = [
            relative_error_at(h, cfg, k) for h, k in zip(heights, indices)
        ]
    return _assemble(cfg, per_altitude)


def estimate_jsam(cfg: EstimationConfig) -> ErrorEstimate:
    """Single evaluation at the closed-form equalizing altitude; O(n_inner)."""
    if cfg.mode != "jsam":
        raise ConfigError(f"estimate_jsam needs mode='jsam', got {cfg.mode!r}")
    try:
        h_opt = optimal_altitude(cfg.r_s, cfg.theta_max, cfg.rho_max, cfg.earth)
    except DomainError as exc:
        raise ConfigError(f"no closed-form altitude for this config: {exc}") from exc
    return _assemble(cfg, [relative_error_at(h_opt, cfg, 0)])


def _assemble(cfg: EstimationConfig, per_altitude) -> ErrorEstimate:
    errs = np.array([a.rel_err for a in per_altitude])
    if np.all(np.isnan(errs)):
        raise DomainError(
            "every altitude excluded all iterations (zero reference metric)"
        )
    best = int(np.nanargmin(errs))
    return ErrorEstimate(
        e_min=float(errs[best]),
        h_opt=per_altitude[best].h_p,
        per_altitude=tuple(per_altitude),
        provenance=Provenance(
            seed=cfg.seed,
            n_inner=cfg.n_inner,
            n_outer=len(per_altitude),
            mode=cfg.mode,
            metric=cfg.metric,
            n_points=cfg.n_points,
            mc_draws=cfg.mc_draws,
        ),
    )


CSV_HEADER = "seed,mode,metric,h_s_km,theta_max_rad,h_p_km,rel_err,n_in,n_out,excluded"


def csv_rows(estimate: ErrorEstimate, cfg: EstimationConfig):
    """One CSV line per swept altitude, in grid order."""
    prov = estimate.provenance
    for alt in estimate.per_altitude:
        yield (
            f"{prov.seed},{prov.mode},{prov.metric.value},"
            f"{cfg.h_s:.17g},{cfg.theta_max:.17g},{alt.h_p:.17g},"
            f"{alt.rel_err:.17g},{prov.n_inner},{prov.n_outer},{alt.excluded}"
        )


def write_error_csv(estimate: ErrorEstimate, cfg: EstimationConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in csv_rows(estimate, cfg):
            fh.write(row + "\n")

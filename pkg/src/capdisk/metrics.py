"""Metric functionals over point sets: three topology-level, three system-level.

Topology metrics interpret "energy" as squared Euclidean distance moved by
a unit mass. System metrics run a configurable fading/path-loss channel:
the aerial-to-ground preset draws a line-of-sight state from an
elevation-angle sigmoid and applies Nakagami fading per state; the
space-to-ground preset is always line-of-sight with shadowed-Rician
fading. All channel randomness is addressed by Philox counters, so every
metric value is a pure function of (seed, parameters).
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from capdisk import rng as rng_mod
from capdisk.errors import ConfigError, DomainError
from capdisk.geom import EARTH, EarthConstants, PlanarPoint, SphericalPoint
from capdisk.geom import elevation_deg, squared_user_distance
from capdisk.pointgen import PairedDeployment

_C_M_S = 299_792_458.0

# Counter tags keep position and channel draws on disjoint streams; the two
# models draw independent channel realizations (the only coupling mandated
# between them is the shared position uniform).
TAG_POSITION = 0
TAG_CHANNEL_SPHERICAL = 1
TAG_CHANNEL_PLANAR = 2

_TINY_U = 2.0**-54


class MetricId(str, Enum):
    T1_PAIRED_TRANSPORT = "t1"
    T2_AVG_ENERGY = "t2"
    T3_CONTACT_ENERGY = "t3"
    S1_AVG_SINR = "s1"
    S2_COVERAGE = "s2"
    S3_AVG_RATE = "s3"

    @property
    def is_system_level(self) -> bool:
        return self.value.startswith("s")


TOPOLOGY_METRICS = (
    MetricId.T1_PAIRED_TRANSPORT,
    MetricId.T2_AVG_ENERGY,
    MetricId.T3_CONTACT_ENERGY,
)
SYSTEM_METRICS = (MetricId.S1_AVG_SINR, MetricId.S2_COVERAGE, MetricId.S3_AVG_RATE)


class TransportNormalization(str, Enum):
    """Denominator of the paired-transport metric: move-to-user or
    move-to-Earth-center energy."""

    TO_USER = "user"
    TO_EARTH_CENTER = "earth_center"


@dataclass(frozen=True)
class NakagamiFading:
    """Unit-mean Nakagami-m power fading, with separate m per LoS state."""

    m_los: float = 3.0
    m_nlos: float = 1.0

    def __post_init__(self):
        if self.m_los < 0.5 or self.m_nlos < 0.5:
            raise DomainError("Nakagami m must be >= 0.5")


@dataclass(frozen=True)
class ShadowedRicianFading:
    """Shadowed-Rician power fading: Nakagami-distributed LoS amplitude of
    mean power omega over a complex-normal scatter of power 2*b0."""

    b0: float = 0.158
    m: float = 19.4
    omega: float = 1.29

    def __post_init__(self):
        if self.b0 <= 0 or self.omega <= 0 or self.m < 0.5:
            raise DomainError("invalid shadowed-Rician parameters")


@dataclass(frozen=True)
class ChannelModel:
    """Parametric link model; powers in dB units, converted internally.

    ``fading=None`` pins the fading gain to 1 (deterministic link), which
    is useful for tests and debugging.
    """

    preset: str
    path_loss_exponent: float = 2.0
    carrier_frequency_ghz: float = 2.0
    los_sigmoid: tuple = (9.61, 0.16)
    excess_loss_los_db: float = 0.0
    excess_loss_nlos_db: float = 0.0
    fading: NakagamiFading | ShadowedRicianFading | None = None
    tx_power_dbw: float = 10.0
    tx_antenna_gain_dbi: float = 0.0
    noise_power_dbw: float = -157.0
    sinr_threshold_db: float = 0.0

    def __post_init__(self):
        if self.path_loss_exponent < 2.0:
            raise DomainError(
                f"path_loss_exponent must be >= 2, got {self.path_loss_exponent}"
            )
        for name in ("tx_power_dbw", "tx_antenna_gain_dbi", "noise_power_dbw",
                     "sinr_threshold_db"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @classmethod
    def aerial_to_ground(cls, **overrides) -> "ChannelModel":
        """Sigmoid LoS probability over elevation (urban parameters) with
        Nakagami fading; defaults follow common aerial-channel conventions."""
        base = dict(
            preset="aerial_to_ground",
            los_sigmoid=(9.61, 0.16),
            excess_loss_los_db=1.0,
            excess_loss_nlos_db=20.0,
            fading=NakagamiFading(m_los=3.0, m_nlos=1.0),
        )
        base.update(overrides)
        return cls(**base)

    @classmethod
    def space_to_ground(cls, **overrides) -> "ChannelModel":
        """Always line-of-sight with shadowed-Rician fading (average
        shadowing parameters); defaults follow common space-channel
        conventions."""
        base = dict(
            preset="space_to_ground",
            carrier_frequency_ghz=20.0,
            tx_antenna_gain_dbi=30.0,
            fading=ShadowedRicianFading(),
        )
        base.update(overrides)
        return cls(**base)

    @classmethod
    def for_altitude(cls, h_s_km: float, explicit: "ChannelModel | None" = None):
        """Preset by deployment altitude: aerial-to-ground up to 1000 km,
        space-to-ground from 10,000 km; the gap needs an explicit model."""
        if explicit is not None:
            return explicit
        if h_s_km <= 1000.0:
            return cls.aerial_to_ground()
        if h_s_km >= 10_000.0:
            return cls.space_to_ground()
        raise ConfigError(
            f"no preset covers h_s={h_s_km} km; configure the channel explicitly"
        )

    @property
    def tx_power_linear(self) -> float:
        return 10.0 ** (self.tx_power_dbw / 10.0)

    @property
    def tx_gain_linear(self) -> float:
        return 10.0 ** (self.tx_antenna_gain_dbi / 10.0)

    @property
    def noise_linear(self) -> float:
        return 10.0 ** (self.noise_power_dbw / 10.0)

    @property
    def sinr_threshold_linear(self) -> float:
        return 10.0 ** (self.sinr_threshold_db / 10.0)

    def path_loss_linear(self, d_km):
        """(4*pi*d*f/c)**alpha; plain free-space loss at alpha = 2."""
        f_hz = self.carrier_frequency_ghz * 1e9
        base = 4.0 * np.pi * np.asarray(d_km) * 1e3 * f_hz / _C_M_S
        return base**self.path_loss_exponent

    def los_probability(self, elev_deg_arr):
        a, b = self.los_sigmoid
        if self.preset == "space_to_ground":
            return np.ones_like(np.asarray(elev_deg_arr, dtype=float))
        return 1.0 / (1.0 + a * np.exp(-b * (np.asarray(elev_deg_arr) - a)))


def _nakagami_power(m: float, blocks: np.ndarray) -> np.ndarray:
    """Unit-mean Nakagami-m power from a uniform block.

    Integer m up to 3 uses the Erlang product form on word slots 1..m;
    other m fall back to the gamma quantile on slot 1. Either way the
    draw is a fixed function of the block.
    """
    m_int = int(round(m))
    if abs(m - m_int) < 1e-12 and 1 <= m_int <= 3:
        acc = np.log1p(-blocks[..., 1])
        for slot in range(2, m_int + 1):
            acc = acc + np.log1p(-blocks[..., slot])
        return -acc / m_int
    return special.gammaincinv(m, np.maximum(blocks[..., 1], _TINY_U)) / m


def _fading_power(channel: ChannelModel, blocks: np.ndarray, los_mask) -> np.ndarray:
    fading = channel.fading
    if fading is None:
        return np.ones(blocks.shape[:-1])
    if isinstance(fading, ShadowedRicianFading):
        a_sq = special.gammaincinv(
            fading.m, np.maximum(blocks[..., 1], _TINY_U)
        ) * (fading.omega / fading.m)
        sigma = math.sqrt(fading.b0)
        z_re = special.ndtri(np.clip(blocks[..., 2], _TINY_U, 1.0)) * sigma
        z_im = special.ndtri(np.clip(blocks[..., 3], _TINY_U, 1.0)) * sigma
        a = np.sqrt(a_sq)
        return (a + z_re) ** 2 + z_im**2
    power_los = _nakagami_power(fading.m_los, blocks)
    power_nlos = _nakagami_power(fading.m_nlos, blocks)
    return np.where(los_mask, power_los, power_nlos)


def link_gains_from_blocks(channel, d_km, elev_deg_arr, blocks) -> np.ndarray:
    """Linear link gains for given distances/elevations and uniform blocks.

    Word 0 of each block decides the LoS state, the remaining words feed
    the fading draw; ``d_km``, ``elev_deg_arr`` and ``blocks[..., 0]``
    must broadcast together.
    """
    p_los = channel.los_probability(elev_deg_arr)
    los_mask = blocks[..., 0] < p_los
    fading = _fading_power(channel, blocks, los_mask)
    excess_db = np.where(
        los_mask, channel.excess_loss_los_db, channel.excess_loss_nlos_db
    )
    excess = 10.0 ** (-excess_db / 10.0)
    return (
        channel.tx_power_linear
        * channel.tx_gain_linear
        * fading
        * excess
        / channel.path_loss_linear(d_km)
    )


def _channel_blocks(spec, n_points, draws, iteration, tag):
    i = np.arange(n_points, dtype=np.uint64)[None, :]
    k = np.asarray(draws, dtype=np.uint64)[:, None]
    return rng_mod.uniform_blocks(spec, i, np.uint64(iteration), k, np.uint64(tag))


def link_gain(
    points,
    channel: ChannelModel,
    rng: rng_mod.RngSpec,
    earth: EarthConstants = EARTH,
    draw: int = 0,
) -> np.ndarray:
    """One linear gain per point for a single channel realization."""
    d = np.sqrt(np.atleast_1d(squared_user_distance(points, earth)))
    elev = np.atleast_1d(elevation_deg(points, earth))
    tag = _tag_for(points)
    blocks = _channel_blocks(spec=rng, n_points=d.shape[0], draws=[draw],
                             iteration=0, tag=tag)[0]
    return link_gains_from_blocks(channel, d, elev, blocks)


def _tag_for(points) -> int:
    if isinstance(points, SphericalPoint):
        return TAG_CHANNEL_SPHERICAL
    if isinstance(points, PlanarPoint):
        return TAG_CHANNEL_PLANAR
    raise TypeError(f"unsupported point type {type(points).__name__}")


def sinr_realization(
    points,
    channel: ChannelModel,
    rng: rng_mod.RngSpec,
    earth: EarthConstants = EARTH,
    draw: int = 0,
) -> float:
    """Linear SINR of one realization: nearest point serves, the rest interfere."""
    gains = link_gain(points, channel, rng, earth, draw)
    d2 = np.atleast_1d(squared_user_distance(points, earth))
    serving = int(np.argmin(d2))
    interference = float(np.sum(gains)) - float(gains[serving])
    return float(gains[serving]) / (interference + channel.noise_linear)


def sinr_batch(channel, d_km, elev_deg_arr, spec, mc_draws, iterations, tag):
    """Per-draw linear SINR for a batch of point sets: shape (m, mc_draws).

    ``d_km`` and ``elev_deg_arr`` are (m, n_points); row r uses iteration
    index ``iterations[r]``. Draw d of point n in iteration j reads counter
    (n, j, d, tag), so results are independent of evaluation order and
    worker count.
    """
    m, n_points = d_km.shape
    i = np.arange(n_points, dtype=np.uint64)[None, None, :]
    j = np.asarray(iterations, dtype=np.uint64)[:, None, None]
    k = np.arange(mc_draws, dtype=np.uint64)[None, :, None]
    blocks = rng_mod.uniform_blocks(spec, i, j, k, np.uint64(tag))
    gains = link_gains_from_blocks(
        channel, d_km[:, None, :], elev_deg_arr[:, None, :], blocks
    )
    serving = np.argmin(d_km, axis=1)
    g_serv = np.take_along_axis(gains, serving[:, None, None], axis=2)[..., 0]
    interference = gains.sum(axis=2) - g_serv
    return g_serv / (interference + channel.noise_linear)


def sinr_matrix(channel, d_km, elev_deg_arr, spec, mc_draws, iteration, tag):
    """Per-draw linear SINR for one point set: shape (mc_draws,)."""
    return sinr_batch(
        channel,
        d_km[None, :],
        elev_deg_arr[None, :],
        spec,
        mc_draws,
        np.array([iteration], dtype=np.uint64),
        tag,
    )[0]


def reduce_sinr(metric: MetricId, sinr, channel: ChannelModel, axis=-1):
    """Reduce per-draw SINRs to one metric value in fixed index order."""
    if metric is MetricId.S1_AVG_SINR:
        return np.mean(sinr, axis=axis)
    if metric is MetricId.S2_COVERAGE:
        return np.mean(sinr > channel.sinr_threshold_linear, axis=axis)
    if metric is MetricId.S3_AVG_RATE:
        return np.mean(np.log2(1.0 + sinr), axis=axis)
    raise ValueError(f"{metric} is not a system-level metric")


def t1_paired_transport(
    pair: PairedDeployment,
    normalization: TransportNormalization = TransportNormalization.TO_USER,
    earth: EarthConstants = EARTH,
) -> float:
    """Mean over points of |x_n - y_n|**2 / |x_n - o|**2.

    o is the typical user by default, or the Earth center under the
    alternative normalization. The shared azimuth cancels from the
    displacement.
    """
    sph, pln = pair.spherical, pair.planar
    dr = sph.radius * np.sin(sph.polar) - pln.horizontal_radius
    dz = sph.radius * np.cos(sph.polar) - pln.axis_height
    disp2 = dr * dr + dz * dz
    if normalization is TransportNormalization.TO_USER:
        denom = squared_user_distance(sph, earth)
    else:
        denom = sph.radius * sph.radius * np.ones_like(disp2)
    return float(np.mean(disp2 / denom))


def t2_avg_energy(points, earth: EarthConstants = EARTH) -> float:
    """Mean squared user-to-point distance (km**2)."""
    return float(np.mean(squared_user_distance(points, earth)))


def t3_contact_energy(points, earth: EarthConstants = EARTH) -> float:
    """Squared distance from the user to the nearest point (km**2)."""
    return float(np.min(squared_user_distance(points, earth)))


def evaluate_metric(
    metric: MetricId,
    target,
    channel: ChannelModel | None = None,
    mc_draws: int = 1,
    rng: rng_mod.RngSpec | None = None,
    earth: EarthConstants = EARTH,
    normalization: TransportNormalization = TransportNormalization.TO_USER,
):
    """Evaluate one metric on a point set (or pair, for the transport metric).

    System-level metrics need a channel, mc_draws >= 1 and an RngSpec;
    topology metrics need neither.
    """
    metric = MetricId(metric)
    if metric is MetricId.T1_PAIRED_TRANSPORT:
        if not isinstance(target, PairedDeployment):
            raise ConfigError("t1 needs the full paired deployment")
        return t1_paired_transport(target, normalization, earth)
    if isinstance(target, PairedDeployment):
        raise ConfigError(f"{metric.value} expects one side, not the pair")
    points = target
    if metric is MetricId.T2_AVG_ENERGY:
        return t2_avg_energy(points, earth)
    if metric is MetricId.T3_CONTACT_ENERGY:
        return t3_contact_energy(points, earth)
    if channel is None or rng is None:
        raise ConfigError(f"{metric.value} needs a channel model and an RngSpec")
    if mc_draws < 1:
        raise ConfigError(f"mc_draws must be >= 1, got {mc_draws}")
    d = np.sqrt(np.atleast_1d(squared_user_distance(points, earth)))
    elev = np.atleast_1d(elevation_deg(points, earth))
    sinr = sinr_matrix(channel, d, elev, rng, mc_draws, 0, _tag_for(points))
    return float(reduce_sinr(metric, sinr, channel))

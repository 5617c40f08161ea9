"""Structured key-value configuration for the experiment runner.

Config files are INI text with sections mirroring the module types; every
key has a default, and a run's fully resolved config (defaults included)
can be dumped so the run is self-describing. Unknown sections or keys are
rejected outright.
"""

import configparser
import hashlib
import io
import math

from capdisk.errors import ConfigError
from capdisk.geom import EarthConstants
from capdisk.metrics import (
    ChannelModel,
    MetricId,
    NakagamiFading,
    ShadowedRicianFading,
)

DEFAULTS = {
    "run": {
        "seed": "1",
        "workers": "1",
        "out": "capdisk-out",
    },
    "deployment": {
        "earth_radius_km": "6371.0",
        "n_points": "20",
    },
    "estimation": {
        "n_inner": "1000",
        "n_inner_system": "300",
        "n_outer": "50",
        "mc_draws": "48",
    },
    "channel": {
        "preset": "auto",
        "path_loss_exponent": "2.0",
        "carrier_frequency_ghz": "",
        "los_sigmoid_a": "9.61",
        "los_sigmoid_b": "0.16",
        "excess_loss_los_db": "1.0",
        "excess_loss_nlos_db": "20.0",
        "nakagami_m_los": "3.0",
        "nakagami_m_nlos": "1.0",
        "sr_b0": "0.158",
        "sr_m": "19.4",
        "sr_omega": "1.29",
        "tx_power_dbw": "10.0",
        "tx_antenna_gain_dbi": "",
        "noise_power_dbw": "-157.0",
        "sinr_threshold_db": "0.0",
    },
    "opt_alt": {
        "altitudes_km": "20, 100, 550, 1000",
        "metrics": "t2",
    },
    "err_alt": {
        "altitudes_km": "20, 100, 550, 1000",
        "metrics": "t2",
    },
    "heatmap_beam": {
        "altitudes_km": "20, 100, 300, 550, 1000",
        "beam_angles_rad": "0.1309, 0.2618, 0.5236, 0.7854, 1.0472, 1.5708",
        "metrics": "t2",
    },
    "heatmap_area": {
        "altitudes_km": "20, 100, 300, 550, 1000",
        "areas_km2": "1e4, 3e4, 1e5, 3e5, 6e5",
        "metrics": "t2",
    },
    "case_study": {
        "altitudes_km": "20, 550",
        "beam_angles_rad": "0.1309, 0.2618, 0.5236, 1.0472, 1.5708",
        "metrics": "t2, t3, s2",
        "planar_threshold": "0.001",
    },
}


def load(path=None) -> configparser.ConfigParser:
    """Read a config file over the defaults; None loads pure defaults."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_dict(DEFAULTS)
    if path is not None:
        user = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, encoding="utf-8") as fh:
                user.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        for section in user.sections():
            if section not in DEFAULTS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in user.items(section):
                if key not in DEFAULTS[section]:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                cp.set(section, key, value)
    return cp


def dump(cp: configparser.ConfigParser) -> str:
    """Canonical text of the fully resolved config."""
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def config_hash(cp: configparser.ConfigParser) -> str:
    return hashlib.sha256(dump(cp).encode("utf-8")).hexdigest()


def _float(cp, section, key) -> float:
    raw = cp.get(section, key)
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from exc


def _int(cp, section, key) -> int:
    raw = cp.get(section, key)
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not an integer") from exc


def float_list(cp, section, key):
    raw = cp.get(section, key)
    try:
        values = [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number list") from exc
    if not values:
        raise ConfigError(f"[{section}] {key} must be a nonempty list")
    return values


def metric_list(cp, section):
    raw = cp.get(section, "metrics")
    try:
        metrics = [MetricId(tok.strip()) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"[{section}] metrics = {raw!r}: {exc}") from exc
    if not metrics:
        raise ConfigError(f"[{section}] metrics must be nonempty")
    return metrics


def earth(cp) -> EarthConstants:
    return EarthConstants(earth_radius=_float(cp, "deployment", "earth_radius_km"))


def n_points(cp) -> int:
    value = _int(cp, "deployment", "n_points")
    if value < 1:
        raise ConfigError(f"n_points must be >= 1, got {value}")
    return value


def estimation_sizes(cp, metric: MetricId):
    """(n_inner, n_outer, mc_draws) with the cheaper system-level inner count."""
    key = "n_inner_system" if metric.is_system_level else "n_inner"
    n_inner = _int(cp, "estimation", key)
    n_outer = _int(cp, "estimation", "n_outer")
    mc_draws = _int(cp, "estimation", "mc_draws")
    if min(n_inner, n_outer, mc_draws) < 1:
        raise ConfigError("estimation sizes must all be >= 1")
    return n_inner, n_outer, mc_draws


def channel_for(cp, h_s_km: float) -> ChannelModel:
    """Build the channel for one deployment altitude from the [channel] section."""
    preset = cp.get("channel", "preset").strip().lower()
    if preset == "auto":
        if h_s_km <= 1000.0:
            preset = "aerial_to_ground"
        elif h_s_km >= 10_000.0:
            preset = "space_to_ground"
        else:
            raise ConfigError(
                f"no automatic preset covers h_s={h_s_km} km; set [channel] preset"
            )
    common = dict(
        path_loss_exponent=_float(cp, "channel", "path_loss_exponent"),
        tx_power_dbw=_float(cp, "channel", "tx_power_dbw"),
        noise_power_dbw=_float(cp, "channel", "noise_power_dbw"),
        sinr_threshold_db=_float(cp, "channel", "sinr_threshold_db"),
    )
    freq = cp.get("channel", "carrier_frequency_ghz").strip()
    if freq:
        common["carrier_frequency_ghz"] = float(freq)
    gain = cp.get("channel", "tx_antenna_gain_dbi").strip()
    if gain:
        common["tx_antenna_gain_dbi"] = float(gain)
    if preset == "aerial_to_ground":
        return ChannelModel.aerial_to_ground(
            los_sigmoid=(
                _float(cp, "channel", "los_sigmoid_a"),
                _float(cp, "channel", "los_sigmoid_b"),
            ),
            excess_loss_los_db=_float(cp, "channel", "excess_loss_los_db"),
            excess_loss_nlos_db=_float(cp, "channel", "excess_loss_nlos_db"),
            fading=NakagamiFading(
                m_los=_float(cp, "channel", "nakagami_m_los"),
                m_nlos=_float(cp, "channel", "nakagami_m_nlos"),
            ),
            **common,
        )
    if preset == "space_to_ground":
        return ChannelModel.space_to_ground(
            fading=ShadowedRicianFading(
                b0=_float(cp, "channel", "sr_b0"),
                m=_float(cp, "channel", "sr_m"),
                omega=_float(cp, "channel", "sr_omega"),
            ),
            **common,
        )
    raise ConfigError(f"unknown channel preset {preset!r}")


def seed(cp) -> int:
    return _int(cp, "run", "seed")


def workers(cp) -> int:
    value = _int(cp, "run", "workers")
    if value < 1:
        raise ConfigError(f"workers must be >= 1, got {value}")
    return value


def planar_threshold(cp) -> float:
    value = _float(cp, "case_study", "planar_threshold")
    if not (0.0 < value < 1.0) or not math.isfinite(value):
        raise ConfigError(f"planar_threshold must lie in (0, 1), got {value}")
    return value

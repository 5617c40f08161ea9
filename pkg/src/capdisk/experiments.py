"""Experiment runners emitting long-format CSV artifacts.

Each runner expands its config section into a grid of independent cells,
evaluates them (optionally across worker threads), and writes rows in
deterministic grid order, so outputs are byte-identical for a fixed
(config, seed) at any worker count. A JSON manifest with the config hash,
seed, tool version, backend, and timestamps accompanies every CSV.
"""

import datetime as _dt
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

import capdisk
from capdisk import backend, config as config_mod, distributions as dist
from capdisk import errest, geom, pointgen, regions
from capdisk import rng as rng_mod
from capdisk.errors import ConfigError
from capdisk.metrics import MetricId

EXPERIMENT_KINDS = (
    "opt-alt",
    "err-alt",
    "heatmap-beam",
    "heatmap-area",
    "case-study",
)


@dataclass(frozen=True)
class RunResult:
    csv_path: Path
    manifest_path: Path
    rows: int


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _run_cells(fns, workers: int):
    if workers > 1 and len(fns) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda f: f(), fns))
    return [f() for f in fns]


def _cell_stream(seed: int, kind: str, *indices) -> int:
    return rng_mod.RngSpec(seed).substream(kind, *indices).stream_id


def _estimation(cp, kind, metric, h_s, theta_max, seed, stream_id):
    earth_c = config_mod.earth(cp)
    n_inner, n_outer, mc_draws = config_mod.estimation_sizes(cp, metric)
    channel = config_mod.channel_for(cp, h_s) if metric.is_system_level else None
    return errest.EstimationConfig(
        r_s=earth_c.earth_radius + h_s,
        theta_max=theta_max,
        metric=metric,
        n_inner=n_inner,
        n_outer=n_outer,
        mode="csm",
        seed=seed,
        channel=channel,
        n_points=config_mod.n_points(cp),
        mc_draws=mc_draws,
        stream_id=stream_id,
        earth=earth_c,
    )


def _write_output(out_dir, name, header, rows, cp, seed, workers, started):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{name}.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")
    manifest_path = out / f"{name}.manifest.json"
    manifest = {
        "experiment": name,
        "tool_version": capdisk.__version__,
        "backend": backend.active_backend(),
        "config_sha256": config_mod.config_hash(cp),
        "seed": seed,
        "workers": workers,
        "started_utc": started,
        "finished_utc": _utcnow(),
        "rows": {csv_path.name: len(rows)},
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return RunResult(csv_path=csv_path, manifest_path=manifest_path, rows=len(rows))


def run_opt_alt(cp, out_dir, seed, workers) -> RunResult:
    """CSM-optimal altitudes per (h_s, metric), with the closed-form
    equalizing altitude as a reference column (both above ground)."""
    started = _utcnow()
    earth_c = config_mod.earth(cp)
    re = earth_c.earth_radius
    altitudes = config_mod.float_list(cp, "opt_alt", "altitudes_km")
    metrics = config_mod.metric_list(cp, "opt_alt")

    cells = []
    for ih, h_s in enumerate(altitudes):
        r_s = re + h_s
        theta_max = float(pointgen.los_theta_max(r_s, earth_c))
        prop1 = dist.optimal_altitude(
            r_s, theta_max, r_s * math.sin(theta_max), earth_c
        ) - re
        for im, metric in enumerate(metrics):
            cfg = _estimation(cp, "opt-alt", metric, h_s, theta_max, seed,
                              _cell_stream(seed, "opt-alt", ih, im))

            def cell(cfg=cfg, h_s=h_s, metric=metric, prop1=prop1):
                est = errest.estimate_csm(cfg)
                return (
                    f"{seed},{metric.value},{h_s:.17g},"
                    f"{est.h_opt - re:.17g},{prop1:.17g},{est.e_min:.17g},"
                    f"{cfg.n_inner},{cfg.n_outer}"
                )

            cells.append(cell)
    rows = _run_cells(cells, workers)
    header = "seed,metric,h_s_km,h_opt_km,prop1_h_opt_km,e_min,n_in,n_out"
    return _write_output(out_dir, "opt-alt", header, rows, cp, seed, workers, started)


def run_err_alt(cp, out_dir, seed, workers) -> RunResult:
    """Minimum relative error per (h_s, metric); percent column included."""
    started = _utcnow()
    earth_c = config_mod.earth(cp)
    re = earth_c.earth_radius
    altitudes = config_mod.float_list(cp, "err_alt", "altitudes_km")
    metrics = config_mod.metric_list(cp, "err_alt")

    cells = []
    for ih, h_s in enumerate(altitudes):
        theta_max = float(pointgen.los_theta_max(re + h_s, earth_c))
        for im, metric in enumerate(metrics):
            cfg = _estimation(cp, "err-alt", metric, h_s, theta_max, seed,
                              _cell_stream(seed, "err-alt", ih, im))

            def cell(cfg=cfg, h_s=h_s, metric=metric):
                est = errest.estimate_csm(cfg)
                return (
                    f"{seed},{metric.value},{h_s:.17g},{est.e_min:.17g},"
                    f"{100.0 * est.e_min:.17g},{est.h_opt - re:.17g},"
                    f"{cfg.n_inner},{cfg.n_outer}"
                )

            cells.append(cell)
    rows = _run_cells(cells, workers)
    header = "seed,metric,h_s_km,e_min,e_min_percent,h_opt_km,n_in,n_out"
    return _write_output(out_dir, "err-alt", header, rows, cp, seed, workers, started)


def _run_region_heatmap(cp, out_dir, seed, workers, section, name, value_key,
                        value_header, resolver):
    started = _utcnow()
    earth_c = config_mod.earth(cp)
    altitudes = config_mod.float_list(cp, section, "altitudes_km")
    values = config_mod.float_list(cp, section, value_key)
    metrics = config_mod.metric_list(cp, section)

    cells = []
    for ih, h_s in enumerate(altitudes):
        r_s = earth_c.earth_radius + h_s
        for iv, value in enumerate(values):
            theta_max = resolver(value, r_s, earth_c)
            for im, metric in enumerate(metrics):
                cfg = _estimation(cp, name, metric, h_s, theta_max, seed,
                                  _cell_stream(seed, name, ih, iv, im))

                def cell(cfg=cfg, h_s=h_s, value=value, metric=metric,
                         theta_max=theta_max):
                    est = errest.estimate_csm(cfg)
                    return (
                        f"{seed},{metric.value},{h_s:.17g},{value:.17g},"
                        f"{theta_max:.17g},{est.e_min:.17g},"
                        f"{cfg.n_inner},{cfg.n_outer}"
                    )

                cells.append(cell)
    rows = _run_cells(cells, workers)
    header = f"seed,metric,h_s_km,{value_header},theta_max_rad,e_min,n_in,n_out"
    return _write_output(out_dir, name, header, rows, cp, seed, workers, started)


def run_heatmap_beam(cp, out_dir, seed, workers) -> RunResult:
    """Relative error over (h_s, beam angle) grids; beams past the horizon
    are rejected before any computation."""
    def resolver(psi, r_s, earth_c):
        return regions.theta_max_from_beam(psi, r_s, earth_c).theta_max

    return _run_region_heatmap(cp, out_dir, seed, workers, "heatmap_beam",
                               "heatmap-beam", "beam_angles_rad", "psi_rad",
                               resolver)


def run_heatmap_area(cp, out_dir, seed, workers) -> RunResult:
    """Relative error over (h_s, cap area) grids."""
    def resolver(area, r_s, earth_c):
        return regions.theta_max_from_area(area, r_s)

    return _run_region_heatmap(cp, out_dir, seed, workers, "heatmap_area",
                               "heatmap-area", "areas_km2", "area_km2", resolver)


def run_case_study(cp, out_dir, seed, workers) -> RunResult:
    """Two-platform beam sweep with a planar-recommended flag per row."""
    started = _utcnow()
    earth_c = config_mod.earth(cp)
    altitudes = config_mod.float_list(cp, "case_study", "altitudes_km")
    if len(altitudes) != 2:
        raise ConfigError(
            f"case_study needs exactly two altitudes, got {len(altitudes)}"
        )
    psis = config_mod.float_list(cp, "case_study", "beam_angles_rad")
    metrics = config_mod.metric_list(cp, "case_study")
    threshold = config_mod.planar_threshold(cp)
    platforms = ("hap", "leo")

    cells = []
    for ih, h_s in enumerate(altitudes):
        r_s = earth_c.earth_radius + h_s
        for iv, psi in enumerate(psis):
            theta_max = regions.theta_max_from_beam(psi, r_s, earth_c).theta_max
            for im, metric in enumerate(metrics):
                cfg = _estimation(cp, "case-study", metric, h_s, theta_max, seed,
                                  _cell_stream(seed, "case-study", ih, iv, im))

                def cell(cfg=cfg, h_s=h_s, psi=psi, metric=metric,
                         platform=platforms[ih]):
                    est = errest.estimate_csm(cfg)
                    flag = 1 if est.e_min < threshold else 0
                    return (
                        f"{seed},{platform},{metric.value},{h_s:.17g},"
                        f"{psi:.17g},{est.e_min:.17g},{flag},"
                        f"{cfg.n_inner},{cfg.n_outer}"
                    )

                cells.append(cell)
    rows = _run_cells(cells, workers)
    header = "seed,platform,metric,h_s_km,psi_rad,e_min,planar_recommended,n_in,n_out"
    return _write_output(out_dir, "case-study", header, rows, cp, seed, workers,
                         started)


RUNNERS = {
    "opt-alt": run_opt_alt,
    "err-alt": run_err_alt,
    "heatmap-beam": run_heatmap_beam,
    "heatmap-area": run_heatmap_area,
    "case-study": run_case_study,
}


def run_validate(cp, seed) -> tuple[bool, list[str]]:
    """Statistical test suites for the generator and the closed forms.

    Returns (all_passed, report_lines); used by the ``validate`` CLI
    subcommand.
    """
    earth_c = config_mod.earth(cp)
    re = earth_c.earth_radius
    lines = []
    ok = True

    def check(passed, text):
        nonlocal ok
        ok = ok and passed
        lines.append(f"{'PASS' if passed else 'FAIL'}  {text}")

    r_s = re + 550.0
    theta_max = float(pointgen.los_theta_max(r_s, earth_c))
    params = pointgen.DeploymentParams.coupled(
        r_s, theta_max, re + 550.0 / math.sqrt(2.0), 100_000
    )

    # Homogeneity over 20 seeds, both sides, at most one failure each.
    failures = {"spherical": 0, "planar": 0}
    for k in range(20):
        pair = pointgen.generate_pair(
            params, rng_mod.RngSpec(seed).substream("validate-homog", k)
        )
        for side in failures:
            if pointgen.homogeneity_test(pair, side, 100).p_value <= 0.001:
                failures[side] += 1
    for side, count in failures.items():
        check(count <= 1, f"homogeneity {side}: {count}/20 seeds below p=0.001")

    # The chi-square must reject the intentionally biased sampler.
    biased = pointgen.biased_polar_reference(
        params, rng_mod.RngSpec(seed).substream("validate-bias")
    )
    frac = (1.0 - np.cos(biased.polar)) / (1.0 - math.cos(theta_max))
    biased_pair = pointgen.PairedDeployment(
        params=params, u=frac, v=biased.azimuth / (2.0 * np.pi)
    )
    p_bias = pointgen.homogeneity_test(biased_pair, "spherical", 100).p_value
    check(p_bias < 1e-6, f"biased sampler rejected: p={p_bias:.2e}")

    # Distance laws vs empirical CDFs over 5 random parameter sets.
    picker = np.random.default_rng(seed)
    worst = 0.0
    for k in range(5):
        h_s = float(picker.uniform(50.0, 2000.0))
        r = re + h_s
        t_m = float(picker.uniform(0.2, 1.0)) * float(
            pointgen.los_theta_max(r, earth_c)
        )
        h_p = r * math.cos(t_m) + float(picker.uniform(0.1, 0.9)) * (
            r - r * math.cos(t_m)
        )
        p = pointgen.DeploymentParams.coupled(r, t_m, h_p, 100_000)
        pair = pointgen.generate_pair(
            p, rng_mod.RngSpec(seed).substream("validate-ks", k)
        )
        d_s = np.sqrt(geom.squared_user_distance(pair.spherical, earth_c))
        d_p = np.sqrt(geom.squared_user_distance(pair.planar, earth_c))
        ks_s = stats.kstest(d_s, lambda d: dist.cdf_spherical(d, r, t_m, earth_c))
        ks_p = stats.kstest(d_p, lambda d: dist.cdf_planar(d, p.rho_max, h_p, earth_c))
        worst = max(worst, ks_s.statistic, ks_p.statistic)
    check(worst < 0.006, f"distance-law KS over 5 parameter sets: max={worst:.5f}")

    # Asymptotic similarity: displacement shrinks with r_s at fixed area.
    area = 1e6
    disps = [
        pointgen.similarity_displacement(
            area, r, 1000, rng_mod.RngSpec(seed).substream("validate-sim")
        )
        for r in (1e3, 1e4, 1e5, 1e6)
    ]
    decreasing = all(b < a for a, b in zip(disps, disps[1:]))
    bound = 0.01 * math.sqrt(area / math.pi)
    check(
        decreasing and disps[-1] < bound,
        f"similarity displacement decreasing, final={disps[-1]:.3f} km "
        f"(bound {bound:.3f})",
    )

    # Region round trips.
    grid = np.linspace(0.01, 1.0, 100) * float(pointgen.los_theta_max(r_s, earth_c))
    worst_rt = 0.0
    for t in grid:
        psi = regions.beam_from_theta_max(float(t), r_s, earth_c)
        back = regions.theta_max_from_beam(psi, r_s, earth_c).theta_max
        worst_rt = max(worst_rt, abs(back - t) / t)
        area_t = float(geom.cap_area(r_s, float(t)))
        back_a = regions.theta_max_from_area(area_t, r_s)
        worst_rt = max(worst_rt, abs(back_a - t) / t)
    check(worst_rt < 1e-12, f"region round trips: max rel err={worst_rt:.2e}")

    # Closed-form equalizing altitude, cross-checked by Monte Carlo.
    h_opt = dist.optimal_altitude(r_s, theta_max, params.rho_max, earth_c)
    ms = dist.mean_sq_distance_spherical(r_s, theta_max, earth_c)
    mp = dist.mean_sq_distance_planar(params.rho_max, h_opt, earth_c)
    big = pointgen.generate_pair(
        pointgen.DeploymentParams.coupled(r_s, theta_max, h_opt, 1_000_000),
        rng_mod.RngSpec(seed).substream("validate-msd"),
    )
    mc_s = float(np.mean(geom.squared_user_distance(big.spherical, earth_c)))
    mc_p = float(np.mean(geom.squared_user_distance(big.planar, earth_c)))
    check(
        abs(ms - mp) <= 1e-9 * ms
        and abs(mc_s - ms) <= 5e-3 * ms
        and abs(mc_p - ms) <= 5e-3 * ms,
        f"equalizing altitude: closed forms match to 1e-9, MC within 0.5% "
        f"(analytic={ms:.1f}, mc_s={mc_s:.1f}, mc_p={mc_p:.1f})",
    )

    return ok, lines

"""Experiment orchestration: reproducible runs, result emission, and checks.

Every experiment writes a manifest first, then NDJSON/CSV results, then a
machine-readable acceptance summary with one pass/fail entry per check.
Result files and the summary are pure functions of (config hash, seeds);
wall-clock timing lives only in the manifest.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .fronts import front_frame_stack, front_stats
from .profiles import calibrate_supersolution, estimate_envelope, tw_speed_shoot, verify_supersolution
from .reaction import ReactionField, homogeneous_medium
from .solver import GridConfig, evolve, make_bump
from .spreading import (
    build_hitting_matrix,
    estimate_speed,
    make_box,
    spreading_theorem_check,
    verify_near_subadditivity,
)
from .wavelimit import construct_wave, passage_profiles

__all__ = ["CheckResult", "run_experiment", "worker_count"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": _jsonable(self.measured),
            "threshold": _jsonable(self.threshold),
            "detail": self.detail,
        }


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


def write_ndjson(path: Path, records: Sequence[dict]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(_jsonable(rec), sort_keys=True))
            fh.write("\n")


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_jsonable(v) for v in row])


def write_front_stream(path: Path, traj) -> None:
    """Observer stream: one NDJSON record per observation time."""
    write_ndjson(
        path,
        [
            {
                "t": r.t, "X": r.X, "X_h_l": r.X_h_l, "X_k_r": r.X_k_r,
                "slope_at_X": r.slope_at_X,
                "window_bounds": [r.window_lo, r.window_hi],
            }
            for r in traj.records
        ],
    )


def dump_medium_csv(path: Path, medium, lo: int, hi: int) -> None:
    """Per-cell reaction levels on [lo, hi) for inspection."""
    cells = np.arange(lo, hi)
    write_csv(path, ["cell_index", "value"], zip(cells, medium.cell_values(cells)))


def worker_count(cfg: ExperimentConfig) -> int:
    env = os.environ.get("FRONT_WORKERS")
    if env:
        return max(int(env), 1)
    return max(int(cfg.workers), 1)


def _run_parallel(job: Callable, args_list: list, workers: int) -> list:
    """Order-preserving map; inline when single-worker so results are identical."""
    if workers <= 1 or len(args_list) <= 1:
        return [job(*args) for args in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(job, *args) for args in args_list]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Experiment bodies
# ---------------------------------------------------------------------------


def _exp_tw_speed(cfg: ExperimentConfig, out: Path) -> list[CheckResult]:
    nl = cfg.nonlinearity()
    levels = sorted({cfg.g_min, cfg.g_max})
    waves = [tw_speed_shoot(nl, g) for g in levels]
    write_ndjson(
        out / "tw_speed.ndjson",
        [{"g": w.level_g, "c": w.speed, "tol": w.tol, "iterations": w.iterations} for w in waves],
    )
    for w in waves:
        xs = np.concatenate([w.x_back[::40], np.arange(0.0, 10.0, 0.1)])
        write_csv(out / f"tw_profile_g{w.level_g:g}.csv", ["x", "u"], zip(xs, w.profile(xs)))
    checks = [
        CheckResult("tw-ode-residual", max(w.residual() for w in waves) < 1e-6,
                    max(w.residual() for w in waves), 1e-6),
        CheckResult("tw-speed-ordering", waves[0].speed <= waves[-1].speed + 1e-12,
                    waves[-1].speed - waves[0].speed, 0.0, "c(g_min) <= c(g_max)"),
    ]
    return checks


def _matrix_job(cfg: ExperimentConfig, seed: int):
    grid = cfg.grid(observe_every=max(cfg.observe_every, 20))
    return build_hitting_matrix(cfg.field(seed), grid, N=cfg.N, stride=cfg.stride)


def _exp_speed(cfg: ExperimentConfig, out: Path) -> list[CheckResult]:
    nl = cfg.nonlinearity()
    c_lo = tw_speed_shoot(nl, cfg.g_min).speed
    c_hi = tw_speed_shoot(nl, cfg.g_max).speed
    matrices = _run_parallel(_matrix_job, [(cfg, s) for s in cfg.seeds], worker_count(cfg))
    for seed, mat in zip(cfg.seeds, matrices):
        write_csv(out / f"hitting_{seed}.csv", ["m", "n", "T"], mat.rows())
    est = estimate_speed(matrices, c_bracket=(c_lo, c_hi))
    write_ndjson(
        out / "speed.ndjson",
        [
            {"seed": s, "speed": 1.0 / sl, "slope": sl}
            for s, sl in zip(cfg.seeds, est.per_slopes)
        ]
        + [
            {
                "c_star": est.c_star, "ci_half_width": est.ci_half_width,
                "ensemble": est.ensemble_size, "method": est.method,
                "c_min": c_lo, "c_max": c_hi,
            }
        ],
    )
    speeds = est.per_speeds
    checks = [
        CheckResult(
            "speed-bracket",
            bool(np.all((speeds >= c_lo * 0.98) & (speeds <= c_hi * 1.02))),
            float(np.max(np.abs(speeds - np.clip(speeds, c_lo, c_hi)) / c_lo)),
            0.02,
            "per-realization speeds within [c(g_min)-2%, c(g_max)+2%]",
        ),
        CheckResult("speed-powered", not est.underpowered, est.ci_half_width, c_hi - c_lo,
                    "CI narrower than the speed bracket"),
    ]
    return checks


def _exp_subadditivity(cfg: ExperimentConfig, out: Path) -> list[CheckResult]:
    matrices = _run_parallel(_matrix_job, [(cfg, s) for s in cfg.seeds], worker_count(cfg))
    hom_cfg_field = ReactionField(cfg.nonlinearity(), homogeneous_medium(cfg.g_min))
    grid = cfg.grid(observe_every=max(cfg.observe_every, 20))
    hom = build_hitting_matrix(hom_cfg_field, grid, N=cfg.N, stride=cfg.stride)
    hom_rep = verify_near_subadditivity(hom)
    reports = [verify_near_subadditivity(m) for m in matrices]
    write_ndjson(
        out / "subadditivity.ndjson",
        [
            {
                "seed": s, "alpha_hat": r.alpha_hat, "argmax": list(r.argmax_triple),
                "flatness": r.flatness, "beta": r.beta,
                "violations": r.n_violations, "triples": r.n_triples,
            }
            for s, r in zip(cfg.seeds, reports)
        ]
        + [{"seed": "homogeneous", "alpha_hat": hom_rep.alpha_hat, "flatness": hom_rep.flatness}],
    )
    worst_flat = max(r.flatness for r in reports)
    checks = [
        CheckResult("subadd-flatness", worst_flat <= 2.0 * hom_rep.flatness, worst_flat,
                    2.0 * hom_rep.flatness, "alpha spread across spans vs homogeneous transient"),
        CheckResult("subadd-corrected", all(r.subadditive_after_correction for r in reports),
                    float(sum(r.n_violations for r in reports)), 0.0,
                    "q + beta sqrt(span) exactly subadditive"),
    ]
    return checks


def _exp_spreading_theorem(cfg: ExperimentConfig, out: Path) -> list[CheckResult]:
    nl = cfg.nonlinearity()
    grid = cfg.grid()
    homogeneous = cfg.g_min == cfg.g_max
    if homogeneous:
        c_star = tw_speed_shoot(nl, cfg.g_min).speed
    else:
        matrices = _run_parallel(_matrix_job, [(cfg, s) for s in cfg.seeds], worker_count(cfg))
        c_star = estimate_speed(matrices).c_star
    field = cfg.field(cfg.seeds[0])
    box = make_box(cfg.box_half_width, grid)
    eps = cfg.eps * c_star
    report = spreading_theorem_check(field, box, c_star, -c_star, eps=eps, T=cfg.T, grid=grid)
    write_ndjson(
        out / "spreading.ndjson",
        [
            {"t": t, "inner_min": iv, "outer_max": ov}
            for t, iv, ov in zip(report.ladder_t, report.inner_min, report.outer_max)
        ]
        + [{"c_star": c_star, "eps": eps, "T": cfg.T}],
    )
    ladder_monotone = bool(np.all(np.diff(report.inner_min) >= -1e-3))
    checks = [
        CheckResult("spread-inner", report.final_inner >= 0.99, report.final_inner, 0.99,
                    "min u(T, cT) over the shrunk cone"),
        CheckResult("spread-outer", report.final_outer <= 0.01, report.final_outer, 0.01,
                    "max u(T, cT) outside the widened cone"),
        CheckResult("spread-ladder", ladder_monotone, float(np.min(np.diff(report.inner_min))), -1e-3,
                    "inner minimum non-decreasing along T/4, T/2, T"),
    ]
    return checks


def _exp_wave(cfg: ExperimentConfig, out: Path) -> list[CheckResult]:
    grid = cfg.grid()
    checks: list[CheckResult] = []
    for seed in cfg.seeds[:1]:
        field = cfg.field(seed)
        rec = construct_wave(
            field, grid, n_list=cfg.n_list, window_R=cfg.window_R,
            tol=cfg.wave_tol, xi_max=cfg.xi_max,
        )
        write_ndjson(
            out / f"wave_convergence_{seed}.ndjson",
            [
                {"n": r.n, "shift": r.shift, "residual": r.residual,
                 "gap": None if i == 0 else rec.cauchy_gaps[i - 1]}
                for i, r in enumerate(rec.runs)
            ],
        )
        write_csv(out / f"wave_profile_{seed}.csv", ["x", "W"], zip(rec.xs, rec.W))
        t_obs, X_obs = rec.interface_trajectory()
        write_ndjson(
            out / f"wave_interface_{seed}.ndjson",
            [{"t": float(t), "X": float(x)} for t, x in zip(t_obs[::10], X_obs[::10])],
        )
        lo_w = [xi for xi in range(50, 150)]
        hi_w = [xi for xi in range(150, 250)]
        ens_lo = passage_profiles(rec, lo_w)
        ens_hi = passage_profiles(rec, hi_w)
        write_csv(
            out / f"wave_passage_{seed}.csv", ["xi", "x", "u"],
            (
                (xi, x, u)
                for ens in (ens_lo, ens_hi)
                for xi, row in zip(ens.xis, ens.profiles)
                for x, u in zip(ens.offsets[:: max(len(ens.offsets) // 120, 1)],
                                row[:: max(len(ens.offsets) // 120, 1)])
            ),
        )
        ord_worst = max(rec.ordering_behind.max(), rec.ordering_ahead.max())
        checks += [
            CheckResult(f"wave-ordering-{seed}", ord_worst <= 1e-5, ord_worst, 1e-5),
            CheckResult(f"wave-cauchy-{seed}", rec.converged, float(rec.cauchy_gaps[-1]), cfg.wave_tol),
            CheckResult(f"wave-limits-{seed}", rec.W[0] >= 0.99 and rec.W[-1] <= 0.01,
                        float(min(rec.W[0], 1.0 - rec.W[-1])), 0.99, "W(-R) >= 0.99 and W(R) <= 0.01"),
            CheckResult(f"wave-monotone-{seed}", rec.min_interface_increment > 0.0,
                        rec.min_interface_increment, 0.0, "interface strictly increasing"),
        ]
        # passage-profile stationarity between disjoint windows, |x| <= 10
        sel = np.abs(ens_lo.offsets) <= 10.0
        m1, m2 = ens_lo.mean()[sel], ens_hi.mean()[sel]
        se = np.sqrt(ens_lo.var()[sel] / ens_lo.xis.size + ens_hi.var()[sel] / ens_hi.xis.size)
        zmax = float(np.max(np.abs(m1 - m2) / np.maximum(se, 1e-12)))
        checks.append(CheckResult(f"wave-stationarity-{seed}", zmax <= 2.0, zmax, 2.0,
                                  "mean passage profiles agree within two standard errors"))
    return checks


def _bump_run_job(cfg: ExperimentConfig, seed: int, T: float, snapshot_every: Optional[float]):
    grid = cfg.grid()
    field = cfg.field(seed)
    init = make_bump(0.5 * (1 + cfg.theta0), 0.0, field, grid)
    return evolve(
        init, field, grid, T, levels=(cfg.h, cfg.k_level), origin=0.0,
        snapshot_every=snapshot_every,
        provenance={"seed": seed},
    )


def _exp_envelope(cfg: ExperimentConfig, out: Path) -> list[CheckResult]:
    grid = cfg.grid()
    theta0 = cfg.theta0
    offsets = grid.dx * np.arange(-round(30.0 / grid.dx), round(10.0 / grid.dx) + 1)
    trajs = _run_parallel(
        _bump_run_job, [(cfg, s, cfg.T, 0.5) for s in cfg.seeds], worker_count(cfg)
    )
    frames = [front_frame_stack(tr, offsets, theta0, burn_in=cfg.burn_in) for tr in trajs]
    # the back branch needs runs old enough that [-30, 0] is burned
    c_lo = tw_speed_shoot(cfg.nonlinearity(), cfg.g_min).speed
    c_hi = tw_speed_shoot(cfg.nonlinearity(), cfg.g_max).speed
    back_from = (30.0 + 10.0) / c_lo
    calib, held = (frames, None) if len(frames) == 1 else (frames[:-1], frames[-1])
    env = estimate_envelope(calib, theta0, back_from=back_from)
    write_csv(out / "envelope.csv", ["x", "v"], zip(offsets, env.v(offsets)))
    write_ndjson(out / "envelope.ndjson", [{
        "p_hat": env.p_hat, "n_runs": env.n_runs, "n_profiles": env.n_profiles,
        "back_from": back_from, "seeds": list(cfg.seeds),
    }])
    write_front_stream(out / f"front_stream_{cfg.seeds[0]}.ndjson", trajs[0])
    summaries = []
    for seed, tr in zip(cfg.seeds, trajs):
        st = front_stats(tr, cfg.h, cfg.k_level, burn_in=cfg.burn_in)
        summaries.append({
            "seed": seed, "c_min": c_lo, "c_max": c_hi,
            "width_max": st.width_max, "p_hat": env.p_hat,
            "delta_hat": st.ut_at_X_min, "L_hat": st.xdot_min, "H_hat": st.xdot_max,
            "trend_ci": st.width_trend_ci,
        })
    write_ndjson(out / "front_summary.ndjson", summaries)
    checks = [CheckResult("envelope-p-positive", env.p_hat > 0, env.p_hat, 0.0)]
    if held is not None:
        ahead = offsets > 0
        back = offsets <= 0
        late = held.values[held.times >= back_from]
        exceed = float(np.max(held.values[:, ahead] - env.v(offsets[ahead])[None, :]))
        deficit = float(np.max(env.v(offsets[back])[None, :] - late[:, back]))
        checks += [
            CheckResult("envelope-ahead-heldout", exceed <= 1e-3, exceed, 1e-3,
                        "held-out run stays under the exponential envelope"),
            CheckResult("envelope-behind-heldout", deficit <= 1e-3, deficit, 1e-3,
                        "held-out run stays above the back envelope"),
        ]
    if cfg.g_min == cfg.g_max:
        wave = tw_speed_shoot(cfg.nonlinearity(), cfg.g_min)
        sel = offsets <= 0
        diff = float(np.max(np.abs(env.v(offsets[sel]) - wave.profile(offsets[sel]))))
        checks.append(CheckResult("envelope-vs-wave", diff <= 0.02, diff, 0.02,
                                  "homogeneous envelope matches the traveling wave profile"))
    return checks


def _exp_invariant_suite(cfg: ExperimentConfig, out: Path) -> list[CheckResult]:
    """Fast self-checks on the configured family: solver and profile invariants."""
    nl = cfg.nonlinearity()
    grid = cfg.grid()
    theta0 = cfg.theta0
    checks: list[CheckResult] = []

    # medium bounds and determinism over a wide window
    med = cfg.medium(cfg.seeds[0])
    xs = np.linspace(-500, 500, 20001)
    gv = med.g(xs)
    checks.append(CheckResult("medium-bounds", bool(gv.min() >= cfg.g_min - 1e-12 and gv.max() <= cfg.g_max + 1e-12),
                              float(gv.min()), cfg.g_min, "g within [g_min, g_max]"))
    checks.append(CheckResult("medium-determinism", bool(np.array_equal(gv, cfg.medium(cfg.seeds[0]).g(xs))),
                              0.0, 0.0, "bit-identical re-query"))

    # sub-solution growth and range preservation
    field = cfg.field(cfg.seeds[0])
    init = make_bump(0.5 * (1 + theta0), 0.0, field, grid)
    traj = evolve(init, field, grid, 10.0, snapshot_every=1.0)
    lows = [float(s.values.min()) for s in traj.snapshots]
    highs = [float(s.values.max()) for s in traj.snapshots]
    checks.append(CheckResult("range", bool(min(lows) >= -1e-9 and max(highs) <= 1 + 1e-9),
                              min(lows), -1e-9))
    grow = np.inf
    for snap in traj.snapshots:
        grow = min(grow, float(np.min(snap.values - init.interp(snap.x()))))
    checks.append(CheckResult("subsolution-growth", grow >= -1e-8, grow, -1e-8,
                              "evolved bump dominates its initial datum"))

    # super-solution harness at q from config
    cal_traj = evolve(init, field, grid, 40.0, snapshot_every=1.0)
    spec = calibrate_supersolution(cal_traj, q=cfg.q, s=cfg.s, field=field, gamma0=cfg.burn_in)
    rep = verify_supersolution(cal_traj, spec, field)
    checks.append(CheckResult("supersolution-residual", rep.ok, rep.min_residual, -1e-6))

    # homogeneous speed consistency at the configured coarse grid (loose 3%)
    if cfg.g_min == cfg.g_max:
        wave = tw_speed_shoot(nl, cfg.g_min)
        st_traj = evolve(init, field, grid, 80.0)
        t, X = st_traj.times(), st_traj.interface()
        sel = t >= 40.0
        slope = float(np.polyfit(t[sel], X[sel], 1)[0])
        rel = abs(slope - wave.speed) / wave.speed
        checks.append(CheckResult("tw-pde-speed", rel <= 0.03, rel, 0.03,
                                  "coarse-grid front speed vs shooting"))
    write_ndjson(out / "invariants.ndjson", [c.as_dict() for c in checks])
    return checks


_BODIES = {
    "tw-speed": _exp_tw_speed,
    "speed": _exp_speed,
    "subadditivity": _exp_subadditivity,
    "spreading-theorem": _exp_spreading_theorem,
    "wave": _exp_wave,
    "envelope": _exp_envelope,
    "invariant-suite": _exp_invariant_suite,
}


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> int:
    """Run the configured experiment; returns process exit status.

    Writes ``manifest.json`` before any results, result NDJSON/CSV files,
    and ``acceptance_summary.json`` with per-check pass/fail.  Returns 0
    iff every check passed; worker failures preserve partial results and
    are recorded in the manifest.
    """
    out = Path(out_dir if out_dir is not None else cfg.dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "experiment": cfg.experiment,
        "config_hash": cfg.content_hash,
        "code_version": __version__,
        "seeds": list(cfg.seeds),
        "config": cfg.raw_text,
        "status": "running",
    }
    (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), sort_keys=True, indent=1))
    t0 = time.monotonic()
    try:
        checks = _BODIES[cfg.experiment](cfg, out)
    except Exception as exc:  # preserve partial results, record the failure
        manifest["status"] = "failed"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        manifest["wall_clock_s"] = time.monotonic() - t0
        (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), sort_keys=True, indent=1))
        raise
    summary = {
        "experiment": cfg.experiment,
        "config_hash": cfg.content_hash,
        "checks": [c.as_dict() for c in checks],
        "all_passed": all(c.passed for c in checks),
    }
    (out / "acceptance_summary.json").write_text(json.dumps(_jsonable(summary), sort_keys=True, indent=1))
    manifest["status"] = "done"
    manifest["wall_clock_s"] = time.monotonic() - t0
    manifest["all_passed"] = summary["all_passed"]
    (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), sort_keys=True, indent=1))
    return 0 if summary["all_passed"] else 1

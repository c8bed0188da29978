"""Experiment registry: JSON configs in, CSV artifacts plus a manifest out.

Every experiment kind declares its required fields and defaults, validates
configs with field-path messages, and runs as a set of independent cells.
Cell randomness comes from counter-based streams seeded by (master seed,
kind id, cell index), so results do not depend on thread scheduling, and
CSV bytes are identical across reruns of the same (config, seed).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import anderson, greens, io, spectral
from .errors import ConfigError, NotElliptic, OcsError
from .model import assemble_dense, operator_from_description, random_one_channel

KIND_IDS = {
    "green_oracle": 1,
    "m_sweep": 2,
    "weyl": 3,
    "density_halfline": 4,
    "density_fullline": 5,
    "ac_criterion": 6,
    "interval_S": 7,
    "interval_A": 8,
    "moment_bound": 9,
    "well_balanced": 10,
    "finite_eigenfunctions": 11,
}


def _rng(seed: int, kind: str, *cell: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), KIND_IDS[kind], *map(int, cell)])


def _pool_map(fn: Callable, items, threads: int):
    """Order-preserving map over independent cells."""
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# config access with field-path errors
# ---------------------------------------------------------------------------


def _grid_values(val, path: str) -> np.ndarray:
    if isinstance(val, dict):
        missing = [k for k in ("lo", "hi", "n") if k not in val]
        if missing:
            raise ConfigError(path, f"grid needs lo/hi/n (missing {missing})")
        lo, hi, n = float(val["lo"]), float(val["hi"]), int(val["n"])
        if not lo < hi:
            raise ConfigError(path, "needs lo < hi")
        if n < 2:
            raise ConfigError(path, "needs n >= 2")
        return np.linspace(lo, hi, n)
    arr = np.asarray(val, dtype=float)
    if arr.ndim != 1 or len(arr) == 0:
        raise ConfigError(path, "expected a nonempty 1-d grid")
    if np.any(np.diff(arr) <= 0):
        raise ConfigError(path, "grid must be strictly increasing")
    return arr


def _validate_common(cfg: dict) -> list[str]:
    errors = []
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        errors.append("seed: must be a nonnegative integer")
    return errors


def _need(cfg, field_name, errors):
    if field_name not in cfg:
        errors.append(f"{field_name}: required field missing")
        return False
    return True


def _check_grid(cfg, field_name, errors):
    if _need(cfg, field_name, errors):
        try:
            _grid_values(cfg[field_name], field_name)
        except ConfigError as exc:
            errors.append(str(exc))


def _check_trials(cfg, errors, default=None):
    trials = cfg.get("trials", default)
    if trials is not None and (not isinstance(trials, int) or trials < 1):
        errors.append("trials: must be an integer >= 1")


def _check_disorder(cfg, errors):
    if _need(cfg, "disorder", errors):
        try:
            anderson.disorder_from_dict(cfg["disorder"])
        except (ConfigError, KeyError, TypeError) as exc:
            errors.append(f"disorder: {exc}")


def _check_model(cfg, errors):
    if _need(cfg, "model", errors) and not isinstance(cfg["model"], dict):
        errors.append("model: must be an object with a 'model' kind field")


def _pattern_spec(cfg: dict) -> anderson.PartialAntitreeSpec:
    pat = cfg["pattern"]
    return anderson.PartialAntitreeSpec(
        k_vec=tuple(pat["k_vec"]),
        O=np.array(pat["O"], dtype=float),
        a_diag=np.array(pat["a_diag"], dtype=float),
        r=pat.get("r", "const:s=4"),
        disorder=anderson.disorder_from_dict(cfg["disorder"]),
    )


# ---------------------------------------------------------------------------
# experiment kinds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentKind:
    name: str
    required: tuple[str, ...]
    defaults: dict
    validate: Callable[[dict], list[str]]
    run: Callable[[dict, Path, int, bool], tuple[dict, list[Path]]]
    summary_line: str


def _validate_green_oracle(cfg):
    errors = _validate_common(cfg)
    count = cfg.get("count", 50)
    if not isinstance(count, int) or count < 1:
        errors.append("count: must be an integer >= 1")
    im = cfg.get("im_range", [0.1, 2.0])
    if not (isinstance(im, (list, tuple)) and len(im) == 2 and 0 < im[0] <= im[1]):
        errors.append("im_range: needs 0 < lo <= hi")
    return errors


def _run_green_oracle(cfg, out, threads, verbose):
    seed = cfg.get("seed", 0)
    count = cfg.get("count", 50)
    s_max = cfg.get("s_max", 5)
    n_cap = cfg.get("N_max", 12)
    im_lo, im_hi = cfg.get("im_range", [0.1, 2.0])
    tol = cfg.get("tol", 1e-8)

    def cell(i: int):
        rng = _rng(seed, "green_oracle", i)
        op = random_one_channel(
            seed=int(rng.integers(2**31)), s_range=(1, s_max), n_max=None
        )
        N = int(rng.integers(3, n_cap + 1))
        z = complex(rng.uniform(-2, 2), rng.uniform(im_lo, im_hi))
        c = float(rng.uniform(-1, 1))
        m = int(rng.integers(1, N + 1))
        n = int(rng.integers(1, N + 1))
        dense = assemble_dense(op, N, c)
        A = dense.H - z * np.eye(dense.dim)
        sh_m, sh_n = op.shell(m), op.shell(n)
        rhs = np.column_stack(
            [dense.embed(n, sh_n.Upsilon), dense.embed(n, sh_n.Phi)]
        )
        sol = np.linalg.solve(A, rhs)
        ups_m = dense.embed(m, sh_m.Upsilon)
        phi_m = dense.embed(m, sh_m.Phi)
        want = {
            "uu": ups_m.conj() @ sol[:, 0],
            "up": ups_m.conj() @ sol[:, 1],
            "pu": phi_m.conj() @ sol[:, 0],
            "pp": phi_m.conj() @ sol[:, 1],
        }
        got = greens.channel_overlaps(op, N, c, z, m, n)
        err_ov = max(
            abs(got[k] - want[k]) / max(abs(want[k]), 1e-10) for k in want
        )
        eye_n = np.zeros((dense.dim, sh_n.dim))
        eye_n[dense.offsets[n], :] = np.eye(sh_n.dim)
        g_cols = np.linalg.solve(A, eye_n)
        want_block = g_cols[dense.offsets[m], :]
        got_block = greens.resolvent_block(op, N, c, z, m, n)
        err_blk = float(
            np.max(np.abs(got_block - want_block))
            / max(float(np.max(np.abs(want_block))), 1e-10)
        )
        m_t = greens.m_function(op, N, c, z, method="transfer")
        m_d = greens.m_function(op, N, c, z, method="dense")
        err_m = abs(m_t.value - m_d.value) / max(abs(m_d.value), 1e-10)
        return (i, N, z.real, z.imag, c, m, n, err_ov, err_blk, err_m)

    rows = _pool_map(cell, list(range(count)), threads)
    path = io.write_csv(
        out / "green_oracle.csv",
        ["cell", "N", "z_re", "z_im", "c", "m", "n",
         "err_overlaps", "err_block", "err_m"],
        rows,
    )
    worst = max(max(r[7], r[8], r[9]) for r in rows)
    return {"max_rel_err": worst, "tol": tol, "pass": worst <= tol}, [path]


def _validate_m_sweep(cfg):
    errors = _validate_common(cfg)
    _check_model(cfg, errors)
    if _need(cfg, "N", errors) and (not isinstance(cfg["N"], int) or cfg["N"] < 1):
        errors.append("N: must be an integer >= 1")
    _check_grid(cfg, "z_re", errors)
    z_im = cfg.get("z_im", 1.0)
    if not isinstance(z_im, (int, float)) or z_im <= 0:
        errors.append("z_im: must be a positive number")
    if cfg.get("method", "transfer") not in ("transfer", "dense"):
        errors.append("method: must be 'transfer' or 'dense'")
    return errors


def _run_m_sweep(cfg, out, threads, verbose):
    op = operator_from_description(cfg["model"])
    N = cfg["N"]
    c = complex(cfg.get("c", 0.0))
    z_im = float(cfg.get("z_im", 1.0))
    method = cfg.get("method", "transfer")
    res = _grid_values(cfg["z_re"], "z_re")

    def cell(re: float):
        mv = greens.m_function(op, N, c, complex(re, z_im), method=method)
        return (re, z_im, mv.value.real, mv.value.imag,
                mv.value_tilde.real, mv.value_tilde.imag)

    rows = _pool_map(cell, list(res), threads)
    path = io.write_csv(
        out / "m_sweep.csv",
        ["z_re", "z_im", "m_re", "m_im", "mt_re", "mt_im"],
        rows,
    )
    return {"n_points": len(rows), "N": N, "method": method}, [path]


def _validate_weyl(cfg):
    errors = _validate_common(cfg)
    _check_model(cfg, errors)
    z = cfg.get("z", [0.0, 1.0])
    if not (isinstance(z, (list, tuple)) and len(z) == 2 and z[1] != 0):
        errors.append("z: needs [re, im] with im != 0")
    n_max = cfg.get("n_max", 200)
    if not isinstance(n_max, int) or n_max < 2:
        errors.append("n_max: must be an integer >= 2")
    return errors


def _run_weyl(cfg, out, threads, verbose):
    op = operator_from_description(cfg["model"])
    zr, zi = cfg.get("z", [0.0, 1.0])
    z = complex(zr, zi)
    n_max = cfg.get("n_max", 200)
    ns = cfg.get("n_list") or sorted(
        set(np.unique(np.round(np.geomspace(2, n_max, 60)).astype(int)).tolist())
    )

    def cell(n: int):
        w = greens.weyl_radius(op, z, n)
        return (n, w.radius, w.radius_alt, w.center.real, w.center.imag,
                w.average_point.real, w.average_point.imag)

    rows = _pool_map(cell, list(ns), threads)
    diag = greens.limit_point_diagnostic(op, z, max(ns))
    path = io.write_csv(
        out / "weyl.csv",
        ["n", "radius", "radius_alt", "center_re", "center_im",
         "average_re", "average_im"],
        rows,
    )
    return {"verdict": diag.verdict, "final_radius": rows[-1][1]}, [path]


def _validate_density_halfline(cfg):
    errors = _validate_common(cfg)
    _check_model(cfg, errors)
    _check_grid(cfg, "grid", errors)
    w = cfg.get("window")
    if not (isinstance(w, (list, tuple)) and len(w) == 2
            and all(isinstance(x, int) for x in w) and 1 <= w[0] <= w[1]):
        errors.append("window: needs [n_lo, n_hi] integers with 1 <= n_lo <= n_hi")
    return errors


def _density_outputs(out, est: spectral.SpectralEstimate):
    masked = est.mask if est.mask is not None else np.zeros(len(est.grid), bool)
    osc = est.oscillation if est.oscillation is not None else np.full(len(est.grid), np.nan)
    rows = [
        (lam, d, int(mk), o)
        for lam, d, mk, o in zip(est.grid, est.density, masked, osc)
    ]
    paths = [io.write_csv(out / "density.csv",
                          ["lam", "density", "masked", "oscillation"], rows)]
    if est.point_masses:
        paths.append(io.write_csv(out / "atoms.csv", ["lam", "weight"],
                                  est.point_masses))
    lo, hi = float(est.grid[0]), float(est.grid[-1])
    summary = {
        "provenance": est.provenance,
        "n_masked": int(np.sum(masked)),
        "grid_mass": est.interval_mass(lo, hi),
        "atoms": [list(pm) for pm in est.point_masses],
    }
    return summary, paths


def _run_density_halfline(cfg, out, threads, verbose):
    op = operator_from_description(cfg["model"])
    grid = _grid_values(cfg["grid"], "grid")
    w = cfg["window"]
    est = spectral.halfline_density(
        op, grid, (int(w[0]), int(w[1])),
        detect_points=cfg.get("detect_points", True),
    )
    return _density_outputs(out, est)


def _validate_density_fullline(cfg):
    errors = _validate_density_halfline(cfg)
    mw = cfg.get("m_window")
    if not (isinstance(mw, (list, tuple)) and len(mw) == 2
            and all(isinstance(x, int) for x in mw) and 1 <= mw[0] <= mw[1]):
        errors.append("m_window: needs [m_lo, m_hi] integers with 1 <= m_lo <= m_hi")
    theta = cfg.get("theta_nodes", 64)
    if not isinstance(theta, int) or theta < 4:
        errors.append("theta_nodes: must be an integer >= 4")
    return errors


def _run_density_fullline(cfg, out, threads, verbose):
    op = operator_from_description(cfg["model"])
    grid = _grid_values(cfg["grid"], "grid")
    w, mw = cfg["window"], cfg["m_window"]
    est = spectral.fullline_density(
        op, grid, (int(mw[0]), int(mw[1])), (int(w[0]), int(w[1])),
        theta_nodes=cfg.get("theta_nodes", 64),
    )
    return _density_outputs(out, est)


def _validate_ac_criterion(cfg):
    errors = _validate_common(cfg)
    _check_model(cfg, errors)
    p = cfg.get("p", 4.0)
    if not isinstance(p, (int, float)) or p <= 2:
        errors.append("p: must be a number > 2")
    iv = cfg.get("interval")
    if not (isinstance(iv, (list, tuple)) and len(iv) == 2 and iv[0] < iv[1]):
        errors.append("interval: needs [a, b] with a < b")
    nl = cfg.get("n_list")
    if not (isinstance(nl, list) and nl and all(isinstance(x, int) and x >= 1 for x in nl)
            and sorted(nl) == nl):
        errors.append("n_list: needs a sorted list of integers >= 1")
    return errors


def _run_ac_criterion(cfg, out, threads, verbose):
    op = operator_from_description(cfg["model"])
    res = spectral.ac_criterion(
        op, float(cfg.get("p", 4.0)), tuple(cfg["interval"]), cfg["n_list"],
        n_points=cfg.get("n_points", 257),
    )
    path = io.write_csv(
        out / "ac_criterion.csv",
        ["n", "log_integral"],
        list(zip(res.n_list, res.log_integrals)),
    )
    summary = {
        "p": res.p, "verdict": res.verdict, "liminf_proxy": res.liminf_proxy,
        "masked_fraction": res.masked_fraction,
    }
    return summary, [path]


def _interval_outputs(out, rep: anderson.IntervalReport, trace_fn):
    traces = []
    for lam in rep.grid:
        try:
            traces.append(trace_fn(lam))
        except OcsError:
            traces.append(math.nan)
    rows = [
        (lam, int(mk), tr if math.isfinite(tr) else math.nan)
        for lam, mk, tr in zip(rep.grid, rep.mask, traces)
    ]
    paths = [
        io.write_csv(out / "mask.csv", ["lam", "elliptic", "trace"], rows),
        io.write_csv(out / "intervals.csv", ["lo", "hi"], rep.intervals),
    ]
    summary = {
        "n_intervals": len(rep.intervals),
        "endpoints": rep.endpoints,
        "excluded_points": rep.excluded_points,
    }
    return summary, paths


def _validate_interval_S(cfg):
    errors = _validate_common(cfg)
    _check_disorder(cfg, errors)
    _check_grid(cfg, "grid", errors)
    return errors


def _run_interval_S(cfg, out, threads, verbose):
    disorder = anderson.disorder_from_dict(cfg["disorder"])
    grid = _grid_values(cfg["grid"], "grid")
    rep = anderson.interval_S(disorder, grid)

    def trace_fn(lam):
        return anderson.limit_transfer_stretched(disorder, lam).trace

    return _interval_outputs(out, rep, trace_fn)


def _validate_interval_A(cfg):
    errors = _validate_common(cfg)
    _check_disorder(cfg, errors)
    _check_grid(cfg, "grid", errors)
    pat = cfg.get("pattern")
    if not isinstance(pat, dict):
        errors.append("pattern: required object with k_vec/O/a_diag/r")
    else:
        for key in ("k_vec", "O", "a_diag"):
            if key not in pat:
                errors.append(f"pattern.{key}: required field missing")
        if not errors:
            try:
                _pattern_spec(cfg)
            except (ConfigError, KeyError, ValueError) as exc:
                errors.append(f"pattern: {exc}")
    return errors


def _run_interval_A(cfg, out, threads, verbose):
    spec = _pattern_spec(cfg)
    grid = _grid_values(cfg["grid"], "grid")
    rep = anderson.interval_A(spec, grid)

    def trace_fn(lam):
        return anderson.limit_transfer_partial(spec, lam, check_domain=False).trace

    return _interval_outputs(out, rep, trace_fn)


def _validate_moment_bound(cfg):
    errors = _validate_common(cfg)
    _check_disorder(cfg, errors)
    if _need(cfg, "lam", errors) and not isinstance(cfg["lam"], (int, float)):
        errors.append("lam: must be a number")
    _check_trials(cfg, errors, default=10000)
    n_max = cfg.get("n_max", 300)
    if not isinstance(n_max, int) or n_max < 1:
        errors.append("n_max: must be an integer >= 1")
    return errors


def _run_moment_bound(cfg, out, threads, verbose):
    disorder = anderson.disorder_from_dict(cfg["disorder"])
    spec = anderson.StretchedAntitreeSpec(s=cfg.get("s", "poly:d=3"), disorder=disorder)
    lam = float(cfg["lam"])
    limit = anderson.limit_transfer_stretched(disorder, lam)
    if not limit.elliptic:
        raise NotElliptic(limit.trace)
    noise = anderson.stretched_noise_sampler(spec, lam, limit)
    rep = anderson.moment_bound_check(
        limit.matrix, noise,
        n_max=cfg.get("n_max", 300),
        trials=cfg.get("trials", 10000),
        rng=_rng(cfg.get("seed", 0), "moment_bound"),
        checkpoints=cfg.get("checkpoints"),
        c_trials=cfg.get("c_trials", 2000),
    )
    rows = [(n, e, se, rep.bound) for n, e, se in zip(rep.ns, rep.estimates, rep.stderrs)]
    path = io.write_csv(out / "moment_bound.csv",
                        ["n", "estimate", "stderr", "bound"], rows)
    summary = {
        "bound": rep.bound, "max_estimate": float(np.max(rep.estimates)),
        "pass": rep.passed, "f": rep.f, "C": rep.C, "lam": lam,
        "trace": limit.trace,
    }
    if not cfg.get("assert_bound", True):
        summary["pass"] = True
        summary["bound_satisfied"] = rep.passed
    return summary, [path]


def _validate_well_balanced(cfg):
    errors = _validate_common(cfg)
    _check_disorder(cfg, errors)
    if _need(cfg, "lam", errors) and not isinstance(cfg["lam"], (int, float)):
        errors.append("lam: must be a number")
    sizes = cfg.get("sizes")
    if not (isinstance(sizes, list) and len(sizes) >= 2
            and all(isinstance(s, int) and s >= 1 for s in sizes)
            and sorted(sizes) == sizes):
        errors.append("sizes: needs a sorted list (>= 2 entries) of integers >= 1")
    _check_trials(cfg, errors, default=10000)
    K = cfg.get("K", 2)
    if not isinstance(K, int) or not 1 <= K <= 4:
        errors.append("K: must be an integer in 1..4")
    if cfg.get("statistic", "beta") not in ("alpha", "beta", "delta"):
        errors.append("statistic: must be one of alpha/beta/delta")
    return errors


def _run_well_balanced(cfg, out, threads, verbose):
    disorder = anderson.disorder_from_dict(cfg["disorder"])
    lam = float(cfg["lam"])
    stat = cfg.get("statistic", "beta")
    limit = anderson.limit_transfer_stretched(disorder, lam)
    target = getattr(limit, stat)
    sampler = anderson.stretched_statistic_sampler(disorder, lam, stat)
    rep = anderson.well_balanced_check(
        sampler, target, cfg["sizes"], K=cfg.get("K", 2),
        trials=cfg.get("trials", 10000),
        rng=_rng(cfg.get("seed", 0), "well_balanced"),
    )
    rows = []
    for i, s in enumerate(rep.sizes):
        for k in sorted(rep.moments):
            rows.append((s, k, rep.moments[k][i]))
    paths = [
        io.write_csv(out / "moments.csv", ["size", "k", "moment"], rows),
        io.write_csv(out / "mean_dev.csv", ["size", "mean_dev"],
                     list(zip(rep.sizes, rep.mean_devs))),
    ]
    summary = {
        "pass": rep.passed, "statistic": stat, "lam": lam, "target": target,
        "slopes": {str(k): v for k, v in rep.slopes.items()},
        "mean_slope": rep.mean_slope, "notes": rep.notes,
    }
    return summary, paths


def _validate_finite_eigenfunctions(cfg):
    errors = _validate_common(cfg)
    _check_model(cfg, errors)
    for key in ("l", "m"):
        if _need(cfg, key, errors) and not isinstance(cfg[key], int):
            errors.append(f"{key}: must be an integer")
    if "l" in cfg and "m" in cfg and isinstance(cfg["l"], int) \
            and isinstance(cfg["m"], int) and cfg["l"] > cfg["m"]:
        errors.append("l: must satisfy l <= m")
    return errors


def _run_finite_eigenfunctions(cfg, out, threads, verbose):
    op = operator_from_description(cfg["model"])
    candidates = cfg.get("candidates")
    if "lam" in cfg:
        candidates = [float(cfg["lam"])]
    found = spectral.finite_eigenfunctions(
        op, cfg["l"], cfg["m"], candidates=candidates,
        residual_tol=cfg.get("residual_tol", 1e-8),
    )
    rows = []
    block_rows = []
    for fn in found:
        rows.append((fn.lam, fn.support[0], fn.support[1], fn.residual,
                     fn.norm(), fn.case_tags[0], fn.case_tags[1]))
        for shell_n in sorted(fn.blocks):
            for idx, val in enumerate(np.atleast_1d(fn.blocks[shell_n])):
                cval = complex(val)
                block_rows.append((fn.lam, shell_n, idx, cval.real, cval.imag))
    paths = [
        io.write_csv(out / "eigenfunctions.csv",
                     ["lam", "support_lo", "support_hi", "residual", "norm",
                      "left_case", "right_case"], rows),
        io.write_csv(out / "blocks.csv",
                     ["lam", "shell", "idx", "re", "im"], block_rows),
    ]
    return {"count": len(found), "lams": [fn.lam for fn in found]}, paths


EXPERIMENTS: dict[str, ExperimentKind] = {
    "green_oracle": ExperimentKind(
        "green_oracle", (),
        {"count": 50, "s_max": 5, "N_max": 12, "im_range": [0.1, 2.0],
         "tol": 1e-8, "seed": 0},
        _validate_green_oracle, _run_green_oracle,
        "resolvent identities vs dense inversion on random models",
    ),
    "m_sweep": ExperimentKind(
        "m_sweep", ("model", "N", "z_re"),
        {"c": 0.0, "z_im": 1.0, "method": "transfer", "seed": 0},
        _validate_m_sweep, _run_m_sweep,
        "boundary m-function over a z grid",
    ),
    "weyl": ExperimentKind(
        "weyl", ("model",),
        {"z": [0.0, 1.0], "n_max": 200, "seed": 0},
        _validate_weyl, _run_weyl,
        "nested-circle radii and limit-point verdict",
    ),
    "density_halfline": ExperimentKind(
        "density_halfline", ("model", "grid", "window"),
        {"detect_points": True, "seed": 0},
        _validate_density_halfline, _run_density_halfline,
        "spectral density on the half line with window averaging",
    ),
    "density_fullline": ExperimentKind(
        "density_fullline", ("model", "grid", "window", "m_window"),
        {"theta_nodes": 64, "seed": 0},
        _validate_density_fullline, _run_density_fullline,
        "full-line spectral density via boundary-angle quadrature",
    ),
    "ac_criterion": ExperimentKind(
        "ac_criterion", ("model", "interval", "n_list"),
        {"p": 4.0, "n_points": 257, "seed": 0},
        _validate_ac_criterion, _run_ac_criterion,
        "transfer-norm integrals I_n and boundedness verdict",
    ),
    "interval_S": ExperimentKind(
        "interval_S", ("disorder", "grid"),
        {"seed": 0},
        _validate_interval_S, _run_interval_S,
        "elliptic window of the stretched family",
    ),
    "interval_A": ExperimentKind(
        "interval_A", ("pattern", "disorder", "grid"),
        {"seed": 0},
        _validate_interval_A, _run_interval_A,
        "elliptic window of the homogeneous-modes family",
    ),
    "moment_bound": ExperimentKind(
        "moment_bound", ("disorder", "lam"),
        {"s": "poly:d=3", "n_max": 300, "trials": 10000, "c_trials": 2000,
         "assert_bound": True, "seed": 0},
        _validate_moment_bound, _run_moment_bound,
        "fourth moment of noisy elliptic products vs the analytic bound",
    ),
    "well_balanced": ExperimentKind(
        "well_balanced", ("disorder", "lam", "sizes"),
        {"statistic": "beta", "K": 2, "trials": 10000, "seed": 0},
        _validate_well_balanced, _run_well_balanced,
        "moment convergence slopes against shell size",
    ),
    "finite_eigenfunctions": ExperimentKind(
        "finite_eigenfunctions", ("model", "l", "m"),
        {"residual_tol": 1e-8, "seed": 0},
        _validate_finite_eigenfunctions, _run_finite_eigenfunctions,
        "compactly supported eigenfunctions between two shells",
    ),
}


def validate_config(cfg: dict) -> list[str]:
    """All validation problems as "field: message" strings (empty = valid)."""
    if not isinstance(cfg, dict):
        return ["config: must be a JSON object"]
    kind = cfg.get("experiment")
    if kind not in EXPERIMENTS:
        known = ", ".join(sorted(EXPERIMENTS))
        return [f"experiment: unknown kind {kind!r} (known: {known})"]
    exp = EXPERIMENTS[kind]
    errors = [f"{f}: required field missing" for f in exp.required if f not in cfg]
    if errors:
        return errors
    return exp.validate(cfg)


def run_experiment(cfg: dict, out_dir, threads: int = 1, verbose: bool = False) -> dict:
    """Validate, run, and write artifacts + manifest; returns the summary."""
    errors = validate_config(cfg)
    if errors:
        raise ConfigError("config", "; ".join(errors))
    kind = cfg["experiment"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.log(verbose, f"running {kind} -> {out}")
    t0 = time.perf_counter()
    summary, paths = EXPERIMENTS[kind].run(cfg, out, threads, verbose)
    wall = time.perf_counter() - t0
    outputs = {p.name: io.file_sha256(p) for p in paths}
    io.write_manifest(out, cfg, cfg.get("seed", 0), wall, outputs, summary)
    io.log(verbose, f"done in {wall:.2f}s: {summary}")
    return summary


def registry_lines() -> list[str]:
    """Human-readable registry dump for the list command."""
    lines = []
    for name in sorted(EXPERIMENTS):
        exp = EXPERIMENTS[name]
        req = ", ".join(exp.required) if exp.required else "(none)"
        defaults = ", ".join(f"{k}={v}" for k, v in sorted(exp.defaults.items()))
        lines.append(f"{name}: {exp.summary_line}")
        lines.append(f"  required: {req}")
        lines.append(f"  defaults: {defaults}")
    return lines

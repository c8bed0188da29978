"""Experiment registry: config validation, runners, manifests, determinism."""

import math

import numpy as np
import pytest

from ocs.anderson import DisorderSpec, hat_pattern_spec
from ocs.errors import ConfigError, NotElliptic
from ocs.experiments import registry_lines, run_experiment, validate_config
from ocs.io import config_hash, file_sha256, read_csv

ALL_KINDS = [
    "ac_criterion", "density_fullline", "density_halfline",
    "finite_eigenfunctions", "green_oracle", "interval_A", "interval_S",
    "m_sweep", "moment_bound", "well_balanced", "weyl",
]

JACOBI = {"model": "jacobi"}


def _csv_names(out):
    return sorted(p.name for p in out.iterdir() if p.suffix == ".csv")


# ---------------------------------------------------------------- validation

def test_registry_lines_cover_all_kinds():
    lines = registry_lines()
    heads = [ln.split(":")[0] for ln in lines if not ln.startswith(" ")]
    assert heads == ALL_KINDS
    # each kind contributes a header plus required/defaults detail lines
    assert sum(ln.lstrip().startswith("required:") for ln in lines) == len(ALL_KINDS)
    assert sum(ln.lstrip().startswith("defaults:") for ln in lines) == len(ALL_KINDS)


def test_validate_unknown_kind_lists_the_registry():
    msgs = validate_config({"experiment": "nope"})
    assert len(msgs) == 1
    assert msgs[0].startswith("experiment: unknown kind 'nope'")
    for kind in ("green_oracle", "interval_A", "weyl"):
        assert kind in msgs[0]


def test_validate_rejects_non_object_config():
    assert validate_config([1, 2]) == ["config: must be a JSON object"]


def test_validate_missing_required_fields():
    assert validate_config({"experiment": "weyl"}) == ["model: required field missing"]
    msgs = validate_config({"experiment": "finite_eigenfunctions",
                            "model": JACOBI, "m": 2})
    assert msgs == ["l: required field missing"]


def test_validate_reports_every_bad_field_with_its_path():
    msgs = validate_config({"experiment": "m_sweep", "model": JACOBI,
                            "N": 0, "z_re": {"lo": 1, "hi": -1, "n": 5}, "z_im": -2})
    assert set(msgs) == {
        "N: must be an integer >= 1",
        "z_re: needs lo < hi",
        "z_im: must be a positive number",
    }


def test_validate_grid_shapes():
    assert validate_config({"experiment": "m_sweep", "model": JACOBI, "N": 5,
                            "z_re": [1.0, 0.0]}) == ["z_re: grid must be strictly increasing"]
    msgs = validate_config({"experiment": "interval_S",
                            "disorder": {"kind": "point", "value": 0.0},
                            "grid": {"lo": 0, "hi": 1, "n": 1}})
    assert msgs == ["grid: needs n >= 2"]


def test_validate_accepts_good_config():
    assert validate_config({"experiment": "m_sweep", "model": JACOBI, "N": 5,
                            "z_re": [-1.0, 0.0, 1.0]}) == []


def test_run_rejects_bad_config_without_artifacts(tmp_path):
    out = tmp_path / "bad"
    with pytest.raises(ConfigError):
        run_experiment({"experiment": "weyl"}, out)
    assert not out.exists()


# ------------------------------------------------------------------- runners

def test_green_oracle_run_and_manifest(tmp_path):
    cfg = {"experiment": "green_oracle", "count": 4, "s_max": 3, "N_max": 8, "seed": 1}
    out = tmp_path / "go"
    summary = run_experiment(cfg, out)
    assert summary["pass"]
    assert summary["tol"] == 1e-8
    assert summary["max_rel_err"] < 1e-12
    assert _csv_names(out) == ["green_oracle.csv"]
    cols = read_csv(out / "green_oracle.csv")
    assert list(cols) == ["cell", "N", "z_re", "z_im", "c", "m", "n",
                          "err_overlaps", "err_block", "err_m"]

    import json
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"] == cfg
    assert man["config_hash"] == config_hash(cfg)
    assert man["seed"] == 1
    assert set(man["versions"]) == {"python", "numpy", "scipy", "ocs"}
    assert isinstance(man["wall_time_s"], float)
    assert man["outputs"] == {"green_oracle.csv": file_sha256(out / "green_oracle.csv")}
    assert man["summary"]["pass"] is True


def test_green_oracle_deterministic_and_thread_invariant(tmp_path):
    cfg = {"experiment": "green_oracle", "count": 4, "s_max": 3, "N_max": 8, "seed": 1}
    runs = {}
    for name, threads in (("a", 1), ("b", 1), ("c", 2)):
        out = tmp_path / name
        run_experiment(cfg, out, threads=threads)
        runs[name] = (out / "green_oracle.csv").read_bytes()
    assert runs["a"] == runs["b"] == runs["c"]


def test_m_sweep_herglotz_columns(tmp_path):
    cfg = {"experiment": "m_sweep", "model": JACOBI, "N": 40,
           "z_re": [-1.0, -0.5, 0.0, 0.5, 1.0]}
    summary = run_experiment(cfg, tmp_path / "ms")
    assert summary["N"] == 40
    cols = read_csv(tmp_path / "ms" / "m_sweep.csv")
    assert list(cols) == ["z_re", "z_im", "m_re", "m_im", "mt_re", "mt_im"]
    assert len(cols["z_re"]) == 5
    assert np.all(cols["z_im"] == 1.0)
    # boundary m-functions map the upper half plane to itself
    assert np.all(cols["m_im"] > 0)
    assert np.all(cols["mt_im"] > 0)


def test_weyl_free_jacobi_is_limit_point(tmp_path):
    cfg = {"experiment": "weyl", "model": JACOBI, "n_list": [10, 20, 40]}
    summary = run_experiment(cfg, tmp_path / "wy")
    assert summary["verdict"] == "limit-point-like"
    assert summary["final_radius"] < 1e-12
    cols = read_csv(tmp_path / "wy" / "weyl.csv")
    assert list(cols) == ["n", "radius", "radius_alt", "center_re", "center_im",
                          "average_re", "average_im"]
    assert list(cols["n"]) == [10, 20, 40]
    # radii nest: each truncation disc contains the next one
    assert np.all(np.diff(cols["radius"]) < 0)


def test_ac_criterion_bounded_inside_band(tmp_path):
    cfg = {"experiment": "ac_criterion", "model": JACOBI,
           "interval": [-0.9, 0.9], "n_list": [4, 8, 16], "n_points": 65}
    summary = run_experiment(cfg, tmp_path / "ac")
    assert summary["verdict"] == "bounded-like"
    assert summary["masked_fraction"] == 0.0
    assert summary["p"] == 4.0
    cols = read_csv(tmp_path / "ac" / "ac_criterion.csv")
    assert list(cols) == ["n", "log_integral"]
    assert list(cols["n"]) == [4, 8, 16]


def test_ac_criterion_diverges_outside_spectrum(tmp_path):
    cfg = {"experiment": "ac_criterion", "model": JACOBI,
           "interval": [2.5, 3.0], "n_list": [4, 8, 16], "n_points": 65}
    summary = run_experiment(cfg, tmp_path / "ac")
    assert summary["verdict"] == "diverging-like"


def test_density_halfline_mass_matches_semicircle(tmp_path):
    cfg = {"experiment": "density_halfline", "model": JACOBI,
           "grid": {"lo": -1.5, "hi": 1.5, "n": 31}, "window": [60, 120]}
    summary = run_experiment(cfg, tmp_path / "dh")
    assert summary["provenance"] == "transfer_halfline"
    assert summary["n_masked"] == 0
    assert summary["atoms"] == []
    # int_{-3/2}^{3/2} sqrt(4 - x^2) / (2 pi) dx
    ref = (1.5 * math.sqrt(1.75) + 4.0 * math.asin(0.75)) / (2.0 * math.pi)
    assert abs(summary["grid_mass"] - ref) < 0.02 * ref
    cols = read_csv(tmp_path / "dh" / "density.csv")
    assert list(cols) == ["lam", "density", "masked", "oscillation"]
    assert np.all(cols["masked"] == 0)
    assert np.all(cols["density"] > 0)


def test_density_fullline_mass_matches_twice_arcsine(tmp_path):
    cfg = {"experiment": "density_fullline",
           "model": {"model": "jacobi", "geometry": "full"},
           "grid": {"lo": -0.9, "hi": 0.9, "n": 13}, "window": [60, 120],
           "m_window": [60, 120], "theta_nodes": 32}
    summary = run_experiment(cfg, tmp_path / "df")
    assert summary["provenance"] == "transfer_fullline"
    assert summary["n_masked"] == 0
    # trace measure of the free full-line model: two arcsine components
    ref = 2.0 * (2.0 / math.pi) * math.asin(0.45)
    assert abs(summary["grid_mass"] - ref) < 0.02 * ref


def _match_sets(found, reference, tol):
    found = sorted(found)
    reference = sorted(reference)
    assert all(min(abs(e - r) for r in reference) <= tol for e in found)
    assert all(min(abs(e - r) for e in found) <= tol for r in reference)


def test_interval_S_experiment_recovers_unit_gaps(tmp_path):
    cfg = {"experiment": "interval_S", "disorder": {"kind": "point", "value": 0.0},
           "grid": {"lo": -2.5, "hi": 2.5, "n": 240}}
    summary = run_experiment(cfg, tmp_path / "is")
    assert summary["n_intervals"] == 4
    _match_sets(summary["endpoints"], [-2.0, -1.0, 0.0, 1.0, 2.0], 1e-6)
    _match_sets(summary["excluded_points"], [-1.0, 0.0, 1.0], 1e-6)
    ints = read_csv(tmp_path / "is" / "intervals.csv")
    assert list(ints) == ["lo", "hi"]
    assert len(ints["lo"]) == 4
    assert np.all(ints["lo"] < ints["hi"])
    mask = read_csv(tmp_path / "is" / "mask.csv")
    assert list(mask) == ["lam", "elliptic", "trace"]
    assert len(mask["lam"]) == 240


def test_interval_A_experiment_recovers_hat_window(tmp_path):
    hat = hat_pattern_spec(DisorderSpec.point(0.0))
    cfg = {"experiment": "interval_A",
           "pattern": {"k_vec": [2, 2, 2], "O": hat.O.tolist(),
                       "a_diag": list(hat.a_diag)},
           "disorder": {"kind": "point", "value": 0.0},
           "grid": {"lo": -2.4, "hi": 2.4, "n": 121}}
    summary = run_experiment(cfg, tmp_path / "ia")
    assert summary["n_intervals"] == 6
    root2 = math.sqrt(2.0)
    _match_sets(summary["endpoints"],
                [-2.0, -root2, -1.0, 0.0, 1.0, root2, 2.0], 1e-6)
    _match_sets(summary["excluded_points"], [-root2, 0.0, root2], 1e-6)


def test_moment_bound_experiment_passes(tmp_path):
    cfg = {"experiment": "moment_bound",
           "disorder": {"kind": "two_point", "sigma": 0.5}, "lam": 1.8,
           "s": "poly:d=3,c=8", "n_max": 10, "trials": 120, "c_trials": 150,
           "seed": 3}
    summary = run_experiment(cfg, tmp_path / "mb")
    assert summary["pass"]
    assert abs(summary["f"] - 2.9049) < 2e-3
    assert abs(summary["trace"] - 0.4964) < 2e-3
    assert math.isfinite(summary["bound"])
    assert summary["max_estimate"] < summary["bound"]
    cols = read_csv(tmp_path / "mb" / "moment_bound.csv")
    assert list(cols) == ["n", "estimate", "stderr", "bound"]
    assert np.all(cols["estimate"] + 3 * cols["stderr"] < cols["bound"])


def test_moment_bound_report_only_mode(tmp_path):
    # s_n = n^3 at lam = 2 overflows the analytic bound; report-only mode
    # still records the (vacuous) comparison instead of failing the run
    cfg = {"experiment": "moment_bound",
           "disorder": {"kind": "two_point", "sigma": 0.5}, "lam": 2.0,
           "s": "poly:d=3", "n_max": 8, "trials": 60, "c_trials": 80,
           "seed": 4, "assert_bound": False}
    summary = run_experiment(cfg, tmp_path / "mb")
    assert summary["pass"] is True
    assert summary["bound_satisfied"] is True
    assert summary["bound"] == math.inf


def test_moment_bound_rejects_non_elliptic_energy(tmp_path):
    cfg = {"experiment": "moment_bound",
           "disorder": {"kind": "two_point", "sigma": 0.5}, "lam": 2.5,
           "n_max": 8, "trials": 60, "c_trials": 80}
    with pytest.raises(NotElliptic):
        run_experiment(cfg, tmp_path / "mb")


def test_well_balanced_experiment_slopes(tmp_path):
    cfg = {"experiment": "well_balanced",
           "disorder": {"kind": "two_point", "sigma": 0.5}, "lam": 2.5,
           "statistic": "beta", "sizes": [200, 2000], "K": 1, "trials": 400,
           "seed": 2}
    summary = run_experiment(cfg, tmp_path / "wb")
    assert summary["pass"]
    assert set(summary["slopes"]) == {"1", "2"}
    assert abs(summary["slopes"]["1"] + 0.5) <= 0.15
    assert abs(summary["slopes"]["2"] + 1.0) <= 0.15
    assert summary["mean_slope"] is None
    assert _csv_names(tmp_path / "wb") == ["mean_dev.csv", "moments.csv"]
    moments = read_csv(tmp_path / "wb" / "moments.csv")
    assert list(moments) == ["size", "k", "moment"]


SHELLS_WITH_ATOM = [
    {"n": 1, "V": [[0.5, 0.0], [0.0, -1.3]], "a": 1.0,
     "Upsilon": [0.8, 0.6], "Phi": [0.6, -0.8]},
    {"n": 2, "V": [[0.2]], "a": -1.0, "Upsilon": [1.0], "Phi": [1.0]},
    {"n": 3, "V": [[0.5, 0.0, 0.0], [0.0, 1.7, 0.0], [0.0, 0.0, 2.4]],
     "a": -1.0, "Upsilon": [0.6, 0.8, 0.0], "Phi": [0.0, 0.6, 0.8]},
    {"n": 4, "V": [[-0.4]], "a": -1.0, "Upsilon": [1.0], "Phi": [1.0]},
    {"n": 5, "V": [[0.9]], "a": -1.0, "Upsilon": [1.0], "Phi": [1.0]},
    {"n": 6, "V": [[-0.4]], "a": -1.0, "Upsilon": [1.0], "Phi": [1.0]},
]


def test_finite_eigenfunctions_experiment_finds_the_atom(tmp_path):
    cfg = {"experiment": "finite_eigenfunctions",
           "model": {"model": "custom", "shells": SHELLS_WITH_ATOM},
           "l": 0, "m": 2, "residual_tol": 1e-9}
    summary = run_experiment(cfg, tmp_path / "fe")
    assert summary["count"] == 1
    assert summary["lams"] == [0.5]
    ef = read_csv(tmp_path / "fe" / "eigenfunctions.csv")
    assert ef["support_lo"][0] == 1.0 and ef["support_hi"][0] == 3.0
    assert ef["residual"][0] < 1e-12
    assert abs(ef["norm"][0] - math.sqrt(3.125)) < 1e-9
    assert ef["left_case"][0] == "dirichlet-wall"
    assert ef["right_case"][0] == "eigenvector"
    blocks = read_csv(tmp_path / "fe" / "blocks.csv")
    assert list(blocks["shell"]) == [1.0, 1.0, 3.0, 3.0, 3.0]
    assert list(blocks["idx"]) == [0.0, 1.0, 0.0, 1.0, 2.0]
    assert np.allclose(blocks["re"], [1.25, 0.0, -1.25, 0.0, 0.0], atol=1e-9)
    assert np.allclose(blocks["im"], 0.0, atol=1e-12)


def test_manifest_outputs_cover_every_csv(tmp_path):
    import json
    cfg = {"experiment": "interval_S", "disorder": {"kind": "point", "value": 0.0},
           "grid": {"lo": -2.5, "hi": 2.5, "n": 60}}
    out = tmp_path / "is"
    run_experiment(cfg, out)
    man = json.loads((out / "manifest.json").read_text())
    assert sorted(man["outputs"]) == _csv_names(out)
    for name, digest in man["outputs"].items():
        assert digest == file_sha256(out / name)
    assert man["config_hash"] == config_hash(cfg)


def test_density_threads_do_not_change_bytes(tmp_path):
    cfg = {"experiment": "density_halfline", "model": JACOBI,
           "grid": {"lo": -1.0, "hi": 1.0, "n": 11}, "window": [40, 80]}
    run_experiment(cfg, tmp_path / "t1", threads=1)
    run_experiment(cfg, tmp_path / "t2", threads=3)
    assert (tmp_path / "t1" / "density.csv").read_bytes() == \
        (tmp_path / "t2" / "density.csv").read_bytes()

"""Density estimation, histograms, the a.c. criterion and eigenfunctions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ocs.errors import ColinearityFailed, OcsError
from ocs.greens import fundamental_solutions
from ocs.model import jacobi_operator, random_one_channel
from ocs.spectral import (
    ac_criterion,
    ac_verdict,
    eigen_histogram,
    finite_eigenfunction,
    finite_eigenfunctions,
    fullline_density,
    halfline_density,
    wall_eigenfunction_search,
)

from helpers import three_shell_atom_op

# closed forms for the free half-line model (diagonal 0, offdiagonal 1):
# density sqrt(4-lam^2)/(2 pi) on [-2, 2], CDF over [-1, 1] below
FREE_MASS_M1_P1 = math.sqrt(3.0) / (2.0 * math.pi) + 1.0 / 3.0


def free_halfline():
    return jacobi_operator(v=0.0, a=-1.0)


def semicircle_cdf(x: float) -> float:
    x = min(max(x, -2.0), 2.0)
    return 0.5 + x * math.sqrt(4.0 - x * x) / (4.0 * math.pi) + math.asin(x / 2.0) / math.pi


# ---------------------------------------------------------------------------
# half-line density
# ---------------------------------------------------------------------------


def test_halfline_free_jacobi_cdf_window():
    est = halfline_density(free_halfline(), np.linspace(-1.98, 1.98, 397), (200, 400))
    mass = est.interval_mass(-1.0, 1.0)
    assert abs(mass - FREE_MASS_M1_P1) <= 0.02 * FREE_MASS_M1_P1
    assert not est.point_masses
    assert np.all(est.density >= 0)


def test_halfline_density_vanishes_outside_spectrum():
    est = halfline_density(free_halfline(), np.array([2.5, 3.0, -2.7]), (40, 80))
    assert np.all(est.density < 1e-8)


def test_halfline_matches_eigen_histogram_on_partition():
    # transfer CDF vs dense-truncation CDF on 10 intervals across the bulk
    op = free_halfline()
    est = halfline_density(op, np.linspace(-1.98, 1.98, 397), (200, 400))
    hist = eigen_histogram(op, 800, 0.0, {1: [1.0]})
    edges = np.linspace(-1.8, 1.8, 11)
    for a, b in zip(edges[:-1], edges[1:]):
        tm = est.interval_mass(float(a), float(b))
        hm = sum(wt for lam, wt in hist.point_masses if a <= lam <= b)
        assert abs(tm - hm) <= 0.02


def test_halfline_oscillation_diagnostic_present():
    est = halfline_density(free_halfline(), np.linspace(-1.5, 1.5, 61), (50, 100))
    assert est.oscillation.shape == est.grid.shape
    assert np.all(np.isfinite(est.oscillation))
    assert np.all(est.oscillation >= 0)


def test_halfline_rejects_bad_window():
    with pytest.raises(OcsError):
        halfline_density(free_halfline(), np.linspace(-1, 1, 5), (10, 5))


def test_halfline_detects_atom_of_handbuilt_model():
    op, lam0 = three_shell_atom_op()
    est = halfline_density(op, np.linspace(-3.0, 3.5, 131), (60, 120))
    assert len(est.point_masses) == 1
    loc, weight = est.point_masses[0]
    assert abs(loc - lam0) < 1e-12
    # weight equals |<Upsilon_1, psi>|^2 of the normalized eigenfunction,
    # which the construction pins to 1/||Psi||^2 = 0.32
    assert abs(weight - 0.32) < 1e-6
    hist = eigen_histogram(op, 300, 0.0, {1: op.shell(1).Upsilon})
    hist_w = sum(wt for lam, wt in hist.point_masses if abs(lam - lam0) < 1e-9)
    assert abs(weight - hist_w) < 1e-6


# ---------------------------------------------------------------------------
# full-line density
# ---------------------------------------------------------------------------


def test_fullline_free_jacobi_interval_mass():
    op = jacobi_operator(v=0.0, a=-1.0, geometry="full")
    grid = np.linspace(-1.5, 1.5, 121)
    est = fullline_density(op, grid, (60, 120), (60, 120))
    hist = eigen_histogram(op, 400, 0.0, [(1.0, {1: [1.0]}), (1.0, {0: [1.0]})])
    tm = est.interval_mass(-1.0, 1.0)
    hm = sum(wt for lam, wt in hist.point_masses if -1 <= lam <= 1)
    assert abs(tm - hm) <= 0.03 * hm


def test_fullline_density_symmetric_for_even_model():
    op = jacobi_operator(v=0.0, a=-1.0, geometry="full")
    grid = np.linspace(-1.5, 1.5, 121)
    est = fullline_density(op, grid, (60, 120), (60, 120))
    rel = np.abs(est.density - est.density[::-1]) / np.maximum(est.density, 1e-30)
    assert np.max(rel) < 1e-9


def test_fullline_theta_quadrature_converged():
    op = jacobi_operator(v=0.0, a=-1.0, geometry="full")
    grid = np.linspace(-1.2, 1.2, 41)
    est64 = fullline_density(op, grid, (40, 80), (40, 80), theta_nodes=64)
    est128 = fullline_density(op, grid, (40, 80), (40, 80), theta_nodes=128)
    rel = np.abs(est64.density - est128.density) / np.maximum(est128.density, 1e-30)
    assert np.max(rel) < 1e-3


def test_fullline_rejects_halfline_geometry():
    with pytest.raises(OcsError):
        fullline_density(free_halfline(), np.linspace(-1, 1, 5), (2, 4), (2, 4))


# ---------------------------------------------------------------------------
# eigen histogram
# ---------------------------------------------------------------------------


def test_histogram_scalar_single_mass():
    op = jacobi_operator(v=0.7, a=-1.0)
    est = eigen_histogram(op, 1, 0.0, {1: [1.0]})
    assert len(est.point_masses) == 1
    lam, wt = est.point_masses[0]
    assert abs(lam - 0.7) < 1e-14 and abs(wt - 1.0) < 1e-14


def test_histogram_free_jacobi_cdf_close_to_semicircle():
    hist = eigen_histogram(free_halfline(), 800, 0.0, {1: [1.0]})
    for x in np.linspace(-1.8, 1.8, 19):
        hm = sum(wt for lam, wt in hist.point_masses if lam <= x)
        assert abs(hm - semicircle_cdf(float(x))) < 0.01


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_histogram_mass_conservation(seed):
    op = random_one_channel(seed=seed, s_range=(1, 4))
    rng = np.random.default_rng(seed)
    mapping = {}
    for n in range(1, 4):
        d = op.shell(n).dim
        mapping[n] = rng.normal(size=d) + 1j * rng.normal(size=d)
    nrm = math.sqrt(sum(float(np.linalg.norm(v) ** 2) for v in mapping.values()))
    mapping = {n: v / nrm for n, v in mapping.items()}
    est = eigen_histogram(op, 5, 0.3, mapping)
    total = sum(wt for _, wt in est.point_masses)
    assert abs(total - 1.0) <= 1e-10
    assert all(wt >= 0 for _, wt in est.point_masses)


# ---------------------------------------------------------------------------
# Radon-Nikodym comparisons against the exact free density
# ---------------------------------------------------------------------------


def test_rn_derivative_equality_and_bound():
    # mass of the site-3 measure over [0.3, 0.9]: equals the u_3^2-weighted
    # integral of the channel density, and stays below the (u^2 + w^2) bound
    op = free_halfline()
    a, b, K = 0.3, 0.9, 400
    nodes = a + (np.arange(K) + 0.5) * (b - a) / K
    rho = np.sqrt(4.0 - nodes**2) / (2.0 * math.pi)
    u3 = np.empty(K)
    w3 = np.empty(K)
    for i, lam in enumerate(nodes):
        f = fundamental_solutions(op, float(lam), 3)
        u3[i] = f.u(op, 3).real
        w3[i] = f.w(op, 3).real
    h = (b - a) / K
    equality = float(np.sum(u3**2 * rho) * h)
    bound = float(np.sum((u3**2 + w3**2) * rho) * h)
    hist = eigen_histogram(op, 600, 0.0, {3: [1.0]})
    mass = sum(wt for lam, wt in hist.point_masses if a <= lam <= b)
    assert abs(mass - equality) <= 2e-3
    assert mass <= bound + 1e-12
    assert bound > equality  # the w-part makes the bound strictly larger


def test_free_u3_is_second_kind_polynomial():
    op = free_halfline()
    for lam in (0.25, -0.8, 1.3):
        f = fundamental_solutions(op, lam, 3)
        assert abs(f.u(op, 3) - (lam * lam - 1.0)) < 1e-12


# ---------------------------------------------------------------------------
# a.c. integral criterion
# ---------------------------------------------------------------------------


def test_ac_criterion_bounded_inside_band():
    res = ac_criterion(free_halfline(), 4.0, (-1.0, 1.0), [10, 20, 40, 80, 160])
    assert res.verdict == "bounded-like"
    assert np.all(np.isfinite(res.log_integrals))
    assert float(np.max(res.integrals)) < 50.0


def test_ac_criterion_diverges_outside_band():
    res = ac_criterion(free_halfline(), 4.0, (2.5, 3.0), [5, 10, 20, 40])
    assert res.verdict == "diverging-like"
    assert np.all(np.diff(res.log_integrals) > 1.0)


def test_ac_criterion_rejects_small_p():
    with pytest.raises(OcsError):
        ac_criterion(free_halfline(), 2.0, (-1.0, 1.0), [4, 8])


def test_ac_verdict_inconclusive_between():
    # tail minimum drifts above 10x the global minimum while the last value
    # stays under 100x the early minimum: neither verdict should fire
    ns = np.array([10, 20, 40, 80])
    logs = np.array([0.0, 2.5, 3.0, 3.5])
    verdict, _ = ac_verdict(ns, logs)
    assert verdict == "inconclusive"


# ---------------------------------------------------------------------------
# compactly supported eigenfunctions
# ---------------------------------------------------------------------------


def test_handbuilt_eigenfunction_full_story():
    op, lam0 = three_shell_atom_op()
    f = finite_eigenfunction(op, 0, 2, lam0)
    assert f.support == (1, 3)
    assert f.residual <= 1e-9 * max(1.0, f.norm())
    assert f.case_tags == ("dirichlet-wall", "eigenvector")
    assert set(f.blocks) <= {1, 2, 3}
    # the middle shell block vanishes identically in this construction
    assert 2 not in f.blocks
    assert np.allclose(f.blocks[1], [1.25, 0.0])
    assert np.allclose(f.blocks[3], [-1.25, 0.0, 0.0])


def test_handbuilt_search_finds_exactly_one():
    op, lam0 = three_shell_atom_op()
    hits = finite_eigenfunctions(op, 0, 2)
    assert len(hits) == 1
    assert abs(hits[0].lam - lam0) < 1e-12


def test_handbuilt_dense_multiplicity_one():
    from ocs.model import assemble_dense

    op, lam0 = three_shell_atom_op()
    dense = assemble_dense(op, 8, c=0.0)
    ev = np.linalg.eigvalsh(dense.H)
    assert np.count_nonzero(np.abs(ev - lam0) < 1e-8) == 1
    # the dense eigenvector is supported on shells 1..3
    w, U = np.linalg.eigh(dense.H)
    vec = U[:, int(np.argmin(np.abs(w - lam0)))]
    outside = np.concatenate([vec[dense.offsets[n]] for n in range(4, 9)])
    assert float(np.linalg.norm(outside)) < 1e-10


def test_wall_search_locates_support():
    op, lam0 = three_shell_atom_op()
    hit = wall_eigenfunction_search(op, lam0, 6)
    assert hit is not None and hit.support == (1, 3)
    assert wall_eigenfunction_search(op, 0.31, 6) is None


@pytest.mark.parametrize("seed", [1, 7, 23])
def test_generic_models_have_no_finite_eigenfunctions(seed):
    op = random_one_channel(seed=seed, s_range=(2, 4))
    assert finite_eigenfunctions(op, 1, 3) == []


def test_colinearity_failure_reports_defect():
    op, lam0 = three_shell_atom_op()
    # shell 3 also has a Phi-only eigenvalue at 2.4: the wall solution does
    # not land on its boundary branch, so the candidate must be rejected
    with pytest.raises((ColinearityFailed, OcsError)):
        finite_eigenfunction(op, 0, 2, 2.4)


def test_invalid_shell_range_raises():
    op, _ = three_shell_atom_op()
    with pytest.raises(OcsError):
        finite_eigenfunction(op, 3, 1, 0.5)

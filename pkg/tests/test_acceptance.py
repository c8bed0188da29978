"""Acceptance gate: one test per shipped guarantee, at the stated scale.

Every test here reruns a full-size check with its documented tolerance and
prints one summary line; the unit suites cover the same machinery at small
scale with independent oracles.
"""

import math
import time

import numpy as np

from ocs.anderson import (
    DisorderSpec,
    PartialAntitreeSpec,
    StretchedAntitreeSpec,
    draw_partial_potentials,
    hat_pattern_spec,
    interval_A,
    limit_transfer_stretched,
    moment_bound_check,
    partial_coeffs_from_potentials,
    partial_shell_from_potentials,
    random_transfer_integrals,
    stretched_coeffs_from_pairs,
    stretched_noise_sampler,
    stretched_shell_from_pairs,
    stretched_statistic_sampler,
    stretched_step_matrices,
    well_balanced_check,
)
from ocs.greens import (
    channel_overlaps,
    fundamental_solutions,
    limit_point_diagnostic,
    m_function,
    resolvent_block,
    weyl_radius,
)
from ocs.model import assemble_dense, jacobi_operator, random_one_channel
from ocs.spectral import finite_eigenfunctions, halfline_density
from ocs.transfer import (
    TransferState,
    g_matrix,
    propagate,
    solution_vector,
    transfer_matrix,
)

from helpers import dense_block, dense_overlaps, random_shell, three_shell_atom_op

GOLDEN = 0.6180339887498949


def _report(num: int, detail: str) -> None:
    print(f"acceptance {num}: PASS ({detail})")


def _rel(got: complex, ref: complex) -> float:
    return abs(got - ref) / max(1.0, abs(ref))


# --------------------------------------------------------------- criterion 1


def test_criterion_01_green_identity_oracle():
    t0 = time.monotonic()
    worst = 0.0
    for seed in range(50):
        op = random_one_channel(seed=seed, s_range=(1, 5))
        rng = np.random.default_rng(seed + 10_000)
        N = int(rng.integers(4, 13))
        z = complex(rng.uniform(-2, 2), rng.uniform(0.1, 2.0))
        c = float(rng.uniform(-1, 1))
        m, n = sorted(rng.choice(np.arange(1, N + 1), size=2, replace=False))
        got = channel_overlaps(op, N, c, z, int(m), int(n))
        ref = dense_overlaps(op, N, c, z, int(m), int(n))
        for key in ("uu", "up", "pu", "pp"):
            worst = max(worst, _rel(got[key], ref[key]))
        blk = resolvent_block(op, N, c, z, int(m), int(n))
        blk_ref = dense_block(op, N, c, z, int(m), int(n))
        scale = max(1.0, float(np.max(np.abs(blk_ref))))
        worst = max(worst, float(np.max(np.abs(blk - blk_ref))) / scale)
    elapsed = time.monotonic() - t0
    assert worst <= 1e-8
    assert elapsed < 60.0
    _report(1, f"50 operators, worst relative error {worst:.2e}, {elapsed:.1f}s")


# --------------------------------------------------------------- criterion 2


def test_criterion_02_determinant_identity():
    worst = 0.0
    for seed in range(100):
        shell = random_shell(seed + 7_000)
        z = complex(math.cos(seed), 0.2 + 0.01 * seed)
        g = g_matrix(shell, z)
        det = transfer_matrix(shell, z).det()
        worst = max(worst, abs(det - g.gamma / g.beta) / abs(det))
    assert worst <= 1e-9
    _report(2, f"det identity on 100 shells, worst {worst:.2e}")


def test_criterion_02_conjugate_solution_ratios():
    worst_ratio = 0.0
    worst_wronskian = 0.0
    count = 0
    for seed in range(25):
        op = random_one_channel(seed=seed + 3_000, s_range=(1, 4))
        rng = np.random.default_rng(seed)
        for _ in range(4):
            z = complex(rng.uniform(-2, 2), rng.uniform(0.1, 1.2))
            n = 5
            fz = fundamental_solutions(op, z, n)
            fzb = fundamental_solutions(op, complex(np.conj(z)), n)
            ratio = fz.u(op, n + 1) / np.conj(fzb.u(op, n + 1))
            det = fz.det(n)
            worst_ratio = max(worst_ratio, abs(ratio - det) / abs(det))
            t1 = np.conj(fzb.u(op, n + 1)) * fz.wt(n)
            t2 = fz.w(op, n + 1) * np.conj(fzb.ut(n))
            wron = op.a(n + 1) * (t1 - t2)
            # relative to the two cancelling products that form the 1
            scale = max(1.0, abs(op.a(n + 1)) * (abs(t1) + abs(t2)))
            worst_wronskian = max(worst_wronskian, abs(wron - 1.0) / scale)
            count += 1
    assert count == 100
    assert worst_ratio <= 1e-9
    assert worst_wronskian <= 1e-9
    _report(2, f"conjugate ratios on 100 samples, worst {worst_ratio:.2e}"
               f" / {worst_wronskian:.2e}")


def test_criterion_02_summation_identity():
    worst = 0.0
    count = 0
    for seed in range(25):
        op = random_one_channel(seed=seed + 4_000, s_range=(1, 4))
        rng = np.random.default_rng(seed + 40)
        for _ in range(4):
            z = complex(rng.uniform(-1, 1), rng.uniform(0.2, 1.5))
            states = {1: TransferState.from_values(
                complex(rng.normal(), rng.normal()),
                complex(rng.normal(), rng.normal()), 1)}
            for n in range(2, 9):
                states[n] = propagate(op, z, states[n - 1], n)
            m, n = 2, 8
            blocks = {
                k: solution_vector(op.shell(k), z, states[k].values(),
                                   states[k - 1].values())
                for k in range(m, n + 1)
            }
            total = sum(np.linalg.norm(b) ** 2 for b in blocks.values())
            ax_m, xt_m_prev = states[m - 1].values()
            ax_n, xt_n = states[n].values()
            boundary = np.imag(
                op.a(n + 1) * np.conj(ax_n / op.a(n + 1)) * xt_n
                - op.a(m) * np.conj(ax_m / op.a(m)) * xt_m_prev
            )
            worst = max(worst, abs(z.imag * total - boundary) / abs(boundary))
            count += 1
    assert count == 100
    assert worst <= 1e-9
    _report(2, f"summation identity on 100 samples, worst {worst:.2e}")


def test_criterion_02_real_energy_common_phase():
    worst = 0.0
    for seed in range(100):
        shell = random_shell(seed + 5_000, s=3)
        lam = float(np.max(np.abs(shell.eig[0]))) + 1.2 + 0.05 * seed
        T = transfer_matrix(shell, lam)
        S, phi = T.sl2r(tol=1e-8)
        worst = max(worst, abs(np.linalg.det(S) - 1.0))
        d = np.linalg.det(T.mat)
        back = S * np.sqrt(abs(d)) * np.exp(1j * phi)
        scale = float(np.max(np.abs(T.mat)))
        worst = max(worst, float(np.max(np.abs(back - T.mat))) / scale)
    assert worst <= 1e-9
    _report(2, f"common phase on 100 real-energy shells, worst {worst:.2e}")


# --------------------------------------------------------------- criterion 3


def test_criterion_03_free_jacobi_reduction():
    t0 = time.monotonic()
    op = jacobi_operator(v=0.0, a=-1.0)
    m = m_function(op, 200, 0.0, 1j).value
    err_m = abs(m - 1j * GOLDEN)
    assert err_m <= 1e-6

    est = halfline_density(op, np.linspace(-1.0, 1.0, 201), (200, 400))
    mass = est.interval_mass(-1.0, 1.0)
    assert abs(mass - 0.6090) <= 0.02 * 0.6090
    elapsed = time.monotonic() - t0
    assert elapsed < 60.0
    _report(3, f"m(i) error {err_m:.2e}, CDF mass {mass:.4f}, {elapsed:.1f}s")


# --------------------------------------------------------------- criterion 4


def test_criterion_04_weyl_diagnostics():
    worst_conj = 0.0
    for seed in range(20):
        fixed_a = -1.0 if seed % 3 == 0 else None
        op = random_one_channel(seed=seed + 6_000, s_range=(1, 4),
                                fixed_a=fixed_a)
        circles = [weyl_radius(op, 1j, n) for n in range(2, 9)]
        for small, big in zip(circles[1:], circles):
            assert small.radius < big.radius
            gap = abs(small.center - big.center)
            slack = 1e-12 * max(1.0, abs(big.center))
            assert gap <= big.radius - small.radius + slack
        r_up = weyl_radius(op, 1j, 6).radius
        r_dn = weyl_radius(op, -1j, 6).radius
        worst_conj = max(worst_conj, abs(r_up - r_dn) / r_up)
        if fixed_a is not None:
            assert weyl_radius(op, 1j, 200).radius < 1e-8
            diag = limit_point_diagnostic(op, 1j, 200)
            assert diag.verdict == "limit-point-like"
    assert worst_conj <= 1e-9
    _report(4, f"20 models nest, conjugation error {worst_conj:.2e}, "
               "unit-coupling models reach radius < 1e-8")


# --------------------------------------------------------------- criterion 5


def test_criterion_05_limit_trace_closed_form():
    point = DisorderSpec.point(0.0)
    grid = np.concatenate([
        np.linspace(-2.5, -1.05, 30), np.linspace(-0.95, 0.95, 39),
        np.linspace(1.05, 2.5, 30),
    ])
    worst = max(
        abs(limit_transfer_stretched(point, float(lam)).trace - (lam**2 - 2.0))
        for lam in grid
    )
    assert worst <= 1e-12
    _report(5, f"clean-limit trace on {len(grid)} energies, worst {worst:.2e}")


def test_criterion_05_homogeneous_window_endpoints():
    point = DisorderSpec.point(0.0)
    hat = hat_pattern_spec(point)
    report = interval_A(hat, np.linspace(-2.4, 2.4, 121))
    root2 = math.sqrt(2.0)
    reference = [-2.0, -root2, -1.0, 0.0, 1.0, root2, 2.0]
    found = report.endpoints
    for e in found:
        assert min(abs(e - r) for r in reference) <= 1e-6
    for r in reference:
        assert min(abs(e - r) for e in found) <= 1e-6
    _report(5, f"window endpoints recovered at 1e-6: {np.round(found, 7)}")


# --------------------------------------------------------------- criterion 6


def test_criterion_06_stretched_sampler_oracle():
    rng = np.random.default_rng(606)
    menu = [
        DisorderSpec.point(0.3),
        DisorderSpec.two_point(0.45),
        DisorderSpec.uniform(-0.4, 0.4),
        DisorderSpec.two_point(0.2, center=0.1),
    ]
    worst = 0.0
    for i in range(200):
        s = int(rng.integers(1, 9))
        lam = float(rng.uniform(1.9, 3.0)) * (1 if i % 2 else -1)
        nu = menu[i % len(menu)]
        om = nu.sample(rng, s)
        omp = nu.sample(rng, s)
        alpha, beta, delta = stretched_coeffs_from_pairs(om, omp, lam)
        g = g_matrix(stretched_shell_from_pairs(7, om, omp), lam)
        worst = max(worst, _rel(alpha, g.alpha), _rel(beta, g.beta),
                    _rel(delta, g.delta), _rel(g.gamma, g.beta))
    assert worst <= 1e-10
    _report(6, f"stretched shells (s <= 8), 200 draws, worst {worst:.2e}")


def test_criterion_06_partial_sampler_oracle():
    rng = np.random.default_rng(607)
    worst = 0.0
    for i in range(200):
        r = 6 * (1 + i % 4)  # shell sizes 6, 12, 18, 24
        nu = DisorderSpec.two_point(0.35) if i % 2 else DisorderSpec.uniform(-0.3, 0.3)
        spec = hat_pattern_spec(nu, r=f"const:s={r}")
        lam = float(rng.uniform(1.9, 3.0)) * (1 if i % 3 else -1)
        pots = draw_partial_potentials(spec, 2, rng)
        alpha, beta, delta = partial_coeffs_from_potentials(spec, pots, lam)
        g = g_matrix(partial_shell_from_potentials(spec, 2, pots), lam)
        worst = max(worst, _rel(alpha, g.alpha), _rel(beta, g.beta),
                    _rel(delta, g.delta), _rel(g.gamma, g.beta))
    assert worst <= 1e-10
    _report(6, f"homogeneous-modes shells (size <= 24), 200 draws, worst {worst:.2e}")


# --------------------------------------------------------------- criterion 7


def test_criterion_07_convergence_rate_slopes():
    t0 = time.monotonic()
    nu = DisorderSpec.two_point(0.2)
    sizes = [100, 1_000, 10_000]
    details = []
    for j, lam in enumerate((1.5, 1.8, 0.5)):
        limit = limit_transfer_stretched(nu, lam)
        assert limit.elliptic  # energy sits inside the stretched window
        report = well_balanced_check(
            stretched_statistic_sampler(nu, lam, "beta"), limit.beta,
            sizes, K=2, trials=10_000, rng=np.random.default_rng(700 + j),
        )
        for k in (2, 4):
            assert abs(report.slopes[k] - (-k / 2.0)) <= 0.15
        details.append(f"lam={lam}: k2 {report.slopes[2]:.3f}, "
                       f"k4 {report.slopes[4]:.3f}")
    elapsed = time.monotonic() - t0
    assert elapsed < 600.0
    _report(7, "; ".join(details) + f", {elapsed:.1f}s")


# --------------------------------------------------------------- criterion 8


def test_criterion_08_fourth_moment_bound_and_integrals():
    t0 = time.monotonic()
    nu = DisorderSpec.two_point(0.5)
    lam = 1.8
    spec = StretchedAntitreeSpec(s="poly:d=3", disorder=nu)
    limit = limit_transfer_stretched(nu, lam)
    assert limit.elliptic

    report = moment_bound_check(
        limit.matrix, stretched_noise_sampler(spec, lam, limit),
        n_max=300, trials=10_000, rng=np.random.default_rng(88),
    )
    assert math.isfinite(report.bound)
    assert report.passed  # every estimate + 3 sigma below the bound
    margin = report.bound - max(
        e + 3 * s for e, s in zip(report.estimates, report.stderrs)
    )
    assert margin > 0

    def step(n, grid, step_rng):
        return stretched_step_matrices(nu, n**3, grid, step_rng)

    n_list = [10, 30, 100, 300]
    res = random_transfer_integrals(step, 4.0, (1.6, 2.0), n_list,
                                    np.random.default_rng(99))
    assert res.verdict == "bounded-like"
    logs = dict(zip(n_list, res.log_integrals))
    last_decade_min = min(v for n, v in logs.items() if n >= 30)
    early_min = min(v for n, v in logs.items() if n < 30)
    assert last_decade_min <= early_min + 1e-9
    elapsed = time.monotonic() - t0
    assert elapsed < 1200.0
    _report(8, f"bound margin {margin:.3g}, I_n logs "
               f"{np.round(res.log_integrals, 2)}, {elapsed:.1f}s")


# --------------------------------------------------------------- criterion 9


def test_criterion_09_compact_eigenfunction():
    op, lam0 = three_shell_atom_op()
    hits = finite_eigenfunctions(op, 0, 2, residual_tol=1e-9)
    assert len(hits) == 1
    hit = hits[0]
    assert hit.residual <= 1e-9
    assert abs(hit.lam - lam0) <= 1e-9

    dense = assemble_dense(op, 6)
    w, U = np.linalg.eigh(dense.H)
    matches = np.flatnonzero(np.abs(w - hit.lam) <= 1e-8)
    assert len(matches) == 1  # simple eigenvalue, multiplicity matches

    vec = np.zeros(dense.dim, dtype=complex)
    for n, block in hit.blocks.items():
        vec += dense.embed(n, block)
    resid = np.linalg.norm(dense.H @ vec - hit.lam * vec) / np.linalg.norm(vec)
    assert resid <= 1e-9
    _report(9, f"one eigenfunction at {hit.lam}, residual {hit.residual:.2e}, "
               f"dense multiplicity 1")

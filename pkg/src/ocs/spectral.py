"""Spectral-measure estimation from transfer-matrix data.

The channel spectral measure of the half-line operator decomposes into a
point part carried by compactly supported eigenfunctions and an absolutely
continuous part whose density is the weak limit of

    pi^{-1} || T_{lambda,0,n} (1, 0)^T ||^{-2}.

Pointwise these norms oscillate, so estimates average over a Cesaro window
of truncation levels.  The full-line variant integrates a product of inverse
squared norms of both half-line products over a quadrature in the initial
direction.  Everything is computed vectorized over the energy grid with
per-step renormalization, so deep products neither overflow nor underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChannelSingular, ColinearityFailed, OcsError, ZTooCloseToSpectrum
from .model import OneChannelOperator, assemble_dense
from .transfer import (
    COEFF_TOL,
    GUARD,
    boundary_vectors,
    coefficient_sweep,
    singular_set,
    solution_vector,
    spectral_norms,
    transfer_matrix,
)
from . import greens


# ---------------------------------------------------------------------------
# vectorized transfer sweeps over an energy grid
# ---------------------------------------------------------------------------


def _step_matrices(op: OneChannelOperator, n: int, zs: np.ndarray, guard: float):
    """One-step transfer matrices over a grid: (G,2,2) array, mask, log scales.

    Grid points near a pole of the shell data are retried pointwise through
    the extension-aware scalar route and only masked if that fails too.
    """
    shell = op.shell(n)
    a = shell.a
    alpha, beta, gamma, delta, mask = coefficient_sweep(shell, zs, guard=guard)
    G = len(zs)
    mats = np.empty((G, 2, 2), dtype=complex)
    logs = np.zeros(G)
    with np.errstate(divide="ignore", invalid="ignore"):
        bi = 1.0 / beta
        mats[:, 0, 0] = bi / a
        mats[:, 0, 1] = -a * alpha * bi
        mats[:, 1, 0] = delta * bi / a
        mats[:, 1, 1] = a * (gamma - delta * bi * alpha)
    floor = 1e-13 * np.maximum(
        1.0, np.maximum(np.abs(alpha), np.maximum(np.abs(gamma), np.abs(delta)))
    )
    bad = mask | ~np.isfinite(beta) | (np.abs(beta) <= floor)
    for g in np.nonzero(bad)[0]:
        try:
            T = transfer_matrix(shell, complex(zs[g]), guard=guard)
        except (ZTooCloseToSpectrum, ChannelSingular, OcsError):
            continue
        mats[g] = T.mat
        logs[g] = T.log_scale
        bad[g] = False
    mats[bad] = np.nan
    return mats, logs, bad


class _VecSweep:
    """Propagates a single boundary vector over all grid energies at once."""

    def __init__(self, op, zs, v0, guard: float = GUARD):
        self.op = op
        self.zs = np.asarray(zs, dtype=complex)
        G = len(self.zs)
        self.vecs = np.tile(np.asarray(v0, dtype=complex), (G, 1))
        self.lognorm = np.full(G, math.log(max(float(np.linalg.norm(v0)), 1e-300)))
        self.vecs /= np.exp(self.lognorm)[:, None]
        self.mask = np.zeros(G, dtype=bool)

    def step(self, n: int, guard: float = GUARD) -> None:
        mats, logs, bad = _step_matrices(self.op, n, self.zs, guard)
        self.mask |= bad
        out = np.einsum("gij,gj->gi", mats, self.vecs)
        nrm = np.linalg.norm(out, axis=1)
        ok = ~self.mask & (nrm > 0)
        out[ok] /= nrm[ok, None]
        self.vecs = out
        self.lognorm = self.lognorm + logs + np.where(ok, np.log(np.where(ok, nrm, 1.0)), 0.0)
        self.lognorm[self.mask] = np.nan


class _MatSweep:
    """Propagates the full 2x2 product over all grid energies at once."""

    def __init__(self, op, zs, guard: float = GUARD):
        self.op = op
        self.zs = np.asarray(zs, dtype=complex)
        G = len(self.zs)
        self.mats = np.tile(np.eye(2, dtype=complex), (G, 1, 1))
        self.logs = np.zeros(G)
        self.mask = np.zeros(G, dtype=bool)

    def step(self, n: int, side: str = "left", guard: float = GUARD) -> None:
        mats, logs, bad = _step_matrices(self.op, n, self.zs, guard)
        self.mask |= bad
        if side == "left":
            out = np.einsum("gij,gjk->gik", mats, self.mats)
        else:
            out = np.einsum("gij,gjk->gik", self.mats, mats)
        scale = np.max(np.abs(out), axis=(1, 2))
        ok = ~self.mask & (scale > 0)
        out[ok] /= scale[ok, None, None]
        self.mats = out
        self.logs = self.logs + logs + np.where(ok, np.log(np.where(ok, scale, 1.0)), 0.0)
        self.logs[self.mask] = np.nan

    def log_vec_norms(self, dirs: np.ndarray) -> np.ndarray:
        """log || M v || for direction columns dirs (2,K) -> (G,K)."""
        out = np.einsum("gij,jk->gik", self.mats, dirs)
        with np.errstate(divide="ignore"):
            return np.log(np.linalg.norm(out, axis=1)) + self.logs[:, None]

    def log_inv_vec_norms(self, dirs: np.ndarray) -> np.ndarray:
        """log || M^{-1} v ||, via the adjugate (stable for large products)."""
        adj = np.empty_like(self.mats)
        adj[:, 0, 0] = self.mats[:, 1, 1]
        adj[:, 0, 1] = -self.mats[:, 0, 1]
        adj[:, 1, 0] = -self.mats[:, 1, 0]
        adj[:, 1, 1] = self.mats[:, 0, 0]
        det = (
            self.mats[:, 0, 0] * self.mats[:, 1, 1]
            - self.mats[:, 0, 1] * self.mats[:, 1, 0]
        )
        out = np.einsum("gij,jk->gik", adj, dirs)
        with np.errstate(divide="ignore"):
            return (
                np.log(np.linalg.norm(out, axis=1))
                - np.log(np.abs(det))[:, None]
                - self.logs[:, None]
            )

    def log_spectral_norm(self) -> np.ndarray:
        return np.log(spectral_norms(self.mats)) + self.logs


def real_singular_energies(
    op: OneChannelOperator, n_lo: int, n_hi: int, lo: float, hi: float
) -> list[float]:
    """Real exceptional energies of shells n_lo..n_hi inside [lo, hi]."""
    out: list[float] = []
    for n in range(n_lo, n_hi + 1):
        out.extend(singular_set(op.shell(n)).real_points(lo, hi))
    return sorted(out)


def _mask_near(grid: np.ndarray, points: list[float], radius: float) -> np.ndarray:
    mask = np.zeros(len(grid), dtype=bool)
    for p in points:
        mask |= np.abs(grid - p) <= radius
    return mask


# ---------------------------------------------------------------------------
# estimates
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class SpectralEstimate:
    """Estimated spectral measure: a.c. density on a grid plus point masses."""

    grid: np.ndarray
    density: np.ndarray
    point_masses: list[tuple[float, float]]
    window: tuple[int, int]
    provenance: str  # transfer_halfline | transfer_fullline | eigen_histogram
    mask: np.ndarray = None
    oscillation: np.ndarray = None

    def __post_init__(self):
        if self.mask is None:
            self.mask = np.zeros(len(self.grid), dtype=bool)

    def interval_mass(self, a: float, b: float) -> float:
        """Integral of the density over [a, b] plus point masses inside."""
        total = sum(w for lam, w in self.point_masses if a <= lam <= b)
        ok = ~self.mask & np.isfinite(self.density)
        xs, ys = self.grid[ok], self.density[ok]
        inside = (xs >= a) & (xs <= b)
        if np.count_nonzero(inside) >= 2:
            total += float(np.trapezoid(ys[inside], xs[inside]))
        return total

    def cdf(self, xs: np.ndarray) -> np.ndarray:
        lo = float(self.grid[0]) - 1.0
        return np.array([self.interval_mass(lo, float(x)) for x in np.atleast_1d(xs)])


def halfline_density(
    op: OneChannelOperator,
    lam_grid: np.ndarray,
    n_window: tuple[int, int],
    guard: float = GUARD,
    detect_points: bool = True,
) -> SpectralEstimate:
    """Cesaro-windowed density of the channel measure at the first shell.

    density(lambda) = window average of pi^{-1} ||T_{lambda,0,n}(1,0)||^{-2}
    (this estimates d(a_1^2 mu^+) / d lambda).  Grid points within the guard
    of an exceptional energy of shells 1..n_hi are masked, and density spikes
    that coincide with an exceptional energy carrying a compactly supported
    eigenfunction are reported as point masses.
    """
    lam_grid = np.asarray(lam_grid, dtype=float)
    n_lo, n_hi = n_window
    if not (1 <= n_lo <= n_hi):
        raise OcsError("window must satisfy 1 <= n_lo <= n_hi")
    sing = real_singular_energies(op, 1, n_hi, lam_grid[0], lam_grid[-1])
    pre_mask = _mask_near(lam_grid, sing, guard)

    sweep = _VecSweep(op, lam_grid.astype(complex), np.array([1.0, 0.0]), guard=guard)
    acc = np.zeros(len(lam_grid))
    acc2 = np.zeros(len(lam_grid))
    count = 0
    for n in range(1, n_hi + 1):
        sweep.step(n, guard=guard)
        if n >= n_lo:
            with np.errstate(over="ignore", invalid="ignore"):
                d = np.exp(-2.0 * sweep.lognorm) / math.pi
            d = np.where(np.isfinite(d), d, 0.0)
            acc += d
            acc2 += d * d
            count += 1
    density = acc / count
    var = np.maximum(acc2 / count - density**2, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        oscillation = np.where(density > 0, var / density, 0.0)
    mask = pre_mask | sweep.mask

    points: list[tuple[float, float]] = []
    if detect_points and sing:
        points = _detect_point_masses(op, lam_grid, density, mask, sing, n_hi, guard)
    return SpectralEstimate(
        grid=lam_grid, density=density, point_masses=points,
        window=(n_lo, n_hi), provenance="transfer_halfline",
        mask=mask, oscillation=oscillation,
    )


def _detect_point_masses(op, grid, density, mask, sing, n_hi, guard):
    """Exceptional energies carrying a wall eigenfunction become point masses.

    Only exceptional energies can carry atoms, so they are the candidate
    list; a density spike alone is never promoted (an embedded atom does not
    lift neighbouring grid values at fixed grid resolution, and a spike
    without an eigenfunction cannot be told from rough a.c. density).  The
    weight comes from the resolvent residue just off the real axis.
    """
    points = []
    for lam in sorted(set(round(s, 12) for s in sing)):
        hit = wall_eigenfunction_search(op, lam, n_hi, guard=guard)
        if hit is None:
            continue
        eps = 1e-5
        try:
            mv = greens.m_function(op, n_hi, 0.0, lam + 1j * eps, guard=guard)
            weight = max(eps * mv.value.imag, 0.0)
        except OcsError:
            weight = 0.0
        points.append((float(lam), float(weight)))
    return points


def fullline_density(
    op: OneChannelOperator,
    lam_grid: np.ndarray,
    m_window: tuple[int, int],
    n_window: tuple[int, int],
    theta_nodes: int = 64,
    guard: float = GUARD,
) -> SpectralEstimate:
    """Full-line density estimate via the direction-averaged norm product.

    density(lambda) = pi^{-2} * integral over theta in (0, pi) of the product
    of window-averaged ||T_{lambda,0,-m} v_theta||^{-2} and
    ||T_{lambda,0,n} v_theta||^{-2}, with composite midpoint quadrature.
    The double Cesaro average separates per direction into a product of
    one-sided window averages.
    """
    if op.geometry != "full":
        raise OcsError("fullline_density needs a full-line operator")
    lam_grid = np.asarray(lam_grid, dtype=float)
    m_lo, m_hi = m_window
    n_lo, n_hi = n_window
    theta = (np.arange(theta_nodes) + 0.5) * math.pi / theta_nodes
    dirs = np.vstack([np.cos(theta), np.sin(theta)])

    sing = real_singular_energies(op, -m_hi + 1, n_hi, lam_grid[0], lam_grid[-1])
    pre_mask = _mask_near(lam_grid, sing, guard)

    zs = lam_grid.astype(complex)
    plus = _MatSweep(op, zs, guard=guard)
    acc_plus = np.zeros((len(lam_grid), theta_nodes))
    cnt_p = 0
    for n in range(1, n_hi + 1):
        plus.step(n, side="left", guard=guard)
        if n >= n_lo:
            with np.errstate(over="ignore", invalid="ignore"):
                acc_plus += np.nan_to_num(np.exp(-2.0 * plus.log_vec_norms(dirs)))
            cnt_p += 1

    minus = _MatSweep(op, zs, guard=guard)
    acc_minus = np.zeros((len(lam_grid), theta_nodes))
    cnt_m = 0
    for m in range(1, m_hi + 1):
        # extend the product T_{lambda,-m,0} by the step at shell -m+1
        minus.step(-m + 1, side="right", guard=guard)
        if m >= m_lo:
            with np.errstate(over="ignore", invalid="ignore"):
                acc_minus += np.nan_to_num(np.exp(-2.0 * minus.log_inv_vec_norms(dirs)))
            cnt_m += 1

    integrand = (acc_plus / cnt_p) * (acc_minus / cnt_m)
    density = integrand.sum(axis=1) * (math.pi / theta_nodes) / math.pi**2
    mask = pre_mask | plus.mask | minus.mask
    return SpectralEstimate(
        grid=lam_grid, density=density, point_masses=[],
        window=(n_lo, n_hi), provenance="transfer_fullline", mask=mask,
    )


def eigen_histogram(
    op: OneChannelOperator, N: int, c: float, weight_vector
) -> SpectralEstimate:
    """Exact spectral measure of a dense truncation at a weight vector.

    weight_vector: mapping {shell index: block vector}, or a list of
    (coefficient, mapping) pairs whose measures are summed.  Point masses
    are |<weight, eigenvector>|^2 per eigenpair (times the coefficients).
    """
    n_lo = 1 if op.geometry == "half" else -N
    dense = assemble_dense(op, N, c=c, n_lo=n_lo)
    w, U = np.linalg.eigh(dense.H)
    if isinstance(weight_vector, dict):
        weight_vector = [(1.0, weight_vector)]
    masses = np.zeros(len(w))
    for coef, mapping in weight_vector:
        vec = np.zeros(dense.dim, dtype=complex)
        for n, block in mapping.items():
            vec += dense.embed(n, np.asarray(block, dtype=complex))
        masses += coef * np.abs(U.conj().T @ vec) ** 2
    order = np.argsort(w)
    return SpectralEstimate(
        grid=w[order], density=np.zeros(len(w)),
        point_masses=[(float(lam), float(m)) for lam, m in zip(w[order], masses[order])],
        window=(N, N), provenance="eigen_histogram",
    )


# ---------------------------------------------------------------------------
# absolutely-continuous-spectrum integral criterion
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ACCriterionResult:
    p: float
    interval: tuple[float, float]
    n_list: np.ndarray
    log_integrals: np.ndarray
    liminf_proxy: float  # log of the tail minimum
    verdict: str  # bounded-like | diverging-like | inconclusive
    masked_fraction: float = 0.0

    @property
    def integrals(self) -> np.ndarray:
        return np.exp(self.log_integrals)


def ac_verdict(n_list: np.ndarray, log_integrals: np.ndarray) -> tuple[str, float]:
    """Advisory boundedness verdict from an I_n sequence (log scale).

    diverging-like: the final integral exceeds 100x the minimum over the
    first half (checked first, so short geometric n-lists whose tail window
    covers everything cannot masquerade as bounded).  bounded-like: the
    minimum over the last decade of n stays within 10x of the global minimum
    (the liminf proxy does not drift up).
    """
    n_list = np.asarray(n_list)
    log_integrals = np.asarray(log_integrals)
    tail = n_list >= max(int(n_list[0]) + 1, int(n_list[-1]) // 10)
    if not np.any(tail):
        tail = n_list == n_list[-1]
    tail_min = float(np.min(log_integrals[tail]))
    global_min = float(np.min(log_integrals))
    early = n_list <= max(n_list[0], n_list[-1] // 2)
    early_min = float(np.min(log_integrals[early])) if np.any(early) else global_min
    if float(log_integrals[-1]) >= early_min + math.log(100.0):
        return "diverging-like", tail_min
    if tail_min <= global_min + math.log(10.0):
        return "bounded-like", tail_min
    return "inconclusive", tail_min


def ac_criterion(
    op: OneChannelOperator,
    p: float,
    interval: tuple[float, float],
    n_list,
    n_points: int = 257,
    guard: float = GUARD,
) -> ACCriterionResult:
    """Quadrature proxy for liminf_n of the p-th transfer-norm integral.

    I_n = integral over the interval of ||T_{lambda,0,n}||^p, computed with a
    composite midpoint rule on a masked grid and log-scale norms.
    """
    if p <= 2:
        raise OcsError("the criterion needs p > 2")
    a, b = interval
    n_list = np.asarray(sorted(n_list), dtype=int)
    xs = a + (np.arange(n_points) + 0.5) * (b - a) / n_points
    sing = real_singular_energies(op, 1, int(n_list[-1]), a, b)
    mask = _mask_near(xs, sing, guard)

    sweep = _MatSweep(op, xs.astype(complex), guard=guard)
    logs_I = []
    wlog = math.log((b - a) / n_points)
    for idx, n in enumerate(n_list):
        start = 0 if idx == 0 else int(n_list[idx - 1])
        for k in range(start + 1, n + 1):
            sweep.step(k, guard=guard)
        lognorms = sweep.log_spectral_norm()
        ok = ~(mask | sweep.mask) & np.isfinite(lognorms)
        if not np.any(ok):
            raise OcsError("all quadrature nodes masked")
        vals = p * lognorms[ok] + wlog
        m = float(np.max(vals))
        logs_I.append(m + math.log(float(np.sum(np.exp(vals - m)))))
    logs_I = np.array(logs_I)
    verdict, tail_min = ac_verdict(n_list, logs_I)
    return ACCriterionResult(
        p=p, interval=(a, b), n_list=n_list, log_integrals=logs_I,
        liminf_proxy=tail_min, verdict=verdict,
        masked_fraction=float(np.mean(mask)),
    )


# ---------------------------------------------------------------------------
# compactly supported eigenfunctions
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class FiniteEigenfunction:
    lam: float
    support: tuple[int, int]  # first and last shell carrying the function
    blocks: dict[int, np.ndarray]
    case_tags: tuple[str, str]  # left branch, right branch
    residual: float

    def norm(self) -> float:
        return math.sqrt(sum(float(np.linalg.norm(b) ** 2) for b in self.blocks.values()))


def _interior_block(shell, lam, state_out, state_in, guard):
    """Shell block of a real-energy solution, valid at extendable energies.

    Away from the shell spectrum this is the resolvent formula; at an
    extendable eigenvalue the singular direction is fixed by the channel
    values carried by the transfer states instead.
    """
    w, U = shell.eig
    if float(np.min(np.abs(w - lam))) > guard:
        return solution_vector(shell, lam, state_out, state_in, guard=guard)
    # at the spectrum the resolvent formula misses the homogeneous part even
    # when the right-hand side vanishes, so always take the careful branch
    uc, pc = shell.ups_coeff, shell.phi_coeff
    far = np.abs(w - lam) > guard
    ax_next = state_out[0]
    xt_prev = state_in[1]
    coef = ax_next * pc + shell.a * xt_prev * uc
    reg = U[:, far] @ (coef[far] / (w[far] - lam))
    group = ~far
    gu = U[:, group] @ uc[group]
    nu = float(np.linalg.norm(gu))
    if nu <= COEFF_TOL:
        raise ChannelSingular("quotient_spectrum", lam, shell.n)
    e = (U[:, group] @ uc[group]) / nu
    x_n = state_in[0] / shell.a  # incoming (a_n x_n, xt_{n-1})
    ce = (x_n - complex(shell.Upsilon.conj() @ reg)) / complex(shell.Upsilon.conj() @ e)
    return reg + ce * e


def _edge_block_left(shell, lam, x_plus, branch, guard):
    """Left edge block: maps the right boundary vector of shell l to Psi_l."""
    w, U = shell.eig
    pc = shell.phi_coeff
    if branch == "resolvent":
        seen = np.abs(pc) > COEFF_TOL
        vec = U[:, seen] @ (pc[seen] / (w[seen] - lam))
        return x_plus[0] * vec
    group = np.abs(w - lam) <= max(guard, 1e-8 * max(1.0, float(np.max(np.abs(w)))))
    gp = U[:, group] @ pc[group]
    npn = float(np.linalg.norm(gp))
    if npn <= COEFF_TOL:
        raise ColinearityFailed(defect=1.0)
    return (gp / npn**2) * x_plus[1]


def _edge_block_right(shell, lam, x_minus, branch, guard):
    """Right edge block at shell m+1 from (a x_{m+1}, xt_m) = x_minus."""
    w, U = shell.eig
    uc = shell.ups_coeff
    if branch == "resolvent":
        seen = np.abs(uc) > COEFF_TOL
        vec = U[:, seen] @ (uc[seen] / (w[seen] - lam))
        return shell.a * x_minus[1] * vec
    group = np.abs(w - lam) <= max(guard, 1e-8 * max(1.0, float(np.max(np.abs(w)))))
    gu = U[:, group] @ uc[group]
    nun = float(np.linalg.norm(gu))
    if nun <= COEFF_TOL:
        raise ColinearityFailed(defect=1.0)
    x_next = x_minus[0] / shell.a
    return (gu / nun**2) * x_next


def _dense_residual(op, lam, blocks):
    lo = min(blocks)
    hi = max(blocks)
    lo_ext = lo - 1 if op.n_min is None or lo - 1 >= op.n_min else lo
    hi_ext = hi + 1 if op.n_max is None or hi + 1 <= op.n_max else hi
    dense = assemble_dense(op, hi_ext, c=0.0, n_lo=lo_ext)
    vec = np.zeros(dense.dim, dtype=complex)
    for n, b in blocks.items():
        vec += dense.embed(n, b)
    nrm = float(np.linalg.norm(vec))
    if nrm == 0:
        return math.inf
    return float(np.linalg.norm(dense.H @ vec - lam * vec)) / nrm


def finite_eigenfunction(
    op: OneChannelOperator,
    l: int,
    m: int,
    lam: float,
    colinearity_tol: float = 1e-8,
    guard: float = GUARD,
) -> FiniteEigenfunction:
    """Build the compactly supported eigenfunction between singular shells.

    Requires lam in the exceptional sets of shells l and m+1 but transferable
    across l+1..m, and the transferred right boundary vector of shell l to be
    colinear with the left boundary vector of shell m+1.  l may be the index
    below the first shell (Dirichlet wall variant); the support then starts
    at the first shell.
    """
    wall = op.n_min is not None and l == op.n_min - 1
    if l > m:
        raise OcsError("invalid shell range")
    if not wall and op.n_min is not None and l < op.n_min:
        raise OcsError("invalid shell range")
    if op.n_max is not None and m + 1 > op.n_max:
        raise OcsError("invalid shell range")

    if wall:
        x_start = np.array([1.0, 0.0], dtype=complex)
        left_branch = "dirichlet-wall"
    else:
        bv = boundary_vectors(op.shell(l), lam, guard=guard)
        x_start = bv.x_plus
        left_branch = bv.right_branch

    states = {l: x_start}
    vec, ls = x_start, 0.0
    for n in range(l + 1, m + 1):
        T = transfer_matrix(op.shell(n), lam, guard=guard)
        vec, ls = T.apply(vec, ls)
        states[n] = vec * math.exp(ls)

    bvr = boundary_vectors(op.shell(m + 1), lam, guard=guard)
    v1 = states[m]
    v2 = bvr.x_minus
    cross = abs(v1[0] * v2[1] - v1[1] * v2[0])
    scale = float(np.linalg.norm(v1) * np.linalg.norm(v2))
    if scale == 0 or cross > colinearity_tol * scale:
        raise ColinearityFailed(defect=float(cross / scale if scale else math.inf))

    blocks: dict[int, np.ndarray] = {}
    if not wall:
        blocks[l] = _edge_block_left(op.shell(l), lam, states[l], left_branch, guard)
    for n in range(l + 1, m + 1):
        blocks[n] = _interior_block(
            op.shell(n), lam, states[n], states[n - 1], guard
        )
    blocks[m + 1] = _edge_block_right(op.shell(m + 1), lam, states[m], bvr.left_branch, guard)
    blocks = {n: b for n, b in blocks.items() if float(np.linalg.norm(b)) > 0}
    if not blocks:
        raise ColinearityFailed(defect=math.inf)

    residual = _dense_residual(op, lam, blocks)
    return FiniteEigenfunction(
        lam=float(lam), support=(min(blocks), max(blocks)), blocks=blocks,
        case_tags=(left_branch, bvr.left_branch), residual=residual,
    )


def finite_eigenfunctions(
    op: OneChannelOperator,
    l: int,
    m: int,
    candidates=None,
    residual_tol: float = 1e-8,
    guard: float = GUARD,
) -> list[FiniteEigenfunction]:
    """Search candidate energies for eigenfunctions supported on shells l..m+1.

    Default candidates: real exceptional energies shared by shells l and m+1
    (within 1e-8).  Candidates failing the colinearity or residual test are
    dropped silently; use finite_eigenfunction for the per-energy errors.
    """
    if candidates is None:
        if op.n_min is None or l >= op.n_min:
            left = singular_set(op.shell(l)).real_points()
        else:
            left = None
        right = singular_set(op.shell(m + 1)).real_points()
        if left is None:
            candidates = right
        else:
            candidates = [
                x for x in left if any(abs(x - y) <= 1e-8 for y in right)
            ]
    out = []
    for lam in candidates:
        try:
            f = finite_eigenfunction(op, l, m, float(lam), guard=guard)
        except (ColinearityFailed, ChannelSingular, ZTooCloseToSpectrum, OcsError):
            continue
        if f.residual <= residual_tol:
            out.append(f)
    return out


def wall_eigenfunction_search(
    op: OneChannelOperator, lam: float, n_hi: int, guard: float = GUARD
):
    """First Dirichlet-wall eigenfunction at lam with support below n_hi."""
    if op.n_min is None:
        return None
    for k in range(op.n_min, n_hi + 1):
        try:
            pts = singular_set(op.shell(k)).real_points()
        except OcsError:
            continue
        if not any(abs(lam - x) <= 1e-8 for x in pts):
            continue
        try:
            f = finite_eigenfunction(op, op.n_min - 1, k - 1, lam, guard=guard)
        except (ColinearityFailed, ChannelSingular, ZTooCloseToSpectrum, OcsError):
            continue
        if f.residual <= 1e-8:
            return f
    return None

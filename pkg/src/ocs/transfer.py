"""Transfer matrices of one-channel operators.

For a shell with block V, coupling scalar a and channel vectors Upsilon,
Phi, the channel resolvent data at spectral parameter z is the 2x2 array

    g(z) = [[alpha, beta], [gamma, delta]]
         = (Upsilon^*; Phi^*) (V - z)^{-1} (Upsilon, Phi),

and the one-step transfer matrix

    T_z = [[ 1/(a beta),        -a alpha / beta ],
           [ delta/(a beta),   a (gamma - delta alpha / beta) ]]

maps the boundary state (a_n x_n, xt_{n-1}) to (a_{n+1} x_{n+1}, xt_n)
along formal solutions of the eigenvalue equation.  det T_z = gamma/beta.
Products are kept in scaled form (unit-size entries plus a log scale) so
hyperbolic growth over thousands of shells never overflows.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import (
    BrokenChannel,
    ChannelSingular,
    ExtensionDiverged,
    NotSingularHere,
    OcsError,
    ZTooCloseToSpectrum,
)
from .model import OneChannelOperator, ShellData

GUARD = 1e-9
COEFF_TOL = 1e-12


# ---------------------------------------------------------------------------
# channel resolvent data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GMatrix:
    """Channel compression of the shell resolvent at z."""

    alpha: complex
    beta: complex
    gamma: complex
    delta: complex
    z: complex
    n: int

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.alpha, self.beta], [self.gamma, self.delta]])


def _pole_data(shell: ShellData):
    """Grouped pole locations and the four channel coefficient arrays.

    Degenerate eigenvalues are aggregated so coefficient cancellations within
    an eigenspace are exact rather than catastrophic.
    """
    cached = getattr(shell, "_pole_cache", None)
    if cached is not None:
        return cached
    w, _ = shell.eig
    uc, pc = shell.ups_coeff, shell.phi_coeff
    lams, ca, cb, cg, cd, nu, np_ = [], [], [], [], [], [], []
    for g in shell.eigenvalue_groups:
        lams.append(float(np.mean(w[g])))
        ca.append(float(np.vdot(uc[g], uc[g]).real))
        cb.append(complex(np.vdot(uc[g], pc[g])))
        cg.append(complex(np.vdot(pc[g], uc[g])))
        cd.append(float(np.vdot(pc[g], pc[g]).real))
        nu.append(float(np.linalg.norm(uc[g])))
        np_.append(float(np.linalg.norm(pc[g])))
    data = (
        np.array(lams),
        np.array(ca),
        np.array(cb),
        np.array(cg),
        np.array(cd),
        np.array(nu),
        np.array(np_),
    )
    shell._pole_cache = data
    return data


def g_matrix(shell: ShellData, z: complex, guard: float = GUARD) -> GMatrix:
    """Channel resolvent entries at z.

    Poles whose aggregated channel coefficients all vanish (eigenvectors
    orthogonal to both channel vectors) are dropped exactly; a retained pole
    within the guard radius of z raises ZTooCloseToSpectrum.
    """
    lams, ca, cb, cg, cd, _, _ = _pole_data(shell)
    dist = np.abs(lams - z)
    near = dist <= guard
    if np.any(near):
        sig = (
            (np.abs(ca) > COEFF_TOL)
            | (np.abs(cb) > COEFF_TOL)
            | (np.abs(cd) > COEFF_TOL)
        )
        hot = near & sig
        if np.any(hot):
            raise ZTooCloseToSpectrum(z, float(lams[np.argmax(hot)]), shell.n)
        keep = ~near
        lams, ca, cb, cg, cd = (x[keep] for x in (lams, ca, cb, cg, cd))
    den = lams - z
    return GMatrix(
        alpha=complex(np.sum(ca / den)),
        beta=complex(np.sum(cb / den)),
        gamma=complex(np.sum(cg / den)),
        delta=complex(np.sum(cd / den)),
        z=z,
        n=shell.n,
    )


def coefficient_sweep(shell: ShellData, zs: np.ndarray, guard: float = GUARD):
    """Vectorized (alpha, beta, gamma, delta, masked) over an energy grid.

    Grid points within the guard radius of a retained pole are masked (NaN
    values, True in the mask) instead of raising.
    """
    lams, ca, cb, cg, cd, _, _ = _pole_data(shell)
    zs = np.asarray(zs, dtype=complex)
    sig = (np.abs(ca) > COEFF_TOL) | (np.abs(cb) > COEFF_TOL) | (np.abs(cd) > COEFF_TOL)
    den = lams[:, None] - zs[None, :]
    absden = np.abs(den)
    mask = np.any((absden <= guard) & sig[:, None], axis=0)
    drop = absden <= guard
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(drop, 0.0, 1.0 / den)
    alpha = ca @ inv
    beta = cb @ inv
    gamma = cg @ inv
    delta = cd @ inv
    for arr in (alpha, beta, gamma, delta):
        arr[mask] = np.nan
    return alpha, beta, gamma, delta, mask


# ---------------------------------------------------------------------------
# scaled 2x2 transfer matrices
# ---------------------------------------------------------------------------


def _normalize(mat: np.ndarray) -> tuple[np.ndarray, float]:
    scale = float(np.max(np.abs(mat)))
    if scale == 0.0 or not math.isfinite(scale):
        raise OcsError(f"degenerate transfer block (scale {scale})")
    return mat / scale, math.log(scale)


@dataclass(eq=False)
class TransferMatrix:
    """2x2 transfer block in scaled form: true matrix = mat * exp(log_scale).

    Maps the boundary state at shell index l to the state at index m; a
    single step over shell n has (l, m) = (n-1, n).
    """

    mat: np.ndarray
    log_scale: float
    z: complex
    l: int
    m: int
    note: str = ""

    @classmethod
    def identity(cls, z: complex, n: int) -> "TransferMatrix":
        return cls(mat=np.eye(2, dtype=complex), log_scale=0.0, z=z, l=n, m=n)

    @classmethod
    def from_array(cls, arr, z: complex, l: int, m: int, note: str = "") -> "TransferMatrix":
        mat, ls = _normalize(np.asarray(arr, dtype=complex))
        return cls(mat=mat, log_scale=ls, z=z, l=l, m=m, note=note)

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        if other.m != self.l:
            raise OcsError(
                f"non-composable transfer ranges ({other.l}->{other.m}) then "
                f"({self.l}->{self.m})"
            )
        mat, ls = _normalize(self.mat @ other.mat)
        return TransferMatrix(
            mat=mat,
            log_scale=ls + self.log_scale + other.log_scale,
            z=self.z,
            l=other.l,
            m=self.m,
        )

    def inv(self) -> "TransferMatrix":
        d = self.mat[0, 0] * self.mat[1, 1] - self.mat[0, 1] * self.mat[1, 0]
        if d == 0:
            raise OcsError("transfer block is singular; no inverse")
        adj = np.array(
            [[self.mat[1, 1], -self.mat[0, 1]], [-self.mat[1, 0], self.mat[0, 0]]]
        )
        phase = d / abs(d)
        mat, ls = _normalize(adj / phase)
        return TransferMatrix(
            mat=mat,
            log_scale=ls - self.log_scale - math.log(abs(d)),
            z=self.z,
            l=self.m,
            m=self.l,
        )

    def to_array(self) -> np.ndarray:
        """Unscaled matrix; overflows for log_scale beyond ~700."""
        return self.mat * math.exp(self.log_scale)

    def det(self) -> complex:
        return (
            (self.mat[0, 0] * self.mat[1, 1] - self.mat[0, 1] * self.mat[1, 0])
            * math.exp(2 * self.log_scale)
        )

    def det_log_polar(self) -> tuple[float, float]:
        d = self.mat[0, 0] * self.mat[1, 1] - self.mat[0, 1] * self.mat[1, 0]
        return math.log(abs(d)) + 2 * self.log_scale, cmath.phase(d)

    def log_norm(self) -> float:
        return math.log(_spectral_norm(self.mat)) + self.log_scale

    def norm(self) -> float:
        return math.exp(self.log_norm())

    def apply(self, vec, log_in: float = 0.0) -> tuple[np.ndarray, float]:
        out = self.mat @ np.asarray(vec, dtype=complex)
        nrm = float(np.linalg.norm(out))
        if nrm == 0.0:
            return out, -math.inf
        return out / nrm, log_in + self.log_scale + math.log(nrm)

    def sl2r(self, tol: float = 1e-8) -> tuple[np.ndarray, float]:
        """Phase-align to a real unimodular matrix S with T = r e^{i phi} S.

        Valid at real energies where the four entries share a common phase
        (mod pi).  Returns (S, phi) with det S = 1.
        """
        d = self.mat[0, 0] * self.mat[1, 1] - self.mat[0, 1] * self.mat[1, 0]
        if abs(d) == 0:
            raise OcsError("singular block cannot be phase-aligned")
        phi = cmath.phase(d) / 2.0
        R = self.mat * cmath.exp(-1j * phi)
        scale = float(np.max(np.abs(R)))
        if float(np.max(np.abs(R.imag))) > tol * scale:
            raise OcsError("entries do not share a common phase; not alignable")
        S = R.real / math.sqrt(abs(d))
        return S, phi


def _spectral_norm(mat: np.ndarray) -> float:
    """Largest singular value of a 2x2 block (closed form)."""
    t = float(np.sum(np.abs(mat) ** 2))
    d = abs(mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]) ** 2
    disc = max(t * t - 4 * d, 0.0)
    return math.sqrt((t + math.sqrt(disc)) / 2.0)


def spectral_norms(mats: np.ndarray) -> np.ndarray:
    """Vectorized largest singular values for an (..., 2, 2) stack."""
    t = np.sum(np.abs(mats) ** 2, axis=(-2, -1))
    d = np.abs(mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]) ** 2
    disc = np.maximum(t * t - 4 * d, 0.0)
    return np.sqrt((t + np.sqrt(disc)) / 2.0)


def transfer_from_coeffs(
    a: float,
    alpha: complex,
    beta: complex,
    gamma: complex,
    delta: complex,
    z: complex,
    n: int,
    note: str = "",
) -> TransferMatrix:
    """One-step transfer matrix from channel coefficients of shell n."""
    floor = 1e-13 * max(1.0, abs(alpha), abs(gamma), abs(delta))
    if abs(beta) <= floor:
        raise ChannelSingular("beta_zero", z, n)
    bi = 1.0 / beta
    arr = np.array(
        [
            [bi / a, -a * alpha * bi],
            [delta * bi / a, a * (gamma - delta * bi * alpha)],
        ]
    )
    mat, ls = _normalize(arr)
    return TransferMatrix(mat=mat, log_scale=ls, z=z, l=n - 1, m=n, note=note)


def transfer_matrix(shell: ShellData, z: complex, guard: float = GUARD) -> TransferMatrix:
    """One-step transfer matrix, routing exceptional real energies.

    At an energy within the guard of a shell eigenvalue the matrix is still
    defined when the eigenvector sits in both cyclic spaces (a simple common
    direction); such calls are served by the one-sided holomorphic extension.
    Other guard hits raise ChannelSingular with the obstruction kind.
    """
    try:
        g = g_matrix(shell, z, guard=guard)
    except ZTooCloseToSpectrum as err:
        lam = err.eigenvalue
        if _extendable_at(shell, lam):
            return holomorphic_extension(shell, lam)
        raise ChannelSingular("quotient_spectrum", z, shell.n) from err
    return transfer_from_coeffs(
        shell.a, g.alpha, g.beta, g.gamma, g.delta, z, shell.n
    )


def transfer_product(
    op: OneChannelOperator, z: complex, l: int, m: int, guard: float = GUARD
) -> TransferMatrix:
    """Product transfer matrix mapping the state at shell l to shell m.

    For l < m this is T_{z,m} ... T_{z,l+1}; for l > m the inverse of the
    forward product (which additionally needs nonvanishing gamma factors);
    l = m yields the identity.
    """
    if l == m:
        return TransferMatrix.identity(z, l)
    if l > m:
        return transfer_product(op, z, m, l, guard=guard).inv()
    acc = TransferMatrix.identity(z, l)
    for n in range(l + 1, m + 1):
        acc = transfer_matrix(op.shell(n), z, guard=guard) @ acc
    return acc


@dataclass(eq=False)
class TransferState:
    """Boundary state (a_{n+1} x_{n+1}, xt_n) at shell n, in scaled form."""

    vec: np.ndarray
    n: int
    log_scale: float = 0.0

    @classmethod
    def from_values(cls, ax_next: complex, xt: complex, n: int) -> "TransferState":
        return cls(vec=np.array([ax_next, xt], dtype=complex), n=n)

    def values(self) -> np.ndarray:
        return self.vec * math.exp(self.log_scale)

    def ratio(self) -> complex:
        """First over second component (scale-free)."""
        return self.vec[0] / self.vec[1]


def propagate(
    op: OneChannelOperator,
    z: complex,
    state: TransferState,
    to_n: int,
    guard: float = GUARD,
) -> TransferState:
    """Move a boundary state to another shell index, renormalizing each step."""
    vec, ls, n = state.vec, state.log_scale, state.n
    while n < to_n:
        T = transfer_matrix(op.shell(n + 1), z, guard=guard)
        vec, ls = T.apply(vec, ls)
        n += 1
    while n > to_n:
        T = transfer_matrix(op.shell(n), z, guard=guard).inv()
        vec, ls = T.apply(vec, ls)
        n -= 1
    return TransferState(vec=vec, n=to_n, log_scale=ls)


# ---------------------------------------------------------------------------
# singular set of a shell
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SingularPoint:
    z: complex
    kind: str  # beta_zero | gamma_zero | quotient_spectrum
    polished: bool
    ill_conditioned: bool
    residual: float


@dataclass(eq=False)
class SingularSet:
    n: int
    points: list[SingularPoint]
    extendable: list[float] = field(default_factory=list)

    def real_points(self, lo: float = -np.inf, hi: float = np.inf) -> list[float]:
        return [
            p.z.real
            for p in self.points
            if abs(p.z.imag) < 1e-10 and lo <= p.z.real <= hi
        ]


def _rational_zeros(lams: np.ndarray, coeffs: np.ndarray):
    """Zeros of sum_i c_i / (lam_i - z) via companion roots + Newton polish."""
    keep = np.abs(coeffs) > COEFF_TOL
    lams, coeffs = lams[keep], coeffs[keep]
    if len(lams) <= 1:
        return []
    poly = np.zeros(len(lams), dtype=complex)
    for i in range(len(lams)):
        poly = poly + coeffs[i] * np.poly(np.delete(lams, i))
    roots = np.roots(poly)

    scale = float(np.max(np.abs(coeffs)))
    spread = max(float(np.max(lams) - np.min(lams)), 1e-6)
    out = []
    for r in roots:
        z = complex(r)
        polished = False
        for _ in range(50):
            den = lams - z
            f = np.sum(coeffs / den)
            fp = np.sum(coeffs / den**2)
            if abs(fp) < 1e-300:
                break
            step = f / fp
            z -= step
            if abs(step) < 1e-15 * max(1.0, abs(z)):
                polished = True
                break
        resid = abs(np.sum(coeffs / (lams - z)))
        # derivative magnitude measures cluster conditioning
        fp = abs(np.sum(coeffs / (lams - z) ** 2))
        ill = (not polished and resid > 1e-8 * scale / spread) or fp < 1e-8 * scale
        out.append((z, polished, ill, resid))
    return out


def singular_set(shell: ShellData, search_box=None, guard: float = GUARD) -> SingularSet:
    """Exceptional energies of one shell.

    beta_zero points are zeros of the upper-right channel function (their
    conjugates are the gamma zeros, emitted separately unless coincident);
    quotient_spectrum points are shell eigenvalues whose eigenspace leaks
    out of the common cyclic subspace.  Energies with a simple common
    channel direction are reported as ``extendable`` instead.
    """
    lams, ca, cb, cg, cd, nu, np_ = _pole_data(shell)
    if not np.any(np.abs(cb) > COEFF_TOL):
        raise BrokenChannel(shell.n)

    points: list[SingularPoint] = []
    extendable: list[float] = []

    for z, polished, ill, resid in _rational_zeros(lams, cb):
        points.append(
            SingularPoint(z=z, kind="beta_zero", polished=polished,
                          ill_conditioned=ill, residual=resid)
        )
    beta_zeros = [p.z for p in points]
    for z, polished, ill, resid in _rational_zeros(lams, cg):
        if any(abs(z - bz) <= 1e-10 * max(1.0, abs(z)) for bz in beta_zeros):
            continue
        points.append(
            SingularPoint(z=z, kind="gamma_zero", polished=polished,
                          ill_conditioned=ill, residual=resid)
        )

    for i in range(len(lams)):
        has_u, has_p = nu[i] > COEFF_TOL, np_[i] > COEFF_TOL
        if not (has_u or has_p):
            continue
        if has_u and has_p and abs(cb[i]) >= (1.0 - 1e-8) * nu[i] * np_[i]:
            extendable.append(float(lams[i]))
            continue
        points.append(
            SingularPoint(z=complex(lams[i]), kind="quotient_spectrum",
                          polished=True, ill_conditioned=False, residual=0.0)
        )

    if search_box is not None:
        re_lo, re_hi, im_lo, im_hi = search_box
        points = [
            p
            for p in points
            if re_lo <= p.z.real <= re_hi and im_lo <= p.z.imag <= im_hi
        ]
        extendable = [x for x in extendable if re_lo <= x <= re_hi and im_lo <= 0 <= im_hi]

    points.sort(key=lambda p: (p.z.real, p.z.imag))
    extendable.sort()
    return SingularSet(n=shell.n, points=points, extendable=extendable)


# ---------------------------------------------------------------------------
# one-sided holomorphic extension at exceptional real energies
# ---------------------------------------------------------------------------


def _extendable_at(shell: ShellData, lam: float, atol: float = None) -> bool:
    lams, ca, cb, cg, cd, nu, np_ = _pole_data(shell)
    scale = max(1.0, float(np.max(np.abs(lams))) if len(lams) else 1.0)
    atol = atol if atol is not None else 1e-8 * scale
    for i in range(len(lams)):
        if abs(lams[i] - lam) <= atol:
            return (
                nu[i] > COEFF_TOL
                and np_[i] > COEFF_TOL
                and abs(cb[i]) >= (1.0 - 1e-8) * nu[i] * np_[i]
            )
    return False


def holomorphic_extension(
    shell: ShellData,
    lam: float,
    eps_levels: Sequence[float] = (1e-4, 5e-5, 2.5e-5),
    tol: float = 1e-6,
) -> TransferMatrix:
    """Limit of T(lam + i*eps) by Richardson extrapolation.

    The limit exists when lam is a shell eigenvalue whose eigenspace meets
    both cyclic spaces in one common direction; its upper-left entry then
    vanishes.  Disagreeing extrapolation levels (e.g. a genuinely double
    eigenvalue) raise ExtensionDiverged.
    """
    lams, *_ = _pole_data(shell)
    scale = max(1.0, float(np.max(np.abs(lams))) if len(lams) else 1.0)
    if not np.any(np.abs(lams - lam) <= 1e-8 * scale):
        raise NotSingularHere(f"{lam} is not a shell eigenvalue")

    e1, e2, e3 = eps_levels
    if not (abs(e1 / e2 - 2) < 1e-9 and abs(e2 / e3 - 2) < 1e-9):
        raise OcsError("extrapolation levels must halve")

    def T_at(eps: float) -> np.ndarray:
        g = g_matrix(shell, lam + 1j * eps, guard=0.0)
        return transfer_from_coeffs(
            shell.a, g.alpha, g.beta, g.gamma, g.delta, lam + 1j * eps, shell.n
        ).to_array()

    t1, t2, t3 = T_at(e1), T_at(e2), T_at(e3)
    a1 = 2 * t2 - t1
    a2 = 2 * t3 - t2
    limit = (4 * a2 - a1) / 3.0
    size = max(float(np.max(np.abs(limit))), 1e-30)
    spread = float(np.max(np.abs(a2 - a1)))
    if spread > tol * max(size, 1.0):
        raise ExtensionDiverged(spread=spread, tol=tol)
    if abs(limit[0, 0]) > tol * size:
        raise ExtensionDiverged(spread=abs(limit[0, 0]) / size, tol=tol)
    limit[0, 0] = 0.0
    out = TransferMatrix.from_array(limit, z=complex(lam), l=shell.n - 1, m=shell.n,
                                    note="holomorphic-extension")
    return out


# ---------------------------------------------------------------------------
# boundary vectors and solution blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryVectors:
    """Matching states at an exceptional energy of one shell.

    x_minus is the admissible state entering from the left (index n-1 side),
    x_plus the one leaving to the right.  Branch tags record whether the
    restricted shell resolvent existed ("resolvent") or the energy is an
    eigenvalue of the restriction ("eigenvector").
    """

    x_minus: np.ndarray
    x_plus: np.ndarray
    left_branch: str
    right_branch: str
    lam: float
    n: int


def _restricted_value(lams, coeffs, weights, lam, guard):
    """sum c_i/(lam_i - lam) over poles seen by the restriction (w_i > 0)."""
    seen = weights > COEFF_TOL
    if np.any(seen & (np.abs(lams - lam) <= guard)):
        return None  # eigenvalue of the restriction
    den = lams[seen] - lam
    return complex(np.sum(coeffs[seen] / den))


def boundary_vectors(shell: ShellData, lam: float, guard: float = GUARD) -> BoundaryVectors:
    """Admissible boundary states at a (typically exceptional) real energy.

    Left: x- = (a_n^2 alpha|_W, 1), degenerating to (1, 0) when the energy
    is an eigenvalue of V restricted to the cyclic space of Upsilon.
    Right: x+ = (1, delta|_Wt), degenerating to (0, 1) likewise for Phi.
    """
    lams, ca, cb, cg, cd, nu, np_ = _pole_data(shell)
    alpha_w = _restricted_value(lams, ca, nu, lam, guard)
    if alpha_w is None:
        x_minus, left = np.array([1.0, 0.0], dtype=complex), "eigenvector"
    else:
        x_minus, left = np.array([shell.a**2 * alpha_w, 1.0], dtype=complex), "resolvent"
    delta_w = _restricted_value(lams, cd, np_, lam, guard)
    if delta_w is None:
        x_plus, right = np.array([0.0, 1.0], dtype=complex), "eigenvector"
    else:
        x_plus, right = np.array([1.0, delta_w], dtype=complex), "resolvent"
    return BoundaryVectors(
        x_minus=x_minus, x_plus=x_plus, left_branch=left, right_branch=right,
        lam=lam, n=shell.n
    )


def resolvent_apply(
    shell: ShellData, z: complex, vec: np.ndarray, guard: float = GUARD
) -> np.ndarray:
    """(V - z)^{-1} vec through the cached eigendecomposition.

    Eigenvalues within the guard radius whose overlap with vec vanishes are
    dropped exactly; a significant overlap raises ZTooCloseToSpectrum.
    """
    w, U = shell.eig
    coef = U.conj().T @ np.asarray(vec, dtype=complex)
    den = w - z
    near = np.abs(den) <= guard
    if np.any(near):
        if np.max(np.abs(coef[near])) > COEFF_TOL * max(1.0, float(np.linalg.norm(coef))):
            raise ZTooCloseToSpectrum(z, float(w[np.argmax(near)]), shell.n)
        coef = coef.copy()
        coef[near] = 0.0
        den = np.where(near, 1.0, den)
    return U @ (coef / den)


def solution_vector(
    shell: ShellData,
    z: complex,
    state_n,
    state_prev,
    guard: float = GUARD,
) -> np.ndarray:
    """Shell block of the formal solution generated by boundary states.

    Psi_n = (a_{n+1} x_{n+1}) (V_n - z)^{-1} Phi_n
          + a_n xt_{n-1} (V_n - z)^{-1} Upsilon_n,

    where state_n supplies a_{n+1} x_{n+1} and state_prev supplies xt_{n-1}.
    States may be TransferState (scales are folded in) or plain 2-vectors.
    """

    def _values(s):
        if isinstance(s, TransferState):
            return s.values()
        return np.asarray(s, dtype=complex)

    ax_next = _values(state_n)[0]
    xt_prev = _values(state_prev)[1]
    out = np.zeros(shell.dim, dtype=complex)
    if ax_next != 0:
        out = out + ax_next * resolvent_apply(shell, z, shell.Phi, guard=guard)
    if xt_prev != 0:
        out = out + shell.a * xt_prev * resolvent_apply(shell, z, shell.Upsilon, guard=guard)
    return out

"""m-functions, resolvent identities and Weyl circles for one-channel operators.

Everything here reduces resolvent data of the truncated operator H_{N,c}
(Dirichlet at 0, channel boundary coefficient c at shell N) to the two
fundamental scalar solutions of the transfer recursion,

    u:  (a_1 u_1, ut_0) = (a_1, 0),      w:  (a_1 w_1, wt_0) = (0, 1/a_1),

so that T_{z,0,n} has columns (a_{n+1}u_{n+1}, ut_n)/a_1 and
a_1 (a_{n+1}w_{n+1}, wt_n).  The m-function is the channel diagonal of the
resolvent at the first shell and is obtained either by a dense solve or by
backward transfer from the right boundary state (c, 1).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DenominatorBlowup, OcsError
from .model import OneChannelOperator, assemble_dense
from .transfer import (
    GUARD,
    TransferState,
    g_matrix,
    resolvent_apply,
    solution_vector,
    transfer_matrix,
)


# ---------------------------------------------------------------------------
# fundamental solutions
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class FundamentalSolutions:
    """States of the u and w solutions at shell indices 0..N (scaled form).

    states_u[n].vec = (a_{n+1} u_{n+1}, ut_n) / exp(log_scale), likewise w.
    log_det[n] holds log|det T_{z,0,n}| and det_phase[n] its phase.
    """

    z: complex
    N: int
    states_u: list[TransferState]
    states_w: list[TransferState]
    log_det: np.ndarray
    det_phase: np.ndarray

    def det(self, n: int) -> complex:
        return cmath.exp(complex(self.log_det[n], self.det_phase[n]))

    def u(self, op: OneChannelOperator, n: int) -> complex:
        """Scalar u_n (requires n >= 1); folds the scale in."""
        s = self.states_u[n - 1]
        return s.vec[0] * math.exp(s.log_scale) / op.a(n)

    def ut(self, n: int) -> complex:
        s = self.states_u[n]
        return s.vec[1] * math.exp(s.log_scale)

    def w(self, op: OneChannelOperator, n: int) -> complex:
        s = self.states_w[n - 1]
        return s.vec[0] * math.exp(s.log_scale) / op.a(n)

    def wt(self, n: int) -> complex:
        s = self.states_w[n]
        return s.vec[1] * math.exp(s.log_scale)


def fundamental_solutions(
    op: OneChannelOperator, z: complex, N: int, guard: float = GUARD
) -> FundamentalSolutions:
    a1 = op.a(1)
    su = TransferState.from_values(a1, 0.0, 0)
    sw = TransferState.from_values(0.0, 1.0 / a1, 0)
    states_u, states_w = [su], [sw]
    log_det = np.zeros(N + 1)
    det_phase = np.zeros(N + 1)
    for n in range(1, N + 1):
        T = transfer_matrix(op.shell(n), z, guard=guard)
        vu, lu = T.apply(states_u[-1].vec, states_u[-1].log_scale)
        vw, lw = T.apply(states_w[-1].vec, states_w[-1].log_scale)
        states_u.append(TransferState(vec=vu, n=n, log_scale=lu))
        states_w.append(TransferState(vec=vw, n=n, log_scale=lw))
        ld, ph = T.det_log_polar()
        log_det[n] = log_det[n - 1] + ld
        det_phase[n] = det_phase[n - 1] + ph
    return FundamentalSolutions(
        z=z, N=N, states_u=states_u, states_w=states_w,
        log_det=log_det, det_phase=det_phase,
    )


def x_solution(
    op: OneChannelOperator, z: complex, N: int, c: complex, guard: float = GUARD
) -> list[TransferState]:
    """States of the right-boundary solution x^{(N,c)} at indices 0..N.

    Defined by (a_{N+1} x_{N+1}, xt_N) = (c, 1) and backward transfer.
    """
    states = [TransferState.from_values(c, 1.0, N)]
    for n in range(N, 0, -1):
        T = transfer_matrix(op.shell(n), z, guard=guard).inv()
        vec, ls = T.apply(states[-1].vec, states[-1].log_scale)
        states.append(TransferState(vec=vec, n=n - 1, log_scale=ls))
    states.reverse()
    return states


# ---------------------------------------------------------------------------
# m-functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MFunctionSample:
    z: complex
    N: int
    c: complex
    value: complex
    value_tilde: complex
    method: str  # dense | transfer


def m_function(
    op: OneChannelOperator,
    N: int,
    c: complex,
    z: complex,
    method: str = "transfer",
    guard: float = GUARD,
) -> MFunctionSample:
    """Channel m-function of the truncation H_{N,c}.

    value = <P_1 Upsilon_1, (H_{N,c}-z)^{-1} P_1 Upsilon_1>
          = x_1 / (a_1 xt_0)  along the right-boundary solution;
    value_tilde is the same with Phi_1, equal to delta_1 xt_1/(gamma_1 a_1 xt_0).
    """
    if method == "dense":
        dense = assemble_dense(op, N, c=c)
        H = dense.H - z * np.eye(dense.dim)
        sh1 = op.shell(1)
        e_u = dense.embed(1, sh1.Upsilon)
        e_p = dense.embed(1, sh1.Phi)
        try:
            sol = np.linalg.solve(H, np.column_stack([e_u, e_p]))
        except np.linalg.LinAlgError as err:
            raise OcsError(f"dense resolvent solve failed at z={z}") from err
        return MFunctionSample(
            z=z, N=N, c=c,
            value=complex(e_u.conj() @ sol[:, 0]),
            value_tilde=complex(e_p.conj() @ sol[:, 1]),
            method="dense",
        )
    if method != "transfer":
        raise OcsError(f"unknown m-function method {method!r}")

    states = x_solution(op, z, N, c, guard=guard)
    s0, s1 = states[0], states[1]
    a1 = op.a(1)
    if s0.vec[1] == 0:
        raise DenominatorBlowup("xt_0 vanished; z is a boundary-condition eigenvalue")
    value = s0.vec[0] / (a1**2 * s0.vec[1])
    g1 = g_matrix(op.shell(1), z, guard=guard)
    xt1 = s1.vec[1] * math.exp(s1.log_scale - s0.log_scale)
    xt0 = s0.vec[1]
    value_tilde = g1.delta * xt1 / (g1.gamma * a1 * xt0)
    return MFunctionSample(
        z=z, N=N, c=c, value=complex(value), value_tilde=complex(value_tilde),
        method="transfer",
    )


# ---------------------------------------------------------------------------
# resolvent blocks and channel overlaps
# ---------------------------------------------------------------------------


def _psi_block(op, fund, states, z, n, guard):
    """Solution block at shell n from scaled states (scales folded in)."""
    return solution_vector(
        op.shell(n), z, states[n].values(), states[n - 1].values(), guard=guard
    )


def resolvent_block(
    op: OneChannelOperator,
    N: int,
    c: complex,
    z: complex,
    m: int,
    n: int,
    guard: float = GUARD,
) -> np.ndarray:
    """Block P_m^* (H_{N,c}-z)^{-1} P_n via the solution-vector identities.

    Off-diagonal blocks are rank one: the wall solution u at the smaller
    index against the right-boundary solution x at the larger, each
    propagated from its own end (u forward, x backward) so the decaying
    factor is never formed as a difference of growing ones.  The diagonal
    adds to the local resolvent the four rank-one corrections whose scalar
    weights solve the matching system at shell n.
    """
    if not (1 <= m <= N and 1 <= n <= N):
        raise OcsError("block indices must lie in 1..N")
    zb = np.conj(z)
    a1 = op.a(1)

    def scaled_block(states, zz, k):
        """(mantissa block, log scale) at shell k from a state sequence."""
        sk, sp = states[k], states[k - 1]
        # fold the scale gap into the previous state; one shell, so bounded
        prev = sp.vec * math.exp(sp.log_scale - sk.log_scale)
        blk = solution_vector(op.shell(k), zz, sk.vec, prev, guard=guard)
        return blk, sk.log_scale

    def x_states(zz):
        xs = x_solution(op, zz, N, c, guard=guard)
        if xs[0].vec[1] == 0:
            raise DenominatorBlowup(f"wall scalar degenerate at z={zz}")
        return xs

    if m != n:
        # rank one: wall solution u at the smaller index against the
        # x-tilde_0 normalized boundary solution x at the larger one
        lo, hi = (m, n) if m < n else (n, m)
        z_lo, z_hi = (z, zb) if m < n else (zb, z)
        fs = fundamental_solutions(op, z_lo, lo, guard=guard)
        xs = x_states(z_hi)
        ub, ub_log = scaled_block(fs.states_u, z_lo, lo)
        xb, xb_log = scaled_block(xs, z_hi, hi)
        xb = xb / (a1 * xs[0].vec[1])
        log_total = ub_log + xb_log - xs[0].log_scale
        if log_total > 500.0:
            raise DenominatorBlowup("off-diagonal block overflow")
        if m < n:
            return math.exp(log_total) * np.outer(ub, np.conj(xb))
        return math.exp(log_total) * np.outer(xb, np.conj(ub))

    shell = op.shell(n)
    w, U = shell.eig
    local = (U / (w - z)) @ U.conj().T
    fz = fundamental_solutions(op, z, n, guard=guard)
    xs = x_states(z)
    a_next = op.a(n + 1)
    # scalar data of the matching system, mantissa/log split
    u_next = fz.states_u[n].vec[0] / a_next
    lu_next = fz.states_u[n].log_scale
    ut_prev = fz.states_u[n - 1].vec[1]
    lu_prev = fz.states_u[n - 1].log_scale
    x_next = xs[n].vec[0] / a_next
    lx_next = xs[n].log_scale
    xt_prev = xs[n - 1].vec[1]
    lx_prev = xs[n - 1].log_scale
    s0 = max(lu_next + lx_prev, lx_next + lu_prev)
    t_ux = u_next * xt_prev * math.exp(lu_next + lx_prev - s0)
    t_xu = x_next * ut_prev * math.exp(lx_next + lu_prev - s0)
    det_n = t_ux - t_xu
    if abs(det_n) < 1e-14 * max(abs(t_ux), abs(t_xu)) or det_n == 0:
        raise DenominatorBlowup(f"diagonal matching degenerate at z={z}")
    g = g_matrix(shell, z, guard=guard)
    if g.beta == 0 or g.gamma == 0:
        raise DenominatorBlowup(f"channel overlap vanishes at z={z}")
    c_pu = x_next * ut_prev * math.exp(lx_next + lu_prev - s0) / (g.beta * det_n)
    c_pp = (
        a_next
        * x_next
        * u_next
        * math.exp(lx_next + lu_next - s0)
        / (shell.a * g.gamma * det_n)
    )
    c_uu = (
        shell.a
        * ut_prev
        * xt_prev
        * math.exp(lu_prev + lx_prev - s0)
        / (a_next * g.beta * det_n)
    )
    c_up = ut_prev * x_next * math.exp(lu_prev + lx_next - s0) / (g.gamma * det_n)
    r_phi = resolvent_apply(shell, z, shell.Phi, guard=guard)
    r_ups = resolvent_apply(shell, z, shell.Upsilon, guard=guard)
    rb_phi = resolvent_apply(shell, zb, shell.Phi, guard=guard)
    rb_ups = resolvent_apply(shell, zb, shell.Upsilon, guard=guard)
    return (
        local
        + c_pu * np.outer(r_phi, rb_ups.conj())
        + c_pp * np.outer(r_phi, rb_phi.conj())
        + c_uu * np.outer(r_ups, rb_ups.conj())
        + c_up * np.outer(r_ups, rb_phi.conj())
    )


def channel_overlaps(
    op: OneChannelOperator,
    N: int,
    c: complex,
    z: complex,
    m: int,
    n: int,
    guard: float = GUARD,
) -> dict[str, complex]:
    """The four scalar resolvent pairings between channel vectors.

    Keys: "uu" = <P_m Ups_m, G P_n Ups_n>, "up" = <P_m Ups_m, G P_n Phi_n>,
    "pu" and "pp" likewise with Phi_m on the left; G = (H_{N,c}-z)^{-1}.
    Computed from the closed forms in the fundamental scalars, with the
    beta^{-1}gamma twist at the column shell for the Ups_n pairings.
    """
    if not (1 <= m <= N and 1 <= n <= N):
        raise OcsError("overlap indices must lie in 1..N")
    top = max(m, n)
    fz = fundamental_solutions(op, z, top, guard=guard)
    xs = x_solution(op, z, N, c, guard=guard)
    a1 = op.a(1)

    def u_at(k):
        return fz.u(op, k)

    def ut_at(k):
        return fz.ut(k)

    def x_at(k):
        s = xs[k - 1]
        return s.vec[0] * math.exp(s.log_scale) / op.a(k)

    def xt_at(k):
        s = xs[k]
        return s.vec[1] * math.exp(s.log_scale)

    denom = fz.det(n) * a1 * xt_at(0)
    if denom == 0 or not np.isfinite(denom):
        raise DenominatorBlowup(f"overlap denominator degenerate at z={z}")
    gn = g_matrix(op.shell(n), z, guard=guard)
    twist = gn.gamma / gn.beta

    uu = (u_at(m) * x_at(n)) if m <= n else (x_at(m) * u_at(n))
    up = (u_at(m) * xt_at(n)) if m <= n else (x_at(m) * ut_at(n))
    pu = (ut_at(m) * x_at(n)) if m < n else (xt_at(m) * u_at(n))
    pp = (ut_at(m) * xt_at(n)) if m <= n else (xt_at(m) * ut_at(n))
    return {
        "uu": complex(twist * uu / denom),
        "up": complex(up / denom),
        "pu": complex(twist * pu / denom),
        "pp": complex(pp / denom),
    }


# ---------------------------------------------------------------------------
# Weyl circles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeylCircle:
    """Circle of boundary-parametrized m-values at truncation level n.

    center is the geometric center (Moebius image of the reflected pole);
    average_point is the image of c = i, the Cauchy-average inside the disk;
    radius and radius_alt are the determinant-over-boundary-pairing and
    determinant-over-norm-sum evaluations of the same quantity.
    """

    z: complex
    n: int
    center: complex
    radius: float
    average_point: complex
    radius_alt: float


def _moebius_m(fund: FundamentalSolutions, n: int, c: complex) -> complex:
    """m_{n,c} = (wt_n c - a_{n+1} w_{n+1}) / (a_{n+1} u_{n+1} - ut_n c).

    The scalars are normalization-independent: the first-shell coupling in
    the initial states cancels between the u and w columns.
    """
    su, sw = fund.states_u[n], fund.states_w[n]
    shift = math.exp(sw.log_scale - su.log_scale)
    au, ut = su.vec
    aw, wt = sw.vec[0] * shift, sw.vec[1] * shift
    den = au - ut * c
    if den == 0:
        raise DenominatorBlowup("Moebius pole hit")
    return (wt * c - aw) / den


def weyl_radius(
    op: OneChannelOperator, z: complex, n: int, guard: float = GUARD
) -> WeylCircle:
    """Weyl circle of m_{n,c}(z) over real boundary coefficients c.

    radius: |det T_{z,0,n}| / (2 |Im(a_{n+1} conj(u_{n+1}) ut_n)|);
    radius_alt: |det T_{z,0,n}| / (2 |Im z| sum_k ||Psi^u_{z,k}||^2);
    both in log-safe arithmetic, so deep truncations do not overflow.
    """
    if z.imag == 0:
        raise OcsError("Weyl circles need a nonreal spectral parameter")
    fund = fundamental_solutions(op, z, n, guard=guard)

    su = fund.states_u[n]
    pair = np.conj(su.vec[0]) * su.vec[1]
    if pair.imag == 0:
        raise DenominatorBlowup("boundary pairing has no imaginary part")
    log_r = fund.log_det[n] - math.log(2 * abs(pair.imag)) - 2 * su.log_scale

    log_terms = []
    for k in range(1, n + 1):
        st, sp = fund.states_u[k], fund.states_u[k - 1]
        base = max(st.log_scale, sp.log_scale)
        blk = solution_vector(
            op.shell(k), z,
            st.vec * math.exp(st.log_scale - base),
            sp.vec * math.exp(sp.log_scale - base),
            guard=guard,
        )
        nb = float(np.linalg.norm(blk))
        if nb > 0:
            log_terms.append(2 * (base + math.log(nb)))
    log_sum = float(logsumexp(log_terms))
    log_r_alt = fund.log_det[n] - math.log(2 * abs(z.imag)) - log_sum

    pole = su.vec[0] / su.vec[1]
    center = _moebius_m(fund, n, np.conj(pole))
    avg = _moebius_m(fund, n, 1j)
    return WeylCircle(
        z=z, n=n, center=complex(center), radius=math.exp(log_r),
        average_point=complex(avg), radius_alt=math.exp(log_r_alt),
    )


@dataclass(eq=False)
class LimitPointDiagnostic:
    z: complex
    ns: np.ndarray
    log_radii: np.ndarray
    verdict: str  # limit-point-like | limit-circle-like | inconclusive

    @property
    def radii(self) -> np.ndarray:
        return np.exp(self.log_radii)


def limit_point_diagnostic(
    op: OneChannelOperator, z: complex, n_max: int, guard: float = GUARD
) -> LimitPointDiagnostic:
    """Radius sequence of the Weyl circles and an advisory verdict.

    limit-point-like once the radius falls below 1e-8; limit-circle-like when
    the radius changes by less than 1e-3 relatively across the last ten
    truncation levels; inconclusive otherwise.  Finite data cannot prove
    either asymptotic alternative.
    """
    if z.imag == 0:
        raise OcsError("Weyl circles need a nonreal spectral parameter")
    state = TransferState.from_values(op.a(1), 0.0, 0)
    log_det = 0.0
    log_terms: list[float] = []
    ns, log_radii = [], []
    for n in range(1, n_max + 1):
        T = transfer_matrix(op.shell(n), z, guard=guard)
        prev = state
        vec, ls = T.apply(state.vec, state.log_scale)
        state = TransferState(vec=vec, n=n, log_scale=ls)
        log_det += T.det_log_polar()[0]
        base = max(state.log_scale, prev.log_scale)
        blk = solution_vector(
            op.shell(n), z,
            state.vec * math.exp(state.log_scale - base),
            prev.vec * math.exp(prev.log_scale - base),
            guard=guard,
        )
        nb = float(np.linalg.norm(blk))
        if nb > 0:
            log_terms.append(2 * (base + math.log(nb)))
        log_sum = float(logsumexp(log_terms))
        ns.append(n)
        log_radii.append(log_det - math.log(2 * abs(z.imag)) - log_sum)
    ns = np.array(ns)
    log_radii = np.array(log_radii)
    if log_radii[-1] < math.log(1e-8):
        verdict = "limit-point-like"
    else:
        start = max(0, len(log_radii) - 10)
        rel = 1.0 - math.exp(log_radii[-1] - log_radii[start])
        verdict = "limit-circle-like" if abs(rel) < 1e-3 else "inconclusive"
    return LimitPointDiagnostic(z=z, ns=ns, log_radii=log_radii, verdict=verdict)

"""Random one-channel models on layered graphs.

Two families are implemented.  The stretched family has shells made of two
equal spheres of size s_n joined by the identity, so the channel
coefficients are means of s_n independent terms

    alpha_{lam,n} = (1/s_n) sum_j (w'_j - lam) / D_j,
    beta_{lam,n}  = -(1/s_n) sum_j 1 / D_j,
    delta_{lam,n} = (1/s_n) sum_j (w_j - lam) / D_j,

with D_j = (w_j - lam)(w'_j - lam) - 1.  The homogeneous-modes family has
shells built from a fixed orthogonal pattern: every shell quantity reduces
exactly to a k x k solve against per-subclass harmonic means.  As shells
grow, both converge to deterministic limit transfer matrices; inside the
windows where the limit is elliptic (real, det 1, |trace| < 2) products of
sampled matrices stay bounded in fourth moment, which is what the checks
here measure.

Sign convention: all channel coefficients are resolvent overlaps of the
actual shell (so sampled values match the generic shell reduction to
machine precision, and sigma = 0 draws equal the limit exactly).  Some
common displays of the stretched beta and of the limit matrix carry the
opposite overall sign; magnitudes of traces and norms are unaffected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import (
    ChannelSingular,
    ConfigError,
    DenominatorBlowup,
    DomainViolation,
    I0Violation,
    NotElliptic,
    OcsError,
    SupportViolation,
)
from . import model
from .model import OneChannelOperator, ShellData
from .transfer import TransferMatrix, spectral_norms, transfer_from_coeffs

DENOM_GUARD = 1e-6


# ---------------------------------------------------------------------------
# disorder distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DisorderSpec:
    """Single-site distribution with a known compact support hull."""

    kind: str  # discrete | uniform | custom
    points: tuple = None
    weights: tuple = None
    lo: float = None
    hi: float = None
    density: Callable[[float], float] = None

    def __post_init__(self):
        if self.kind == "discrete":
            if not self.points:
                raise ConfigError("disorder.points", "empty")
            pts = tuple(float(p) for p in self.points)
            if self.weights is None:
                wts = tuple(1.0 / len(pts) for _ in pts)
            else:
                wts = tuple(float(w) for w in self.weights)
            if len(wts) != len(pts):
                raise ConfigError("disorder.weights", "length mismatch")
            if any(w < 0 for w in wts) or abs(sum(wts) - 1.0) > 1e-12:
                raise ConfigError("disorder.weights", "must be nonnegative and sum to 1")
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "weights", wts)
            object.__setattr__(self, "lo", min(pts) if self.lo is None else float(self.lo))
            object.__setattr__(self, "hi", max(pts) if self.hi is None else float(self.hi))
            if self.lo > min(pts) or self.hi < max(pts):
                raise ConfigError("disorder", "support outside the declared hull")
        elif self.kind in ("uniform", "custom"):
            if self.lo is None or self.hi is None or not self.lo <= self.hi:
                raise ConfigError("disorder", "needs a hull lo <= hi")
            if self.kind == "custom" and self.density is None:
                raise ConfigError("disorder.density", "custom disorder needs a density")
        else:
            raise ConfigError("disorder.kind", f"unknown kind {self.kind!r}")

    @property
    def hull(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    @property
    def sigma(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    @classmethod
    def point(cls, v: float = 0.0) -> "DisorderSpec":
        return cls(kind="discrete", points=(v,), weights=(1.0,))

    @classmethod
    def two_point(cls, sigma: float, center: float = 0.0) -> "DisorderSpec":
        return cls(
            kind="discrete",
            points=(center - sigma, center + sigma),
            weights=(0.5, 0.5),
        )

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "DisorderSpec":
        return cls(kind="uniform", lo=lo, hi=hi)

    def cauchy_transform(self, lam: float) -> float:
        """integral of 1/(x - lam) dnu(x), for lam outside the hull."""
        if self.kind == "discrete":
            return float(
                sum(w / (p - lam) for p, w in zip(self.points, self.weights))
            )
        if self.kind == "uniform":
            if self.hi == self.lo:
                return 1.0 / (self.lo - lam)
            return math.log((self.hi - lam) / (self.lo - lam)) / (self.hi - self.lo)
        val, _ = integrate.quad(
            lambda x: self.density(x) / (x - lam),
            self.lo,
            self.hi,
            epsabs=1e-12,
            epsrel=1e-12,
            limit=400,
        )
        total, _ = integrate.quad(self.density, self.lo, self.hi, epsabs=1e-12, limit=400)
        return float(val / total)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "discrete":
            return rng.choice(np.array(self.points), size=size, p=np.array(self.weights))
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, size=size)
        raise ConfigError("disorder.kind", "custom disorder cannot be sampled")


def disorder_from_dict(d: dict) -> DisorderSpec:
    kind = d.get("kind")
    if kind == "point":
        return DisorderSpec.point(float(d.get("value", 0.0)))
    if kind == "two_point":
        return DisorderSpec.two_point(float(d["sigma"]), float(d.get("center", 0.0)))
    if kind == "discrete":
        return DisorderSpec(kind="discrete", points=tuple(d["points"]),
                            weights=tuple(d["weights"]) if d.get("weights") else None)
    if kind == "uniform":
        return DisorderSpec.uniform(float(d["lo"]), float(d["hi"]))
    raise ConfigError("disorder.kind", f"unknown kind {kind!r}")


def harmonic_mean(disorder: DisorderSpec, lam: float) -> float:
    """Reciprocal of the averaged reciprocal distance to the energy."""
    lo, hi = disorder.hull
    if lo <= lam <= hi:
        raise SupportViolation(f"lambda = {lam} inside the support hull [{lo}, {hi}]")
    return 1.0 / disorder.cauchy_transform(lam)


# ---------------------------------------------------------------------------
# growth laws for shell sizes
# ---------------------------------------------------------------------------


def sizes_from_law(law) -> Callable[[int], int]:
    """Shell-size provider from an int, an explicit list, or "name:args".

    Supported strings: "const:s=5", "linear:c=2", "poly:d=3" (s_n = n^d,
    optionally "poly:d=3,c=2" for c * n^d).
    """
    if isinstance(law, int):
        return lambda n: law
    if isinstance(law, (list, tuple)):
        seq = [int(x) for x in law]
        def from_list(n: int) -> int:
            if not 1 <= n <= len(seq):
                raise ConfigError("sizes", f"index {n} outside the given sequence")
            return seq[n - 1]
        return from_list
    if isinstance(law, str):
        name, _, args = law.partition(":")
        kv = {}
        for part in filter(None, args.split(",")):
            key, _, val = part.partition("=")
            kv[key.strip()] = float(val)
        if name == "const":
            return lambda n: max(1, int(round(kv.get("s", 1))))
        if name == "linear":
            c = kv.get("c", 1.0)
            return lambda n: max(1, int(round(c * n)))
        if name == "poly":
            d = kv.get("d", 3.0)
            c = kv.get("c", 1.0)
            return lambda n: max(1, int(round(c * n**d)))
        raise ConfigError("sizes", f"unknown growth law {name!r}")
    if callable(law):
        return law
    raise ConfigError("sizes", f"cannot interpret {law!r}")


# ---------------------------------------------------------------------------
# stretched family: limits and domain
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class StretchedAntitreeSpec:
    """Shells are two equal spheres of size s_n fully joined (weight 1)."""

    s: object  # growth law, list, or callable
    disorder: DisorderSpec

    def __post_init__(self):
        self._s_of = sizes_from_law(self.s)

    def s_n(self, n: int) -> int:
        s = int(self._s_of(n))
        if s < 1:
            raise ConfigError("s", f"shell size {s} at n = {n} must be >= 1")
        return s


@dataclass(eq=False)
class LimitTransfer:
    """Deterministic large-shell limit of the one-step transfer matrix."""

    lam: float
    matrix: np.ndarray
    trace: float
    elliptic: bool
    family: str  # stretched | partial
    alpha: float
    beta: float
    delta: float

    @property
    def det(self) -> float:
        m = self.matrix
        return float((m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real)


def stretched_domain(disorder: DisorderSpec, lam: float) -> str:
    """Classify lam as "inner" (all hull distances < 1) or "outer" (> 1)."""
    lo, hi = disorder.hull
    dmax = max(abs(lam - lo), abs(lam - hi))
    dmin = 0.0 if lo <= lam <= hi else min(abs(lam - lo), abs(lam - hi))
    if dmax < 1.0:
        return "inner"
    if dmin > 1.0:
        return "outer"
    raise DomainViolation(
        f"lambda = {lam}: hull distances straddle 1 (range [{dmin}, {dmax}])"
    )


def _nu_nodes(disorder: DisorderSpec, n_nodes: int = 200):
    """Quadrature nodes and weights representing the disorder measure."""
    if disorder.kind == "discrete":
        return np.array(disorder.points), np.array(disorder.weights)
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    lo, hi = disorder.hull
    pts = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    wts = 0.5 * (hi - lo) * w
    if disorder.kind == "custom":
        dens = np.array([disorder.density(p) for p in pts])
        wts = wts * dens
        wts = wts / wts.sum()
    else:
        wts = wts / (hi - lo)
    return pts, wts


def _stretched_coeff_values(pts, wts, lam):
    P, Pp = np.meshgrid(pts, pts, indexing="ij")
    W = np.outer(wts, wts)
    D = (P - lam) * (Pp - lam) - 1.0
    if np.min(np.abs(D)) < DENOM_GUARD:
        raise DenominatorBlowup(f"pair denominator below {DENOM_GUARD} at lambda = {lam}")
    alpha = float(np.sum(W * (Pp - lam) / D))
    beta = -float(np.sum(W / D))
    delta = float(np.sum(W * (P - lam) / D))
    return alpha, beta, delta


def _matrix_from_coeffs(alpha: float, beta: float, delta: float) -> np.ndarray:
    # one-step matrix for a = -1 and gamma = beta (real shell data)
    return np.array(
        [[-1.0 / beta, alpha / beta], [-delta / beta, -beta + delta * alpha / beta]]
    )


def limit_transfer_stretched(disorder: DisorderSpec, lam: float) -> LimitTransfer:
    """Large-s_n limit of the stretched-shell transfer matrix at lam.

    Double integral over the product disorder; exact double sum for discrete
    measures, tensor Gauss-Legendre otherwise (checked by node doubling).
    """
    stretched_domain(disorder, lam)
    pts, wts = _nu_nodes(disorder)
    alpha, beta, delta = _stretched_coeff_values(pts, wts, lam)
    if disorder.kind != "discrete":
        pts2, wts2 = _nu_nodes(disorder, n_nodes=400)
        a2, b2, d2 = _stretched_coeff_values(pts2, wts2, lam)
        if max(abs(a2 - alpha), abs(b2 - beta), abs(d2 - delta)) > 1e-10:
            alpha, beta, delta = a2, b2, d2
    T = _matrix_from_coeffs(alpha, beta, delta)
    trace = float(T[0, 0] + T[1, 1])
    return LimitTransfer(
        lam=float(lam), matrix=T, trace=trace, elliptic=abs(trace) < 2.0,
        family="stretched", alpha=alpha, beta=beta, delta=delta,
    )


# ---------------------------------------------------------------------------
# homogeneous-modes family: spec, limits, I0
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class PartialAntitreeSpec:
    """Layered family with a fixed k x k orthogonal connection pattern.

    Sphere m (1-based) belongs to class j = ((m - 1) mod 3) + 1 and is split
    into k_j equal subclasses; r sizes are adjusted up to the divisibility.
    """

    k_vec: tuple[int, int, int]
    O: np.ndarray
    a_diag: np.ndarray
    r: object  # growth law, list, or callable (raw sphere sizes)
    disorder: DisorderSpec

    def __post_init__(self):
        k1, k2, k3 = (int(x) for x in self.k_vec)
        if k1 < 1 or k3 < 1 or k2 < 0:
            raise ConfigError("k_vec", "needs k1, k3 >= 1 and k2 >= 0")
        self.k_vec = (k1, k2, k3)
        self.O = np.asarray(self.O, dtype=float)
        k = k1 + k2 + k3
        if self.O.shape != (k, k):
            raise ConfigError("O", f"expected shape ({k}, {k})")
        if np.max(np.abs(self.O.T @ self.O - np.eye(k))) > 1e-12:
            raise ConfigError("O", "not orthogonal to 1e-12")
        self.a_diag = np.asarray(self.a_diag, dtype=float).reshape(-1)
        if self.a_diag.shape != (k,):
            raise ConfigError("a_diag", f"expected {k} diagonal entries")
        self._r_of = sizes_from_law(self.r)

    @property
    def k(self) -> int:
        return sum(self.k_vec)

    @property
    def coupling(self) -> np.ndarray:
        """The pattern matrix O diag(a) O^T seen by every shell."""
        return self.O @ np.diag(self.a_diag) @ self.O.T

    @property
    def pattern_ups(self) -> np.ndarray:
        k1, k2, k3 = self.k_vec
        v = np.zeros(self.k)
        v[:k1] = 1.0 / math.sqrt(k1)
        return v

    @property
    def pattern_phi(self) -> np.ndarray:
        k1, k2, k3 = self.k_vec
        v = np.zeros(self.k)
        v[k1 + k2:] = 1.0 / math.sqrt(k3)
        return v

    def class_of(self, m: int) -> int:
        return (m - 1) % 3 + 1

    def r_m(self, m: int) -> int:
        """Size of sphere m, rounded up to the class divisibility."""
        j = self.class_of(m)
        kj = self.k_vec[j - 1]
        if kj == 0:
            return 0
        raw = int(self._r_of(m))
        if raw <= 0 and j == 2:
            raise ConfigError("r", f"class-2 sphere {m} empty while k2 > 0")
        if raw <= 0:
            raise ConfigError("r", f"sphere {m} must be nonempty")
        return ((raw + kj - 1) // kj) * kj

    def shell_spheres(self, n: int) -> tuple[int, int, int]:
        return (self.r_m(3 * n - 2), self.r_m(3 * n - 1), self.r_m(3 * n))


def _corner_diagonals(lo: float, hi: float, k: int, cap: int = 1024):
    if lo == hi:
        return [np.full(k, lo)]
    if 2**k <= cap:
        out = []
        for bits in range(2**k):
            out.append(np.array([hi if bits >> j & 1 else lo for j in range(k)]))
        return out
    rng = np.random.default_rng(171717)
    return [np.where(rng.random(k) < 0.5, lo, hi) for _ in range(cap)]


def check_interval_condition(
    spec: PartialAntitreeSpec,
    lam: float,
    margin: float = 1e-6,
    interior: int = 100,
) -> float:
    """Certify lam against the whole diagonal family; returns the margin.

    Tests hull-corner diagonals plus fixed random interior ones: the matrix
    D - lam + coupling must be invertible and the channel overlap at least
    the margin for each.  Raises I0Violation with the witness diagonal.
    """
    lo, hi = spec.disorder.hull
    if lo <= lam <= hi:
        raise SupportViolation(f"lambda = {lam} inside the support hull [{lo}, {hi}]")
    k = spec.k
    diags = _corner_diagonals(lo, hi, k)
    if lo != hi and interior > 0:
        rng = np.random.default_rng(424242)
        diags.extend(rng.uniform(lo, hi, size=(interior, k)))
    coupling = spec.coupling
    ups, phi = spec.pattern_ups, spec.pattern_phi
    worst = math.inf
    for D in diags:
        M = np.diag(D - lam) + coupling
        smin = np.linalg.svd(M, compute_uv=False)[-1]
        if smin < 1e-12 * max(1.0, float(np.max(np.abs(M)))):
            raise I0Violation(np.round(D, 12).tolist(), lam)
        overlap = abs(float(ups @ np.linalg.solve(M, phi)))
        if overlap < margin:
            raise I0Violation(np.round(D, 12).tolist(), lam)
        worst = min(worst, overlap)
    return worst


def limit_transfer_partial(
    spec: PartialAntitreeSpec, lam: float, check_domain: bool = True
) -> LimitTransfer:
    """Large-shell limit for the homogeneous-modes family: a k x k solve."""
    if check_domain:
        check_interval_condition(spec, lam)
    h = harmonic_mean(spec.disorder, lam)
    M = h * np.eye(spec.k) + spec.coupling
    try:
        sol = np.linalg.solve(M, np.column_stack([spec.pattern_ups, spec.pattern_phi]))
    except np.linalg.LinAlgError as exc:
        raise ChannelSingular("kxk_singular", lam) from exc
    alpha = float(spec.pattern_ups @ sol[:, 0])
    beta = float(spec.pattern_ups @ sol[:, 1])
    delta = float(spec.pattern_phi @ sol[:, 1])
    if abs(beta) < 1e-14:
        raise ChannelSingular("beta_zero", lam)
    T = _matrix_from_coeffs(alpha, beta, delta)
    trace = float(T[0, 0] + T[1, 1])
    return LimitTransfer(
        lam=float(lam), matrix=T, trace=trace, elliptic=abs(trace) < 2.0,
        family="partial", alpha=alpha, beta=beta, delta=delta,
    )


# ---------------------------------------------------------------------------
# elliptic windows on the energy axis
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class IntervalReport:
    """Boolean window mask over a grid plus refined interval endpoints."""

    grid: np.ndarray
    mask: np.ndarray
    intervals: list[tuple[float, float]]
    excluded_points: list[float] = field(default_factory=list)
    family: str = ""

    @property
    def endpoints(self) -> list[float]:
        out = set()
        for lo, hi in self.intervals:
            out.add(round(lo, 10))
            out.add(round(hi, 10))
        return sorted(out)


def _bisect_predicate(pred, a: float, b: float, tol: float = 1e-8) -> float:
    # a and b may come in either order; pred must differ between them
    fa = pred(a)
    while abs(b - a) > tol:
        mid = 0.5 * (a + b)
        if pred(mid) == fa:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def _split_points(pred, trace_fn, grid, mask, extra_candidates):
    """Interior single-point exclusions inside true runs.

    Two sources: candidate energies where the domain degenerates to a point
    (supplied by the caller) and energies where |trace| touches 2 from below
    (double zeros of the elliptic margin, found by polishing local maxima).
    """
    out = []
    for cand in extra_candidates:
        if grid[0] < cand < grid[-1] and not pred(cand):
            # escalate the probe distance past any guard band around the point
            for eps in (1e-8, 1e-7, 1e-6, 1e-5, 1e-4):
                if pred(cand - eps) and pred(cand + eps):
                    out.append(float(cand))
                    break
    # local maxima of |trace| close to 2 inside true runs
    for i in range(1, len(grid) - 1):
        if not (mask[i - 1] and mask[i] and mask[i + 1]):
            continue
        t0, t1, t2 = (abs(trace_fn(x)) for x in (grid[i - 1], grid[i], grid[i + 1]))
        if not (t1 >= t0 and t1 >= t2 and t1 > 2.0 - 0.2):
            continue
        res = optimize.minimize_scalar(
            lambda x: -abs(trace_fn(x)),
            bracket=None,
            bounds=(grid[i - 1], grid[i + 1]),
            method="bounded",
            options={"xatol": 1e-10},
        )
        if -res.fun >= 2.0 - 1e-9:
            out.append(float(res.x))
    merged: list[float] = []
    for x in sorted(out):
        if not merged or x - merged[-1] > 1e-7:
            merged.append(x)
    return merged


def _scan_intervals(pred, trace_fn, grid, extra_candidates, family) -> IntervalReport:
    grid = np.asarray(grid, dtype=float)
    mask = np.array([pred(x) for x in grid], dtype=bool)
    intervals: list[tuple[float, float]] = []
    if len(grid) == 0:
        return IntervalReport(grid=grid, mask=mask, intervals=[], family=family)
    splits = _split_points(pred, trace_fn, grid, mask, extra_candidates)
    i = 0
    while i < len(grid):
        if not mask[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(grid) and mask[j + 1]:
            j += 1
        lo = grid[i] if i == 0 else _bisect_predicate(pred, grid[i - 1], grid[i])
        hi = grid[j] if j == len(grid) - 1 else _bisect_predicate(pred, grid[j + 1], grid[j])
        lo, hi = min(lo, hi), max(lo, hi)
        cuts = [x for x in splits if lo < x < hi]
        edges = [lo, *cuts, hi]
        for klo, khi in zip(edges[:-1], edges[1:]):
            intervals.append((float(klo), float(khi)))
        i = j + 1
    return IntervalReport(
        grid=grid, mask=mask, intervals=intervals,
        excluded_points=splits, family=family,
    )


def interval_S(disorder: DisorderSpec, lam_grid) -> IntervalReport:
    """Elliptic window of the stretched family over a grid, with refined
    endpoints (including interior single-point exclusions)."""

    def trace_fn(lam: float) -> float:
        try:
            return limit_transfer_stretched(disorder, lam).trace
        except OcsError:
            return math.inf

    def pred(lam: float) -> bool:
        t = trace_fn(lam)
        return math.isfinite(t) and abs(t) < 2.0

    lo, hi = disorder.hull
    candidates = [lo - 1.0, hi - 1.0, lo + 1.0, hi + 1.0]
    return _scan_intervals(pred, trace_fn, lam_grid, candidates, "stretched")


def interval_A(spec: PartialAntitreeSpec, lam_grid) -> IntervalReport:
    """Elliptic window of the homogeneous-modes family over a grid."""

    def trace_fn(lam: float) -> float:
        try:
            return limit_transfer_partial(spec, lam, check_domain=False).trace
        except OcsError:
            return math.inf

    def pred(lam: float) -> bool:
        try:
            check_interval_condition(spec, lam)
        except OcsError:
            return False
        t = trace_fn(lam)
        return math.isfinite(t) and abs(t) < 2.0

    # candidate point exclusions: spectra of corner diagonals + coupling
    lo, hi = spec.disorder.hull
    candidates = []
    for D in _corner_diagonals(lo, hi, spec.k, cap=64):
        candidates.extend(np.linalg.eigvalsh(np.diag(D) + spec.coupling).tolist())
    return _scan_intervals(pred, trace_fn, lam_grid, sorted(set(candidates)), "partial")


# ---------------------------------------------------------------------------
# shell samplers and their dense-oracle counterparts
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ShellSample:
    """One sampled shell reduced to its channel coefficients."""

    n: int
    lam: float
    alpha: float
    beta: float
    delta: float
    transfer: TransferMatrix

    @property
    def matrix(self) -> np.ndarray:
        return _matrix_from_coeffs(self.alpha, self.beta, self.delta)


def stretched_coeffs_from_pairs(om: np.ndarray, omp: np.ndarray, lam: float):
    """Exact shell coefficients from explicit potential pairs."""
    D = (om - lam) * (omp - lam) - 1.0
    if np.min(np.abs(D)) < DENOM_GUARD:
        raise DenominatorBlowup(f"pair denominator below {DENOM_GUARD} at lambda = {lam}")
    alpha = float(np.mean((omp - lam) / D))
    beta = -float(np.mean(1.0 / D))
    delta = float(np.mean((om - lam) / D))
    return alpha, beta, delta


def _pair_values(disorder: DisorderSpec):
    pts = np.array(disorder.points)
    wts = np.array(disorder.weights)
    P, Pp = np.meshgrid(pts, pts, indexing="ij")
    probs = np.outer(wts, wts)
    return P.ravel(), Pp.ravel(), probs.ravel()


def _stretched_coeffs_counts(disorder, s, lam, rng, trials=None):
    """Multinomial fast path over the finitely many pair values.

    Vectorized over trials when requested; exact in distribution for
    discrete disorder of any shell size.
    """
    p, pp, probs = _pair_values(disorder)
    D = (p - lam) * (pp - lam) - 1.0
    if np.min(np.abs(D)) < DENOM_GUARD:
        raise DenominatorBlowup(f"pair denominator below {DENOM_GUARD} at lambda = {lam}")
    counts = rng.multinomial(s, probs, size=trials)  # (..., C)
    alpha = counts @ ((pp - lam) / D) / s
    beta = -(counts @ (1.0 / D)) / s
    delta = counts @ ((p - lam) / D) / s
    return alpha, beta, delta


def sample_shell_stretched(
    spec: StretchedAntitreeSpec,
    n: int,
    lam: float,
    rng: np.random.Generator,
    force_explicit: bool = False,
) -> ShellSample:
    """Draw one stretched shell and reduce it to channel coefficients.

    All three coefficients come from one draw of the s_n potential pairs
    (they share denominators within the shell).  Discrete disorder with
    large shells goes through pair-value counts instead of explicit draws.
    """
    stretched_domain(spec.disorder, lam)
    s = spec.s_n(n)
    if spec.disorder.kind == "discrete" and s > 64 and not force_explicit:
        alpha, beta, delta = _stretched_coeffs_counts(spec.disorder, s, lam, rng)
    else:
        om = spec.disorder.sample(rng, s)
        omp = spec.disorder.sample(rng, s)
        alpha, beta, delta = stretched_coeffs_from_pairs(om, omp, lam)
    T = transfer_from_coeffs(-1.0, alpha, beta, beta, delta, lam, n, note="sampled")
    return ShellSample(n=n, lam=float(lam), alpha=float(alpha), beta=float(beta),
                       delta=float(delta), transfer=T)


def stretched_shell_from_pairs(n: int, om: np.ndarray, omp: np.ndarray) -> ShellData:
    """Explicit 2s x 2s shell for the dense oracle: two spheres joined by 1."""
    s = len(om)
    V = np.zeros((2 * s, 2 * s))
    V[:s, :s] = np.diag(om)
    V[s:, s:] = np.diag(omp)
    V[:s, s:] = np.eye(s)
    V[s:, :s] = np.eye(s)
    phi = np.full(s, 1.0 / math.sqrt(s))
    ups = np.concatenate([phi, np.zeros(s)])
    fwd = np.concatenate([np.zeros(s), phi])
    return ShellData(n=n, V=V, a=-1.0, Phi=fwd, Upsilon=ups)


def draw_partial_potentials(
    spec: PartialAntitreeSpec, n: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Potentials per subclass, ordered class 1 then 2 then 3 (k arrays)."""
    r1, r2, r3 = spec.shell_spheres(n)
    k1, k2, k3 = spec.k_vec
    out = []
    for r, kj in ((r1, k1), (r2, k2), (r3, k3)):
        for _ in range(kj):
            out.append(spec.disorder.sample(rng, r // kj))
    return out


def partial_coeffs_from_potentials(spec: PartialAntitreeSpec, pots, lam: float):
    """Exact k x k reduction of one shell from its subclass potentials."""
    recips = []
    for arr in pots:
        vals = 1.0 / (np.asarray(arr) - lam)
        recips.append(float(np.mean(vals)))
    vhat = 1.0 / np.array(recips)
    M = np.diag(vhat) + spec.coupling
    try:
        sol = np.linalg.solve(M, np.column_stack([spec.pattern_ups, spec.pattern_phi]))
    except np.linalg.LinAlgError as exc:
        raise ChannelSingular("kxk_singular", lam, n=None) from exc
    alpha = float(spec.pattern_ups @ sol[:, 0])
    beta = float(spec.pattern_ups @ sol[:, 1])
    delta = float(spec.pattern_phi @ sol[:, 1])
    return alpha, beta, delta


def sample_shell_partial(
    spec: PartialAntitreeSpec, n: int, lam: float, rng: np.random.Generator
) -> ShellSample:
    """Draw one homogeneous-modes shell via the k x k reduction."""
    lo, hi = spec.disorder.hull
    if lo <= lam <= hi:
        raise SupportViolation(f"lambda = {lam} inside the support hull [{lo}, {hi}]")
    pots = draw_partial_potentials(spec, n, rng)
    alpha, beta, delta = partial_coeffs_from_potentials(spec, pots, lam)
    if abs(beta) < 1e-14:
        raise ChannelSingular("beta_zero", lam, n)
    T = transfer_from_coeffs(-1.0, alpha, beta, beta, delta, lam, n, note="sampled")
    return ShellSample(n=n, lam=float(lam), alpha=float(alpha), beta=float(beta),
                       delta=float(delta), transfer=T)


def build_pattern_isometry(spec: PartialAntitreeSpec, n: int) -> np.ndarray:
    """The #S_n x k isometry distributing pattern modes over subclasses."""
    r1, r2, r3 = spec.shell_spheres(n)
    k1, k2, k3 = spec.k_vec
    dim = r1 + r2 + r3
    On = np.zeros((dim, spec.k))
    row = 0
    pat = 0
    for r, kj in ((r1, k1), (r2, k2), (r3, k3)):
        if kj == 0:
            continue
        size = r // kj
        for ell in range(kj):
            On[row: row + size, :] = math.sqrt(kj / r) * spec.O[pat + ell, :]
            row += size
        pat += kj
    return On


def partial_shell_from_potentials(
    spec: PartialAntitreeSpec, n: int, pots
) -> ShellData:
    """Explicit dense shell for the oracle: pattern coupling plus potentials."""
    r1, r2, r3 = spec.shell_spheres(n)
    On = build_pattern_isometry(spec, n)
    V = On @ np.diag(spec.a_diag) @ On.T + np.diag(np.concatenate(pots))
    dim = r1 + r2 + r3
    ups = np.zeros(dim)
    ups[:r1] = 1.0 / math.sqrt(r1)
    fwd = np.zeros(dim)
    fwd[dim - r3:] = 1.0 / math.sqrt(r3)
    return ShellData(n=n, V=V, a=-1.0, Phi=fwd, Upsilon=ups)


# ---------------------------------------------------------------------------
# vectorized random products over an energy grid
# ---------------------------------------------------------------------------


def stretched_step_matrices(
    disorder: DisorderSpec, s: int, lams: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """One sampled shell's transfer matrices over a whole energy grid.

    The potential draw is shared across the grid (the disorder does not
    depend on the energy); discrete disorder uses pair-value counts.
    """
    lams = np.asarray(lams, dtype=float)
    if disorder.kind == "discrete":
        p, pp, probs = _pair_values(disorder)
        counts = rng.multinomial(s, probs)
        D = (p[:, None] - lams) * (pp[:, None] - lams) - 1.0
        if np.min(np.abs(D[counts > 0])) < DENOM_GUARD:
            raise DenominatorBlowup("pair denominator inside the guard on the grid")
        w = counts / s
        alpha = w @ ((pp[:, None] - lams) / D)
        beta = -(w @ (1.0 / D))
        delta = w @ ((p[:, None] - lams) / D)
    else:
        alpha = np.zeros(len(lams))
        beta = np.zeros(len(lams))
        delta = np.zeros(len(lams))
        chunk = max(1, int(2e6 // max(len(lams), 1)))
        done = 0
        while done < s:
            m = min(chunk, s - done)
            om = disorder.sample(rng, m)[:, None]
            omp = disorder.sample(rng, m)[:, None]
            D = (om - lams) * (omp - lams) - 1.0
            if np.min(np.abs(D)) < DENOM_GUARD:
                raise DenominatorBlowup("pair denominator inside the guard on the grid")
            alpha += np.sum((omp - lams) / D, axis=0)
            beta -= np.sum(1.0 / D, axis=0)
            delta += np.sum((om - lams) / D, axis=0)
            done += m
        alpha, beta, delta = alpha / s, beta / s, delta / s
    mats = np.empty((len(lams), 2, 2))
    mats[:, 0, 0] = -1.0 / beta
    mats[:, 0, 1] = alpha / beta
    mats[:, 1, 0] = -delta / beta
    mats[:, 1, 1] = -beta + delta * alpha / beta
    return mats


def random_transfer_integrals(
    step_sampler: Callable[[int, np.ndarray, np.random.Generator], np.ndarray],
    p: float,
    interval: tuple[float, float],
    n_list: Sequence[int],
    rng: np.random.Generator,
    n_points: int = 257,
):
    """Quenched transfer-norm integrals I_n for one disorder realization.

    step_sampler(n, grid, rng) must return the (G, 2, 2) step matrices of
    shell n over the grid.  Returns the same result type as the
    operator-based criterion in the spectral module.
    """
    from .spectral import ACCriterionResult, ac_verdict

    a, b = interval
    n_list = np.asarray(sorted(int(n) for n in n_list), dtype=int)
    xs = a + (np.arange(n_points) + 0.5) * (b - a) / n_points
    mats = np.tile(np.eye(2), (n_points, 1, 1))
    logs = np.zeros(n_points)
    wlog = math.log((b - a) / n_points)
    logs_I = []
    done = 0
    for n in n_list:
        for k in range(done + 1, n + 1):
            step = step_sampler(k, xs, rng)
            mats = np.einsum("gij,gjk->gik", step, mats)
            scale = np.max(np.abs(mats), axis=(1, 2))
            mats /= scale[:, None, None]
            logs += np.log(scale)
        done = int(n)
        vals = p * (np.log(spectral_norms(mats)) + logs) + wlog
        m = float(np.max(vals))
        logs_I.append(m + math.log(float(np.sum(np.exp(vals - m)))))
    logs_I = np.array(logs_I)
    verdict, tail_min = ac_verdict(n_list, logs_I)
    return ACCriterionResult(
        p=p, interval=(float(a), float(b)), n_list=n_list, log_integrals=logs_I,
        liminf_proxy=tail_min, verdict=verdict,
    )


# ---------------------------------------------------------------------------
# convergence diagnostics
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class WellBalancedReport:
    sizes: np.ndarray
    moments: dict  # k -> per-size E|X_n - X|^k
    slopes: dict  # k -> fitted log-log slope (None when deviations vanish)
    mean_devs: np.ndarray
    mean_slope: float | None
    passed: bool
    notes: list[str] = field(default_factory=list)


def well_balanced_check(
    sampler: Callable[[int, int, np.random.Generator], np.ndarray],
    limit: complex,
    sizes: Sequence[int],
    K: int = 2,
    trials: int = 2000,
    rng: np.random.Generator | None = None,
    slope_tol: float = 0.15,
    mean_tol: float = 0.3,
) -> WellBalancedReport:
    """Moment-wise convergence-rate regression against the size sequence.

    sampler(size, trials, rng) returns trials draws of the size-indexed
    statistic.  Passes when the fitted slope of log E|X_n - X|^k against
    log s_n is within slope_tol of -k/2 for each k <= 2K, and the mean
    deviation |E X_n - X| decays with slope -1 (mean_tol); an identically
    unbiased statistic (mean deviation within noise) passes that part.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    sizes = np.asarray(sorted(int(s) for s in sizes), dtype=int)
    ks = list(range(1, 2 * K + 1))
    moments = {k: np.zeros(len(sizes)) for k in ks}
    mean_devs = np.zeros(len(sizes))
    mean_noise = np.zeros(len(sizes))
    for i, s in enumerate(sizes):
        draws = np.asarray(sampler(int(s), trials, rng))
        dev = draws - limit
        for k in ks:
            moments[k][i] = float(np.mean(np.abs(dev) ** k))
        mean_devs[i] = abs(complex(np.mean(dev)))
        mean_noise[i] = float(np.std(dev) / math.sqrt(len(dev)))
    notes: list[str] = []
    slopes: dict = {}
    logs = np.log(sizes.astype(float))
    ok = True
    for k in ks:
        if np.max(moments[k]) == 0.0:
            slopes[k] = None
            notes.append(f"k={k}: deterministic (all deviations zero)")
            continue
        slope = float(np.polyfit(logs, np.log(moments[k]), 1)[0])
        slopes[k] = slope
        if abs(slope - (-k / 2.0)) > slope_tol:
            ok = False
            notes.append(f"k={k}: slope {slope:.3f} outside -{k / 2} +- {slope_tol}")
    if np.all(mean_devs <= 4.0 * mean_noise):
        mean_slope = None
        notes.append("mean deviation within Monte-Carlo noise (unbiased)")
    elif np.max(mean_devs) == 0.0:
        mean_slope = None
        notes.append("mean deviation identically zero")
    else:
        mean_slope = float(np.polyfit(logs, np.log(np.maximum(mean_devs, 1e-300)), 1)[0])
        if abs(mean_slope - (-1.0)) > mean_tol:
            ok = False
            notes.append(f"mean-deviation slope {mean_slope:.3f} outside -1 +- {mean_tol}")
    return WellBalancedReport(
        sizes=sizes, moments=moments, slopes=slopes, mean_devs=mean_devs,
        mean_slope=mean_slope, passed=ok, notes=notes,
    )


# ---------------------------------------------------------------------------
# elliptic conjugation and the fourth-moment product bound
# ---------------------------------------------------------------------------


def elliptic_conjugation(T: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, float]:
    """Real basis conjugating an elliptic matrix to a rotation.

    T must be real with det 1 and |trace| < 2.  B has determinant 1 and
    columns from the real and imaginary parts of the complex eigenvector;
    returns (B, f) with f = cond(B) = ||B|| ||B^-1||.
    """
    T = np.asarray(T)
    if np.iscomplexobj(T):
        if np.max(np.abs(T.imag)) > tol * max(1.0, float(np.max(np.abs(T)))):
            raise NotElliptic(complex(np.trace(T)))
        T = T.real
    det = float(T[0, 0] * T[1, 1] - T[0, 1] * T[1, 0])
    if abs(det - 1.0) > 1e-6:
        raise NotElliptic(float(np.trace(T)))
    tr = float(np.trace(T))
    if abs(tr) >= 2.0:
        raise NotElliptic(tr)
    w, v = np.linalg.eig(T)
    idx = int(np.argmax(w.imag))
    vec = v[:, idx]
    B = np.column_stack([vec.real, vec.imag])
    detB = float(B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0])
    if detB < 0:
        B = np.column_stack([vec.real, -vec.imag])
        detB = -detB
    B = B / math.sqrt(detB)
    R = np.linalg.solve(B, T @ B)
    if np.max(np.abs(R.T @ R - np.eye(2))) > 1e-10:
        raise NotElliptic(tr)
    return B, float(np.linalg.cond(B))


@dataclass(eq=False)
class MomentBoundReport:
    T: np.ndarray
    f: float
    C: float
    bound: float
    ns: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray
    passed: bool
    notes: list[str] = field(default_factory=list)


def moment_bound_check(
    T: np.ndarray,
    noise_sampler: Callable[[int, int, np.random.Generator], np.ndarray],
    n_max: int,
    trials: int,
    rng: np.random.Generator,
    checkpoints: Sequence[int] | None = None,
    c_trials: int = 2000,
) -> MomentBoundReport:
    """Monte-Carlo fourth moment of noisy elliptic products versus the
    closed-form bound (2f)^4 exp(8 f C).

    noise_sampler(n, trials, rng) returns (trials, 2, 2) draws of the shell
    deviation W_n; C sums ||E W_n|| + E(||W_n||^2 + ||W_n||^4) over shells,
    estimated from independent draws.  Products accumulate to the left.
    """
    B, f = elliptic_conjugation(T)
    C = 0.0
    for n in range(1, n_max + 1):
        W = np.asarray(noise_sampler(n, c_trials, rng))
        mean_norm = float(spectral_norms(np.mean(W, axis=0)[None])[0])
        norms = spectral_norms(W)
        C += mean_norm + float(np.mean(norms**2)) + float(np.mean(norms**4))
    log_bound = 4.0 * math.log(2.0 * f) + 8.0 * f * C
    # the analytic bound is finite whenever C is, but can overflow doubles
    bound = math.exp(log_bound) if log_bound < 700.0 else math.inf
    notes = [] if math.isfinite(bound) else [
        f"bound overflows double precision (log bound {log_bound:.1f}); comparison is vacuous"
    ]

    if checkpoints is None:
        raw = np.unique(np.round(np.geomspace(1, n_max, 25)).astype(int))
        checkpoints = raw.tolist()
    checkpoints = sorted(set(int(c) for c in checkpoints))
    mats = np.tile(np.eye(2), (trials, 1, 1))
    logs = np.zeros(trials)
    ns, ests, ses = [], [], []
    for n in range(1, n_max + 1):
        steps = T[None, :, :] + np.asarray(noise_sampler(n, trials, rng))
        mats = np.einsum("tij,tjk->tik", steps, mats)
        scale = np.max(np.abs(mats), axis=(1, 2))
        mats /= scale[:, None, None]
        logs += np.log(scale)
        if n in checkpoints:
            vals = np.exp(4.0 * (logs + np.log(spectral_norms(mats))))
            ns.append(n)
            ests.append(float(np.mean(vals)))
            ses.append(float(np.std(vals) / math.sqrt(trials)))
    ns = np.array(ns)
    ests = np.array(ests)
    ses = np.array(ses)
    passed = bool(np.all(ests + 3.0 * ses < bound))
    return MomentBoundReport(
        T=np.asarray(T, dtype=float), f=f, C=C, bound=bound,
        ns=ns, estimates=ests, stderrs=ses, passed=passed, notes=notes,
    )


def stretched_noise_sampler(
    spec: StretchedAntitreeSpec, lam: float, limit: LimitTransfer | None = None
) -> Callable[[int, int, np.random.Generator], np.ndarray]:
    """Per-shell deviation sampler W_n = T_{lam,n} - T(lam), vectorized
    over trials, for the stretched family with discrete disorder."""
    if limit is None:
        limit = limit_transfer_stretched(spec.disorder, lam)
    T = limit.matrix

    def draw(n: int, trials: int, rng: np.random.Generator) -> np.ndarray:
        s = spec.s_n(n)
        if spec.disorder.kind == "discrete":
            alpha, beta, delta = _stretched_coeffs_counts(
                spec.disorder, s, lam, rng, trials=trials
            )
        else:
            om = spec.disorder.sample(rng, (trials, s))
            omp = spec.disorder.sample(rng, (trials, s))
            D = (om - lam) * (omp - lam) - 1.0
            if np.min(np.abs(D)) < DENOM_GUARD:
                raise DenominatorBlowup("pair denominator inside the guard")
            alpha = np.mean((omp - lam) / D, axis=1)
            beta = -np.mean(1.0 / D, axis=1)
            delta = np.mean((om - lam) / D, axis=1)
        mats = np.empty((trials, 2, 2))
        mats[:, 0, 0] = -1.0 / beta
        mats[:, 0, 1] = alpha / beta
        mats[:, 1, 0] = -delta / beta
        mats[:, 1, 1] = -beta + delta * alpha / beta
        return mats - T[None, :, :]

    return draw


def stretched_statistic_sampler(
    disorder: DisorderSpec, lam: float, statistic: str = "beta"
) -> Callable[[int, int, np.random.Generator], np.ndarray]:
    """Vectorized sampler of one stretched channel coefficient by shell size.

    Returns sampler(size, trials, rng) -> (trials,) draws, for feeding
    well_balanced_check against the matching limit value.
    """
    idx = {"alpha": 0, "beta": 1, "delta": 2}
    if statistic not in idx:
        raise ConfigError("statistic", f"unknown statistic {statistic!r}")
    stretched_domain(disorder, lam)

    def draw(size: int, trials: int, rng: np.random.Generator) -> np.ndarray:
        if disorder.kind == "discrete":
            vals = _stretched_coeffs_counts(disorder, size, lam, rng, trials=trials)
        else:
            om = disorder.sample(rng, (trials, size))
            omp = disorder.sample(rng, (trials, size))
            D = (om - lam) * (omp - lam) - 1.0
            if np.min(np.abs(D)) < DENOM_GUARD:
                raise DenominatorBlowup("pair denominator inside the guard")
            vals = (
                np.mean((omp - lam) / D, axis=1),
                -np.mean(1.0 / D, axis=1),
                np.mean((om - lam) / D, axis=1),
            )
        return vals[idx[statistic]]

    return draw


# ---------------------------------------------------------------------------
# explicit-operator builders (moderate sizes) for the generic machinery
# ---------------------------------------------------------------------------


def stretched_operator(
    spec: StretchedAntitreeSpec, seed: int, n_max: int | None = None
) -> OneChannelOperator:
    """Materialized random operator with explicit 2 s_n shells.

    Shell draws use counter-based substreams of the seed, so shell n is the
    same no matter the access order.
    """

    def factory(n: int) -> ShellData:
        rng = np.random.default_rng([seed, 11, n])
        s = spec.s_n(n)
        om = spec.disorder.sample(rng, s)
        omp = spec.disorder.sample(rng, s)
        return stretched_shell_from_pairs(n, om, omp)

    return OneChannelOperator(factory, geometry="half", n_max=n_max)


def partial_operator(
    spec: PartialAntitreeSpec, seed: int, n_max: int | None = None
) -> OneChannelOperator:
    """Materialized random operator with explicit pattern shells."""

    def factory(n: int) -> ShellData:
        rng = np.random.default_rng([seed, 13, n])
        pots = draw_partial_potentials(spec, n, rng)
        return partial_shell_from_potentials(spec, n, pots)

    return OneChannelOperator(factory, geometry="half", n_max=n_max)


def _build_stretched(d: dict) -> OneChannelOperator:
    spec = StretchedAntitreeSpec(
        s=d.get("s", "const:s=4"), disorder=disorder_from_dict(d["disorder"])
    )
    return stretched_operator(spec, int(d.get("seed", 0)), d.get("N"))


def _build_partial(d: dict) -> OneChannelOperator:
    spec = PartialAntitreeSpec(
        k_vec=tuple(d["k_vec"]),
        O=np.array(d["O"], dtype=float),
        a_diag=np.array(d["a_diag"], dtype=float),
        r=d.get("r", "const:s=4"),
        disorder=disorder_from_dict(d["disorder"]),
    )
    return partial_operator(spec, int(d.get("seed", 0)), d.get("N"))


model.MODEL_BUILDERS["stretched_antitree"] = _build_stretched
model.MODEL_BUILDERS["partial_antitree"] = _build_partial


def hat_pattern_spec(disorder: DisorderSpec, r="const:s=4") -> PartialAntitreeSpec:
    """The 6-mode reference pattern: three classes of two modes, coupling
    [[0,1,0],[1,0,1],[0,1,0]] in 2 x 2 blocks."""
    coupling = np.zeros((6, 6))
    coupling[0:2, 2:4] = np.eye(2)
    coupling[2:4, 0:2] = np.eye(2)
    coupling[2:4, 4:6] = np.eye(2)
    coupling[4:6, 2:4] = np.eye(2)
    w, O = np.linalg.eigh(coupling)
    return PartialAntitreeSpec(
        k_vec=(2, 2, 2), O=O, a_diag=w, r=r, disorder=disorder
    )

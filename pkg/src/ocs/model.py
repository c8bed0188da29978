"""Shell decompositions and one-channel block operators.

A one-channel operator acts on a direct sum of finite-dimensional shell
spaces.  Shell n carries a Hermitian block V_n and two unit channel
vectors Phi_n, Upsilon_n; the coupling between shells n-1 and n is the
rank-one block D_n = -a_n Upsilon_n Phi_{n-1}^* with a real scalar a_n.
On block vectors Psi = (Psi_n)_n the action is

    (H Psi)_n = -a_{n+1} Phi_n Upsilon_{n+1}^* Psi_{n+1}
                - a_n Upsilon_n Phi_{n-1}^* Psi_{n-1} + V_n Psi_n,

with a Dirichlet wall (Psi_0 = 0) in the half-line geometry.  This module
holds the data model, graph-to-shell construction, dense truncations and
the cyclic-subspace utilities used by the transfer-matrix layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BrokenChannel,
    DanglingComponent,
    NotOneChannel,
    StructureError,
)

HERMITIAN_TOL = 1e-12
UNIT_TOL = 1e-10
RANK_TOL = 1e-10


def _as_complex_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise StructureError(f"shell block must be square, got shape {M.shape}")
    return M


def _as_unit_vector(v, name: str, dim: int) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.shape[0] != dim:
        raise StructureError(f"{name} has length {v.shape[0]}, expected {dim}")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > UNIT_TOL:
        raise StructureError(f"{name} is not a unit vector (norm {nrm!r})")
    return v


@dataclass(eq=False)
class ShellData:
    """Immutable data of one shell: block V, coupling scalar a, channel vectors.

    ``a`` is the scalar of the rank-one block coupling this shell to its left
    neighbour.  ``Upsilon`` is the incoming channel (hit by the left coupling),
    ``Phi`` the outgoing one (hit by the right coupling).  Instances are
    treated as immutable after construction; the cached eigendecomposition
    makes repeated resolvent evaluations cheap.
    """

    n: int
    V: np.ndarray
    a: float
    Phi: np.ndarray
    Upsilon: np.ndarray

    def __post_init__(self):
        self.V = _as_complex_matrix(self.V)
        scale = max(1.0, float(np.linalg.norm(self.V)))
        if np.linalg.norm(self.V - self.V.conj().T) > HERMITIAN_TOL * scale:
            raise StructureError(f"shell {self.n}: V is not Hermitian")
        self.a = float(self.a)
        if self.a == 0.0:
            raise StructureError(f"shell {self.n}: coupling scalar a must be nonzero")
        self.Phi = _as_unit_vector(self.Phi, f"shell {self.n}: Phi", self.V.shape[0])
        self.Upsilon = _as_unit_vector(
            self.Upsilon, f"shell {self.n}: Upsilon", self.V.shape[0]
        )

    @property
    def dim(self) -> int:
        return self.V.shape[0]

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigendecomposition (w, U) of V with V = U diag(w) U^*."""
        w, U = np.linalg.eigh(self.V)
        return w, U

    @cached_property
    def ups_coeff(self) -> np.ndarray:
        """Eigenbasis coefficients U^* Upsilon."""
        _, U = self.eig
        return U.conj().T @ self.Upsilon

    @cached_property
    def phi_coeff(self) -> np.ndarray:
        """Eigenbasis coefficients U^* Phi."""
        _, U = self.eig
        return U.conj().T @ self.Phi

    @cached_property
    def eigenvalue_groups(self) -> list[np.ndarray]:
        """Indices of numerically coincident eigenvalues, ascending."""
        w, _ = self.eig
        scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
        groups: list[list[int]] = []
        for j, lam in enumerate(w):
            if groups and abs(lam - w[groups[-1][-1]]) <= 1e-10 * scale:
                groups[-1].append(j)
            else:
                groups.append([j])
        return [np.array(g) for g in groups]

    def channel_broken(self, tol: float = 1e-12) -> bool:
        """True when Upsilon^* P_i Phi = 0 for every eigenprojection P_i."""
        uc, pc = self.ups_coeff, self.phi_coeff
        for g in self.eigenvalue_groups:
            if abs(np.vdot(uc[g], pc[g])) > tol:
                return False
        return True


class OneChannelOperator:
    """Lazy, cached sequence of shells with half- or full-line geometry.

    Shells are produced by a pure factory keyed on the shell index, so
    random models are reproducible functions of (seed, n) and instances may
    be shared between threads; the cache is append-only.
    """

    def __init__(
        self,
        factory: Callable[[int], ShellData],
        geometry: str = "half",
        n_min: int | None = None,
        n_max: int | None = None,
        label: str = "",
    ):
        if geometry not in ("half", "full"):
            raise StructureError(f"geometry must be 'half' or 'full', got {geometry!r}")
        self.geometry = geometry
        self._factory = factory
        self.n_min = 1 if geometry == "half" else n_min
        self.n_max = n_max
        self.label = label
        self._cache: dict[int, ShellData] = {}

    def _check_index(self, n: int):
        if self.n_min is not None and n < self.n_min:
            raise StructureError(f"shell index {n} below the first shell {self.n_min}")
        if self.n_max is not None and n > self.n_max:
            raise StructureError(f"shell index {n} beyond the last shell {self.n_max}")

    def shell(self, n: int) -> ShellData:
        self._check_index(n)
        got = self._cache.get(n)
        if got is None:
            got = self._factory(n)
            if got.n != n:
                raise StructureError(
                    f"factory returned shell labelled {got.n} for index {n}"
                )
            got = self._validated(got)
            self._cache[n] = got
        return got

    def _validated(self, shell: ShellData) -> ShellData:
        left = self._cache.get(shell.n - 1)
        if left is not None and shell.n > (self.n_min or shell.n):
            pass  # dims of neighbouring shells are free; coupling is rank one by type
        return shell

    def a(self, n: int) -> float:
        return self.shell(n).a

    def coeffs(self, n: int, z: complex):
        """Transfer coefficients (a_n, alpha, beta, gamma, delta) at z."""
        from . import transfer

        g = transfer.g_matrix(self.shell(n), z)
        return self.a(n), g.alpha, g.beta, g.gamma, g.delta

    def coeff_sweep(self, n: int, zs: np.ndarray):
        """Vectorized coefficients over an energy grid."""
        from . import transfer

        return transfer.coefficient_sweep(self.shell(n), zs)

    def real_singular_energies(self, n: int, lo: float, hi: float) -> list[float]:
        from . import transfer

        pts = transfer.singular_set(self.shell(n)).points
        return [p.z.real for p in pts if abs(p.z.imag) < 1e-12 and lo <= p.z.real <= hi]

    def validate_window(self, n_lo: int, n_hi: int):
        """Check adjacency dimensions and unbroken channels over a window."""
        for n in range(n_lo, n_hi + 1):
            sh = self.shell(n)
            if sh.channel_broken():
                raise BrokenChannel(n)
            if n > n_lo:
                prev = self.shell(n - 1)
                if prev.dim != len(prev.Phi):
                    raise StructureError(f"shell {n - 1}: inconsistent Phi length")
        return True


def operator_from_shells(
    shells: Sequence[ShellData] | Mapping[int, ShellData],
    geometry: str = "half",
    n_lo: int = 1,
) -> OneChannelOperator:
    """Wrap explicit shells.  Sequences are indexed n_lo, n_lo+1, ..."""
    if isinstance(shells, Mapping):
        table = dict(shells)
    else:
        table = {n_lo + i: s for i, s in enumerate(shells)}
    for n, s in table.items():
        if s.n != n:
            raise StructureError(f"shell labelled {s.n} stored at index {n}")
    lo, hi = min(table), max(table)
    if set(table) != set(range(lo, hi + 1)):
        raise StructureError("shell indices must be contiguous")
    if geometry == "half" and lo != 1:
        raise StructureError("half-line operators start at shell 1")

    def factory(n: int) -> ShellData:
        return table[n]

    return OneChannelOperator(factory, geometry=geometry, n_min=lo, n_max=hi)


def _per_index(spec, n: int, default=None):
    if callable(spec):
        return spec(n)
    if isinstance(spec, (list, tuple, np.ndarray)):
        return spec[n - 1]
    if spec is None:
        return default
    return spec


def jacobi_operator(
    v=0.0,
    a=-1.0,
    n_max: int | None = None,
    geometry: str = "half",
) -> OneChannelOperator:
    """Scalar-shell operator: tridiagonal matrix with diagonal v_n, offdiagonal -a_n.

    ``v`` and ``a`` may be scalars, sequences (indexed from shell 1) or
    callables of the shell index.  ``a = -1`` gives offdiagonal entries +1,
    the standard discrete Laplacian normalization.
    """

    def factory(n: int) -> ShellData:
        return ShellData(
            n=n,
            V=np.array([[_per_index(v, n)]], dtype=complex),
            a=_per_index(a, n),
            Phi=np.array([1.0 + 0j]),
            Upsilon=np.array([1.0 + 0j]),
        )

    n_min = 1 if geometry == "half" else None
    return OneChannelOperator(factory, geometry=geometry, n_min=n_min, n_max=n_max)


def random_one_channel(
    seed: int,
    s_range: tuple[int, int] = (1, 5),
    a_range: tuple[float, float] = (0.5, 2.0),
    complex_entries: bool = True,
    fixed_a: float | None = None,
    v_scale: float = 1.0,
    n_max: int | None = None,
    geometry: str = "half",
) -> OneChannelOperator:
    """Reproducible random operator; every shell is a pure function of (seed, n)."""

    def factory(n: int) -> ShellData:
        for attempt in range(8):
            rng = np.random.default_rng([seed, n & 0xFFFFFFFF, attempt])
            s = int(rng.integers(s_range[0], s_range[1] + 1))
            A = rng.standard_normal((s, s))
            if complex_entries:
                A = A + 1j * rng.standard_normal((s, s))
            V = v_scale * (A + A.conj().T) / (2.0 * np.sqrt(s))
            phi = rng.standard_normal(s) + (1j * rng.standard_normal(s) if complex_entries else 0)
            ups = rng.standard_normal(s) + (1j * rng.standard_normal(s) if complex_entries else 0)
            phi = phi / np.linalg.norm(phi)
            ups = ups / np.linalg.norm(ups)
            a = fixed_a if fixed_a is not None else -float(rng.uniform(*a_range))
            shell = ShellData(n=n, V=V, a=a, Phi=phi, Upsilon=ups)
            if not shell.channel_broken():
                return shell
        raise BrokenChannel(n)

    n_min = 1 if geometry == "half" else None
    return OneChannelOperator(factory, geometry=geometry, n_min=n_min, n_max=n_max)


# ---------------------------------------------------------------------------
# graph -> shells
# ---------------------------------------------------------------------------


def _neighbour_table(adjacency) -> dict:
    """Normalize an adjacency (dict, dense array, sparse matrix) to node->set."""
    if isinstance(adjacency, Mapping):
        table = {}
        for u, nbrs in adjacency.items():
            table.setdefault(u, set())
            for v in nbrs:
                table[u].add(v)
                table.setdefault(v, set()).add(u)
        return table
    try:
        from scipy import sparse

        if sparse.issparse(adjacency):
            coo = adjacency.tocoo()
            table = {i: set() for i in range(coo.shape[0])}
            for i, j in zip(coo.row, coo.col):
                if i != j:
                    table[i].add(j)
                    table[j].add(i)
            return table
    except ImportError:  # pragma: no cover
        pass
    M = np.asarray(adjacency)
    n = M.shape[0]
    table = {i: set() for i in range(n)}
    for i in range(n):
        for j in range(n):
            if i != j and M[i, j] != 0:
                table[i].add(j)
    return table


def _sorted_nodes(nodes: Iterable) -> list:
    nodes = list(nodes)
    try:
        return sorted(nodes)
    except TypeError:
        return sorted(nodes, key=repr)


def build_partition(adjacency, seed_set, group_sizes: Sequence[int] | None = None):
    """Breadth-first shell partition from a seed set.

    S_1 is the seed set and S_n collects the vertices at graph distance n-1
    from it.  Vertices unreachable from the seed raise DanglingComponent.
    ``group_sizes`` optionally merges consecutive distance shells (the last
    size repeats), which is how couplings that are not rank one on raw
    distance shells — e.g. parallel-edge layer pairs — are regrouped into a
    one-channel partition.
    """
    table = _neighbour_table(adjacency)
    seed = _sorted_nodes(seed_set)
    if not seed:
        raise StructureError("seed set is empty")
    missing = [u for u in seed if u not in table]
    if missing:
        raise StructureError(f"seed vertices not in the graph: {missing[:5]}")

    visited = set(seed)
    frontier = list(seed)
    layers = [list(seed)]
    while frontier:
        nxt = set()
        for u in frontier:
            for v in table[u]:
                if v not in visited:
                    nxt.add(v)
        if not nxt:
            break
        frontier = _sorted_nodes(nxt)
        visited.update(nxt)
        layers.append(frontier)

    unreached = set(table) - visited
    if unreached:
        raise DanglingComponent(_sorted_nodes(unreached))

    if group_sizes is None:
        return layers

    sizes = list(group_sizes)
    if not sizes or any(s < 1 for s in sizes):
        raise StructureError("group sizes must be positive integers")
    grouped = []
    i = 0
    k = 0
    while i < len(layers):
        size = sizes[min(k, len(sizes) - 1)]
        block = []
        for layer in layers[i : i + size]:
            block.extend(layer)
        grouped.append(block)
        i += size
        k += 1
    return grouped


def quasi_spherical_violations(adjacency, partition) -> list[tuple]:
    """Edges whose endpoints are neither in the same nor in adjacent shells."""
    table = _neighbour_table(adjacency)
    where = {}
    for idx, shell in enumerate(partition):
        for u in shell:
            if u in where:
                raise StructureError(f"vertex {u} appears in two shells")
            where[u] = idx
    missing = [u for u in table if u not in where]
    if missing:
        raise StructureError(f"partition misses vertices: {missing[:5]}")
    bad = []
    for u, nbrs in table.items():
        for v in nbrs:
            if u < v if type(u) == type(v) else repr(u) < repr(v):
                if abs(where[u] - where[v]) > 1:
                    bad.append((u, v, where[u], where[v]))
    return bad


def factor_rank_one(D, tol: float = RANK_TOL) -> tuple[float, np.ndarray, np.ndarray]:
    """Factor a numerically rank-one block as D = -a Upsilon Phi^*.

    Canonicalization: a = -sigma_1 < 0, and Phi's phase is fixed so that its
    largest-magnitude entry is positive real; Upsilon absorbs the remaining
    phase.  Raises NotOneChannel when sigma_2 > tol * sigma_1.
    """
    D = np.asarray(D, dtype=complex)
    if D.ndim != 2:
        raise StructureError(f"coupling block must be a matrix, got shape {D.shape}")
    u, s, vh = np.linalg.svd(D)
    if s[0] == 0.0:
        raise NotOneChannel(ratio=np.inf)
    if len(s) > 1 and s[1] > tol * s[0]:
        raise NotOneChannel(ratio=float(s[1] / s[0]))
    v = vh[0].conj()
    k = int(np.argmax(np.abs(v)))
    phase = v[k] / abs(v[k])
    Phi = v / phase
    Upsilon = u[:, 0] / phase
    a = -float(s[0])
    return a, Upsilon, Phi


def operator_from_graph(
    matrix,
    partition: Sequence[Sequence[int]],
    tol: float = RANK_TOL,
) -> OneChannelOperator:
    """Build shells from a Hermitian matrix and a quasi-spherical partition.

    The (n, n-1) blocks must be rank one; their factorization supplies a_n,
    Upsilon_n and Phi_{n-1}.  The first shell uses the a_1 = 1, Upsilon_1 =
    Phi_1 convention (neither enters the half-line operator) and the last
    shell reuses its Upsilon as Phi.
    """
    try:
        from scipy import sparse

        if sparse.issparse(matrix):
            matrix = matrix.toarray()
    except ImportError:  # pragma: no cover
        pass
    M = np.asarray(matrix, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(M)))
    if np.linalg.norm(M - M.conj().T) > HERMITIAN_TOL * scale:
        raise StructureError("matrix is not Hermitian")
    bad = quasi_spherical_violations(M, partition)
    if bad:
        raise StructureError(f"partition is not quasi-spherical: {bad[:3]}")

    idx = [np.array(shell, dtype=int) for shell in partition]
    N = len(idx)
    Vs = [M[np.ix_(ix, ix)] for ix in idx]
    a_list: list[float] = [1.0]
    ups_list: list[np.ndarray | None] = [None] * N
    phi_list: list[np.ndarray | None] = [None] * N
    for n in range(1, N):
        D = M[np.ix_(idx[n], idx[n - 1])]
        a, ups, phi = factor_rank_one(D, tol=tol)
        a_list.append(a)
        ups_list[n] = ups
        phi_list[n - 1] = phi
    if N == 1:
        e = np.zeros(len(idx[0]), dtype=complex)
        e[0] = 1.0
        phi_list[0] = e
    if ups_list[0] is None:
        ups_list[0] = phi_list[0]
    if phi_list[N - 1] is None:
        phi_list[N - 1] = ups_list[N - 1]

    shells = [
        ShellData(n=n + 1, V=Vs[n], a=a_list[n], Phi=phi_list[n], Upsilon=ups_list[n])
        for n in range(N)
    ]
    op = operator_from_shells(shells)
    op.vertex_shells = [list(shell) for shell in partition]
    return op


# ---------------------------------------------------------------------------
# dense truncations and the block action
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class DenseTruncation:
    """Dense H over a shell window with right boundary weight c (and left b)."""

    n_lo: int
    n_hi: int
    c: complex
    b: complex | None
    H: np.ndarray
    offsets: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def block(self, m: int, n: int) -> np.ndarray:
        return self.H[self.offsets[m], self.offsets[n]]

    def embed(self, n: int, vec: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim, dtype=complex)
        out[self.offsets[n]] = vec
        return out


def assemble_dense(
    op: OneChannelOperator,
    N: int,
    c: complex = 0.0,
    b: complex | None = None,
    n_lo: int = 1,
) -> DenseTruncation:
    """Assemble the dense truncation over shells n_lo..N.

    The right boundary subtracts c * Phi_N Phi_N^* on the last shell; the
    optional left parameter subtracts b * a_{n_lo}^2 * Upsilon Upsilon^* on
    the first shell.  With c real (and b real or absent) the result is
    Hermitian.
    """
    if N < n_lo:
        raise StructureError("empty truncation window")
    shells = [op.shell(n) for n in range(n_lo, N + 1)]
    sizes = [s.dim for s in shells]
    starts = np.concatenate([[0], np.cumsum(sizes)])
    dim = int(starts[-1])
    offsets = {
        n_lo + i: slice(int(starts[i]), int(starts[i + 1])) for i in range(len(shells))
    }
    H = np.zeros((dim, dim), dtype=complex)
    for i, sh in enumerate(shells):
        H[offsets[n_lo + i], offsets[n_lo + i]] = sh.V
    for i in range(1, len(shells)):
        sh = shells[i]
        D = -sh.a * np.outer(sh.Upsilon, shells[i - 1].Phi.conj())
        H[offsets[n_lo + i], offsets[n_lo + i - 1]] = D
        H[offsets[n_lo + i - 1], offsets[n_lo + i]] = D.conj().T
    last = shells[-1]
    H[offsets[N], offsets[N]] -= c * np.outer(last.Phi, last.Phi.conj())
    if b is not None:
        first = shells[0]
        H[offsets[n_lo], offsets[n_lo]] -= (
            b * first.a**2 * np.outer(first.Upsilon, first.Upsilon.conj())
        )
    return DenseTruncation(n_lo=n_lo, n_hi=N, c=c, b=b, H=H, offsets=offsets)


def apply_operator(
    op: OneChannelOperator, psi: Mapping[int, np.ndarray]
) -> dict[int, np.ndarray]:
    """Apply H to a finitely supported block vector.

    Output shells range over the support and its neighbours, clipped to the
    operator's materialized window (a Dirichlet wall at shell 0 applies in
    the half-line geometry).
    """
    if not psi:
        return {}
    support = sorted(psi)
    lo, hi = support[0] - 1, support[-1] + 1
    if op.n_min is not None:
        lo = max(lo, op.n_min)
    if op.n_max is not None:
        hi = min(hi, op.n_max)
    out: dict[int, np.ndarray] = {}
    for n in range(lo, hi + 1):
        sh = op.shell(n)
        acc = np.zeros(sh.dim, dtype=complex)
        blk = psi.get(n)
        if blk is not None:
            acc += sh.V @ np.asarray(blk, dtype=complex)
        left = psi.get(n - 1)
        if left is not None and (op.n_min is None or n - 1 >= op.n_min):
            lsh = op.shell(n - 1)
            acc += -sh.a * sh.Upsilon * (lsh.Phi.conj() @ np.asarray(left, dtype=complex))
        if op.n_max is None or n + 1 <= op.n_max:
            right = psi.get(n + 1)
            if right is not None:
                rsh = op.shell(n + 1)
                acc += -rsh.a * sh.Phi * (
                    rsh.Upsilon.conj() @ np.asarray(right, dtype=complex)
                )
        out[n] = acc
    return out


def pack_blocks(op: OneChannelOperator, psi: Mapping[int, np.ndarray], n_lo: int, n_hi: int):
    parts = []
    for n in range(n_lo, n_hi + 1):
        blk = psi.get(n)
        parts.append(
            np.asarray(blk, dtype=complex)
            if blk is not None
            else np.zeros(op.shell(n).dim, dtype=complex)
        )
    return np.concatenate(parts)


def unpack_blocks(op: OneChannelOperator, x: np.ndarray, n_lo: int, n_hi: int):
    out = {}
    pos = 0
    for n in range(n_lo, n_hi + 1):
        d = op.shell(n).dim
        out[n] = np.asarray(x[pos : pos + d], dtype=complex)
        pos += d
    return out


# ---------------------------------------------------------------------------
# essential self-adjointness sufficient condition (advisory)
# ---------------------------------------------------------------------------


@dataclass
class SelfAdjointDiagnostic:
    sum_plus: float
    sum_minus: float | None
    slope_plus: float
    slope_minus: float | None
    verdict: str


def _divergence_slope(partial: np.ndarray, ns: np.ndarray) -> float:
    """Least-squares slope of partial sums against log n over the last half."""
    keep = ns >= max(2, ns[-1] // 2)
    if keep.sum() < 2:
        return 0.0
    x = np.log(ns[keep].astype(float))
    y = partial[keep]
    x = x - x.mean()
    denom = float(x @ x)
    return float(x @ (y - y.mean()) / denom) if denom > 0 else 0.0


def check_self_adjointness(
    op: OneChannelOperator,
    n_max: int,
    threshold: float = 2.0,
    slope_min: float = 0.01,
) -> SelfAdjointDiagnostic:
    """Advisory divergence check of sum 1/|a_n| (both directions when full).

    The sufficient criterion asks the reciprocal coupling sums to diverge;
    numerically we report the partial sums up to n_max and their slope in
    log n, declaring "sufficient-condition-met" when the sum exceeds the
    threshold while still growing.  This is a diagnostic, not a proof.
    """
    ns = np.arange(2, n_max + 1)
    vals = np.array([1.0 / abs(op.a(int(n))) for n in ns])
    partial = np.cumsum(vals)
    sum_plus = float(partial[-1]) if len(partial) else 0.0
    slope_plus = _divergence_slope(partial, ns) if len(partial) else 0.0
    met_plus = sum_plus >= threshold and slope_plus >= slope_min

    sum_minus = slope_minus = None
    met = met_plus
    if op.geometry == "full":
        ms = np.arange(0, n_max + 1)
        mvals = np.array([1.0 / abs(op.a(int(-m))) for m in ms])
        mpartial = np.cumsum(mvals)
        sum_minus = float(mpartial[-1])
        slope_minus = _divergence_slope(mpartial, ms + 2)
        met = met_plus and sum_minus >= threshold and slope_minus >= slope_min

    return SelfAdjointDiagnostic(
        sum_plus=sum_plus,
        sum_minus=sum_minus,
        slope_plus=slope_plus,
        slope_minus=slope_minus,
        verdict="sufficient-condition-met" if met else "not-met",
    )


# ---------------------------------------------------------------------------
# cyclic subspaces
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class CyclicSubspaces:
    """Orthonormal bases of the cyclic spaces of the two channel vectors.

    W is generated by Upsilon, Wt by Phi, Vspan spans their sum and
    ``intersection`` the (numerically decided) common subspace.
    """

    W: np.ndarray
    Wt: np.ndarray
    Vspan: np.ndarray
    intersection: np.ndarray
    tol: float
    resid_w: float
    resid_wt: float


def cyclic_subspaces(V: np.ndarray, vec: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of span{vec, V vec, V^2 vec, ...}.

    Gram-Schmidt with re-orthogonalization; the iteration stops when the
    next power drops below the relative tolerance.
    """
    V = _as_complex_matrix(V)
    v = np.asarray(vec, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        return np.zeros((V.shape[0], 0), dtype=complex)
    scale = max(1.0, float(np.linalg.norm(V)))
    basis = [v / nrm]
    for _ in range(V.shape[0] - 1):
        w = V @ basis[-1]
        for _ in range(2):
            for q in basis:
                w = w - q * np.vdot(q, w)
        nw = np.linalg.norm(w)
        if nw <= tol * scale:
            break
        basis.append(w / nw)
    return np.column_stack(basis)


def _union_basis(A: np.ndarray, B: np.ndarray, tol: float) -> np.ndarray:
    if A.shape[1] == 0:
        return B
    cols = [A[:, j] for j in range(A.shape[1])]
    for j in range(B.shape[1]):
        w = B[:, j]
        for _ in range(2):
            for q in cols:
                w = w - q * np.vdot(q, w)
        nw = np.linalg.norm(w)
        if nw > 100 * tol:
            cols.append(w / nw)
    return np.column_stack(cols)


def cyclic_pair(shell: ShellData, tol: float = RANK_TOL) -> CyclicSubspaces:
    """Cyclic spaces of both channel vectors plus their sum and intersection."""
    W = cyclic_subspaces(shell.V, shell.Upsilon, tol)
    Wt = cyclic_subspaces(shell.V, shell.Phi, tol)
    Vspan = _union_basis(W, Wt, tol)
    if W.shape[1] and Wt.shape[1]:
        S = W.conj().T @ Wt
        u, s, vh = np.linalg.svd(S)
        keep = s >= 1.0 - 1e4 * tol
        inter = W @ u[:, keep]
        if inter.shape[1]:
            q, _ = np.linalg.qr(inter)
            inter = q
    else:
        inter = np.zeros((shell.dim, 0), dtype=complex)

    def _resid(Q: np.ndarray) -> float:
        if Q.shape[1] == 0:
            return 0.0
        VQ = shell.V @ Q
        return float(np.linalg.norm(VQ - Q @ (Q.conj().T @ VQ)))

    return CyclicSubspaces(
        W=W,
        Wt=Wt,
        Vspan=Vspan,
        intersection=inter,
        tol=tol,
        resid_w=_resid(W),
        resid_wt=_resid(Wt),
    )


# ---------------------------------------------------------------------------
# JSON model descriptions (extended by the Anderson module on import)
# ---------------------------------------------------------------------------

MODEL_BUILDERS: dict[str, Callable[[dict], OneChannelOperator]] = {}


def _build_custom(d: dict) -> OneChannelOperator:
    shells = []
    for i, sd in enumerate(d["shells"]):
        shells.append(
            ShellData(
                n=int(sd.get("n", i + 1)),
                V=np.array(sd["V"], dtype=complex),
                a=float(sd["a"]),
                Phi=np.array(sd["Phi"], dtype=complex),
                Upsilon=np.array(sd["Upsilon"], dtype=complex),
            )
        )
    table = {s.n: s for s in shells}
    return operator_from_shells(table, geometry=d.get("geometry", "half"))


def _build_jacobi(d: dict) -> OneChannelOperator:
    def scalar_or_seq(x, default):
        if x is None:
            return default
        if isinstance(x, dict) and "const" in x:
            return float(x["const"])
        if isinstance(x, list):
            return [float(t) for t in x]
        return float(x)

    v = scalar_or_seq(d.get("v"), 0.0)
    a = scalar_or_seq(d.get("a"), -1.0)
    n_max = d.get("N")
    if isinstance(v, list) and n_max is None:
        n_max = len(v)
    return jacobi_operator(v=v, a=a, n_max=n_max, geometry=d.get("geometry", "half"))


MODEL_BUILDERS["custom"] = _build_custom
MODEL_BUILDERS["jacobi"] = _build_jacobi


def operator_from_description(d: dict) -> OneChannelOperator:
    """Build an operator from its JSON description ({"model": kind, ...})."""
    kind = d.get("model")
    if kind not in MODEL_BUILDERS:
        from . import anderson  # noqa: F401  (registers the antitree kinds)
    if kind not in MODEL_BUILDERS:
        raise StructureError(f"unknown model kind {kind!r}")
    return MODEL_BUILDERS[kind](d)

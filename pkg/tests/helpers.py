"""Shared dense oracles for the test suite.

Everything here is deliberately independent of the closed forms under test:
dense assembly plus direct factorization is the reference for resolvent
quantities, and plain BFS is the reference for graph partitions.
"""

import numpy as np
from scipy.linalg import solve

from ocs import model


def random_shell(seed, s=None, real=False):
    rng = np.random.default_rng(seed)
    s = s or int(rng.integers(1, 6))
    A = rng.normal(size=(s, s)) + (0 if real else 1j * rng.normal(size=(s, s)))
    V = (A + A.conj().T) / 2
    phi = rng.normal(size=s) + (0 if real else 1j * rng.normal(size=s))
    ups = rng.normal(size=s) + (0 if real else 1j * rng.normal(size=s))
    return model.ShellData(
        n=1,
        V=V,
        a=float(rng.uniform(0.5, 2.0)) * (-1 if rng.integers(2) else 1),
        Phi=phi / np.linalg.norm(phi),
        Upsilon=ups / np.linalg.norm(ups),
    )


def dense_resolvent(op, N, c, z):
    """(H_{N,c} - z)^{-1} by direct solve, plus the truncation for indexing."""
    dense = model.assemble_dense(op, N, c=c)
    A = dense.H - z * np.eye(dense.H.shape[0])
    G = solve(A, np.eye(A.shape[0], dtype=complex))
    return G, dense


def dense_block(op, N, c, z, m, n):
    G, dense = dense_resolvent(op, N, c, z)
    return G[dense.offsets[m], dense.offsets[n]]


def dense_overlaps(op, N, c, z, m, n):
    """The four channel pairings evaluated on the dense resolvent."""
    G, dense = dense_resolvent(op, N, c, z)
    ups_m = dense.embed(m, op.shell(m).Upsilon)
    phi_m = dense.embed(m, op.shell(m).Phi)
    ups_n = dense.embed(n, op.shell(n).Upsilon)
    phi_n = dense.embed(n, op.shell(n).Phi)
    return {
        "uu": complex(ups_m.conj() @ G @ ups_n),
        "up": complex(ups_m.conj() @ G @ phi_n),
        "pu": complex(phi_m.conj() @ G @ ups_n),
        "pp": complex(phi_m.conj() @ G @ phi_n),
    }


def bfs_layers(edges, seed):
    """Distance layers of an edge-list graph from a seed set."""
    nbr = {}
    for u, v in edges:
        nbr.setdefault(u, set()).add(v)
        nbr.setdefault(v, set()).add(u)
    seen = set(seed)
    layers = [sorted(seed)]
    frontier = list(seed)
    while frontier:
        nxt = sorted({v for u in frontier for v in nbr[u] if v not in seen})
        if not nxt:
            break
        seen.update(nxt)
        layers.append(nxt)
        frontier = nxt
    return layers


def stretched_antitree_graph(s_list):
    """Explicit edge list of the two-band antitree with unit weights.

    Vertices are numbered breadth-first: band n consists of an inner layer
    of size s_n completely joined to an outer layer of size s_n, and each
    outer layer is completely joined to the next inner layer.
    """
    edges = []
    layers = []
    count = 0
    for s in s_list:
        inner = list(range(count, count + s))
        outer = list(range(count + s, count + 2 * s))
        count += 2 * s
        for u in inner:
            for v in outer:
                edges.append((u, v))
        if layers:
            for u in layers[-1]:
                for v in inner:
                    edges.append((u, v))
        layers.append(outer)
    return edges


def three_shell_atom_op():
    """Half-line operator carrying one compactly supported eigenfunction.

    At lam = 0.5: shell 1 has an extendable eigenvalue seen by both channels,
    shell 3 one seen by Upsilon only, and the wall solution propagated across
    shells 1..2 lands exactly on the eigenvector boundary branch of shell 3.
    The eigenfunction lives on shells 1..3 with a vanishing middle block.
    """
    fixed = {
        1: model.ShellData(
            n=1, V=np.diag([0.5, -1.3]).astype(complex), a=1.0,
            Upsilon=np.array([0.8, 0.6], dtype=complex),
            Phi=np.array([0.6, -0.8], dtype=complex),
        ),
        2: model.ShellData(
            n=2, V=np.array([[0.2]], dtype=complex), a=-1.0,
            Upsilon=np.array([1.0 + 0j]), Phi=np.array([1.0 + 0j]),
        ),
        3: model.ShellData(
            n=3, V=np.diag([0.5, 1.7, 2.4]).astype(complex), a=-1.0,
            Upsilon=np.array([0.6, 0.8, 0.0], dtype=complex),
            Phi=np.array([0.0, 0.6, 0.8], dtype=complex),
        ),
    }

    def factory(n):
        if n in fixed:
            return fixed[n]
        return model.ShellData(
            n=n, V=np.array([[0.9 if n % 2 else -0.4]], dtype=complex), a=-1.0,
            Upsilon=np.array([1.0 + 0j]), Phi=np.array([1.0 + 0j]),
        )

    return model.OneChannelOperator(factory, geometry="half"), 0.5

"""Overlapping algebraic partitions, restriction maps and the interface set."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csgraph

from .sparse import DimensionError, SparseMatrix


@dataclass(frozen=True, eq=False)
class OverlapPartition:
    """Owned sets W_{i,0}, extended sets W_{i,delta} and the interface.

    ``interface_local[i]`` holds the positions inside ``interface`` of the
    points that subdomain ``i`` reads as Dirichlet data, i.e. the vertices
    adjacent to ``extended[i]`` but outside it.  ``owned_local[i]`` gives the
    positions of the owned points inside ``extended[i]``.
    """

    m: int
    owned: tuple
    extended: tuple
    overlap_width: int
    interface: np.ndarray
    interface_local: tuple
    owned_local: tuple
    owner: np.ndarray

    @property
    def p(self) -> int:
        return len(self.owned)

    @property
    def n(self) -> int:
        return int(self.interface.size)

    def interface_of(self, i: int) -> np.ndarray:
        """Global indices of Gamma_i."""
        return self.interface[self.interface_local[i]]

    def local_to_global(self, i: int) -> np.ndarray:
        return self.extended[i]


def _as_index_sets(owned, m=None):
    sets = [np.unique(np.asarray(s, dtype=np.int64)) for s in owned]
    if m is None:
        m = int(max((s.max() + 1 for s in sets if s.size), default=0))
    owner = np.full(m, -1, dtype=np.int64)
    for i, s in enumerate(sets):
        if s.size and (s.min() < 0 or s.max() >= m):
            raise ValueError(f"subdomain {i} has indices outside 0..{m - 1}")
        if np.any(owner[s] >= 0):
            raise ValueError(f"subdomain {i} overlaps a previous subdomain")
        owner[s] = i
    if np.any(owner < 0):
        raise ValueError(f"owned sets do not cover row {int(np.flatnonzero(owner < 0)[0])}")
    return sets, owner


def band_partition(m: int, p: int) -> list[np.ndarray]:
    """Contiguous blocks of near-equal size; the first ``m % p`` blocks get one extra row."""
    if p < 1 or p > m:
        raise ValueError(f"band_partition needs 1 <= p <= m (got m={m}, p={p})")
    return [np.asarray(b, dtype=np.int64) for b in np.array_split(np.arange(m), p)]


# greedy graph partition -------------------------------------------------------


def _adjacency(A: SparseMatrix):
    """Symmetrized, diagonal-free adjacency in CSR (indptr, indices)."""
    S = A.to_scipy()
    S = (abs(S) + abs(S.T)).tocsr()
    S.setdiag(0)
    S.eliminate_zeros()
    S.sort_indices()
    return S.indptr, S.indices


def _bfs_distances(indptr, indices, sources, allowed):
    dist = np.full(allowed.size, -1, dtype=np.int64)
    q = deque()
    for s in sources:
        dist[s] = 0
        q.append(s)
    while q:
        v = q.popleft()
        for w in indices[indptr[v] : indptr[v + 1]]:
            if allowed[w] and dist[w] < 0:
                dist[w] = dist[v] + 1
                q.append(w)
    return dist


def _is_connected(indptr, indices, vertices, m):
    if len(vertices) <= 1:
        return True
    allowed = np.zeros(m, dtype=bool)
    allowed[vertices] = True
    d = _bfs_distances(indptr, indices, [vertices[0]], allowed)
    return bool(np.all(d[vertices] >= 0))


def _grow(indptr, indices, comp, k, rng, m, part, first_label):
    """Split one connected component into k connected parts by region growing."""
    allowed = np.zeros(m, dtype=bool)
    allowed[comp] = True
    seeds = [int(comp[rng.integers(comp.size)])]
    # farthest-point seeding spreads the parts over the component
    d = _bfs_distances(indptr, indices, seeds, allowed)
    seeds = [int(comp[np.argmax(d[comp])])]
    for _ in range(1, k):
        d = _bfs_distances(indptr, indices, seeds, allowed)
        seeds.append(int(comp[np.argmax(d[comp])]))
    sizes = np.zeros(k, dtype=np.int64)
    queues = [deque([s]) for s in seeds]
    for j, s in enumerate(seeds):
        part[s] = first_label + j
        sizes[j] = 1
    for j, s in enumerate(seeds):
        queues[j] = deque(w for w in indices[indptr[s] : indptr[s + 1]] if allowed[w])
    remaining = comp.size - k
    while remaining:
        live = [j for j in range(k) if queues[j]]
        if not live:
            break
        j = min(live, key=lambda t: (sizes[t], t))
        while queues[j]:
            v = queues[j].popleft()
            if part[v] < 0:
                part[v] = first_label + j
                sizes[j] += 1
                remaining -= 1
                queues[j].extend(
                    w for w in indices[indptr[v] : indptr[v + 1]] if allowed[w] and part[w] < 0
                )
                break


def _rebalance(indptr, indices, part, labels, target, m, max_moves):
    """Move boundary vertices from oversized to undersized neighbours, keeping parts connected."""
    sizes = {lab: int(np.sum(part == lab)) for lab in labels}
    lo, hi = 0.8 * target, 1.2 * target
    moves = 0
    while moves < max_moves:
        big = max(labels, key=lambda lab: (sizes[lab], -lab))
        small = min(labels, key=lambda lab: (sizes[lab], lab))
        if sizes[big] <= hi and sizes[small] >= lo:
            return
        # donor: largest part bordering some smaller part
        moved = False
        for donor in sorted(labels, key=lambda lab: (-sizes[lab], lab)):
            members = np.flatnonzero(part == donor)
            candidates = []
            for v in members:
                for w in indices[indptr[v] : indptr[v + 1]]:
                    lab = part[w]
                    if lab != donor and lab in sizes and sizes[lab] < sizes[donor] - 1:
                        candidates.append((sizes[lab], int(v), int(lab)))
                        break
            for _, v, lab in sorted(candidates):
                rest = members[members != v]
                if _is_connected(indptr, indices, rest, m):
                    part[v] = lab
                    sizes[donor] -= 1
                    sizes[lab] += 1
                    moved = True
                    break
            if moved:
                break
        if not moved:
            return
        moves += 1


def greedy_graph_partition(A: SparseMatrix, p: int, seed: int = 0) -> list[np.ndarray]:
    """Deterministic BFS region-growing partition of the adjacency graph of ``A``."""
    if A.nrows != A.ncols:
        raise DimensionError("greedy_graph_partition needs a square matrix")
    m = A.nrows
    if p < 1 or p > m:
        raise ValueError(f"need 1 <= p <= m (got m={m}, p={p})")
    indptr, indices = _adjacency(A)
    rng = np.random.default_rng(seed)
    ncomp, comp_label = csgraph.connected_components(
        _csr(indptr, indices, m), directed=False
    )
    comps = [np.flatnonzero(comp_label == c) for c in range(ncomp)]
    comps.sort(key=lambda c: (-c.size, c[0]))
    part = np.full(m, -1, dtype=np.int64)
    if ncomp >= p:
        # whole components, largest first onto the currently smallest part
        loads = np.zeros(p, dtype=np.int64)
        for c in comps:
            j = int(np.argmin(loads))
            part[c] = j
            loads[j] += c.size
        return [np.flatnonzero(part == j) for j in range(p)]
    # share parts among components in proportion to their size (at least one each)
    counts = np.ones(ncomp, dtype=np.int64)
    for _ in range(p - ncomp):
        ratio = np.array([c.size for c in comps]) / counts
        counts[int(np.argmax(ratio))] += 1
    label = 0
    for c, k in zip(comps, counts):
        labels = list(range(label, label + k))
        if k == 1:
            part[c] = label
        else:
            _grow(indptr, indices, c, int(k), rng, m, part, label)
            _rebalance(indptr, indices, part, labels, c.size / k, m, max_moves=4 * c.size)
        label += k
    if np.any(part < 0):
        raise RuntimeError("greedy partition left vertices unassigned")
    return [np.flatnonzero(part == j) for j in range(p)]


def _csr(indptr, indices, m):
    import scipy.sparse as sps

    return sps.csr_matrix((np.ones(indices.size), indices, indptr), shape=(m, m))


# overlap ------------------------------------------------------------------


def extend_overlap(A: SparseMatrix, owned, delta: int) -> OverlapPartition:
    """Grow every owned set by ``delta`` layers of neighbours and locate the interface."""
    if A.nrows != A.ncols:
        raise DimensionError("extend_overlap needs a square matrix")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    m = A.nrows
    sets, owner = _as_index_sets(owned, m)
    extended, boundaries = [], []
    for s in sets:
        inside = np.zeros(m, dtype=bool)
        inside[s] = True
        layer = s
        for _ in range(delta):
            nb = A.neighbors(layer)
            layer = nb[~inside[nb]]
            if layer.size == 0:
                break
            inside[layer] = True
        ext = np.flatnonzero(inside)
        nb = A.neighbors(ext)
        extended.append(ext)
        boundaries.append(nb[~inside[nb]])
    interface = np.unique(np.concatenate(boundaries)) if boundaries else np.zeros(0, np.int64)
    pos = np.full(m, -1, dtype=np.int64)
    pos[interface] = np.arange(interface.size)
    interface_local = tuple(pos[b] for b in boundaries)
    owned_local = tuple(np.searchsorted(ext, s) for ext, s in zip(extended, sets))
    for arr in (interface, owner, *extended, *sets, *interface_local, *owned_local):
        arr.setflags(write=False)
    return OverlapPartition(
        m, tuple(sets), tuple(extended), int(delta), interface, interface_local, owned_local, owner
    )


# restriction / prolongation ------------------------------------------------------


def _check_len(x, n, what):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != n:
        raise DimensionError(f"{what}: expected length {n}, got {x.shape[0]}")
    return x


def restrict(part: OverlapPartition, i: int, x) -> np.ndarray:
    """R_{i,delta} x: entries of W_{i,delta} in local order."""
    return _check_len(x, part.m, "restrict")[part.extended[i]]


def prolong_restricted(part: OverlapPartition, i: int, x_local, out=None) -> np.ndarray:
    """R~_{i,delta}^T x_local: scatter only the owned entries; ``out`` is accumulated into."""
    x_local = _check_len(x_local, part.extended[i].size, "prolong_restricted")
    if out is None:
        out = np.zeros((part.m,) + x_local.shape[1:])
    out[part.owned[i]] += x_local[part.owned_local[i]]
    return out


def prolong(part: OverlapPartition, i: int, x_local, out=None) -> np.ndarray:
    """R_{i,delta}^T x_local (full write-back, used by additive Schwarz)."""
    x_local = _check_len(x_local, part.extended[i].size, "prolong")
    if out is None:
        out = np.zeros((part.m,) + x_local.shape[1:])
    out[part.extended[i]] += x_local
    return out


def restrict_interface(part: OverlapPartition, x) -> np.ndarray:
    return _check_len(x, part.m, "restrict_interface")[part.interface]


def prolong_interface(part: OverlapPartition, g) -> np.ndarray:
    g = _check_len(g, part.n, "prolong_interface")
    out = np.zeros((part.m,) + g.shape[1:])
    out[part.interface] = g
    return out


# persistence -------------------------------------------------------------------


def save_partition(path, part: OverlapPartition):
    with open(Path(path), "w") as fh:
        fh.write(f"{part.p} {part.m} {part.overlap_width}\n")
        for s in part.owned:
            fh.write(" ".join(map(str, s.tolist())) + "\n")


def load_partition(path, A: SparseMatrix | None = None):
    """Read a partition file.

    Returns ``(owned_sets, delta)``; when ``A`` is given, the overlapping
    partition is built directly.
    """
    with open(Path(path)) as fh:
        head = fh.readline().split()
        if len(head) != 3:
            raise ValueError(f"{path}: first line must be 'p m delta'")
        p, m, delta = (int(t) for t in head)
        owned = []
        for _ in range(p):
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: expected {p} subdomain lines")
            owned.append(np.array(line.split(), dtype=np.int64))
    _as_index_sets(owned, m)
    if A is not None:
        if A.nrows != m:
            raise DimensionError(f"{path}: partition is for m={m}, matrix has {A.nrows} rows")
        return extend_overlap(A, owned, delta)
    return owned, delta

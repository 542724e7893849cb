"""Graphical and matrix hypergraphs and their energies.

A graphical hypergraph is a list of weighted vertex sets. A matrix hypergraph
is a sparse matrix whose rows are partitioned into groups, each group carrying
an optional nonnegative weight; its energy at ``x`` is

    f(x) = sum_i v_i * max_{j in S_i} <a_j, x>**2.

Both types are immutable: every array they expose is read-only.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgument


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GraphicalHypergraph:
    """Hyperedges over vertices ``0..n-1`` stored in CSR layout.

    Hyperedge ``e`` is ``vertices[indptr[e]:indptr[e + 1]]`` (sorted, distinct)
    with weight ``weights[e]``.
    """

    n: int
    indptr: np.ndarray
    vertices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indptr", _frozen(self.indptr, np.int64))
        object.__setattr__(self, "vertices", _frozen(self.vertices, np.int64))
        object.__setattr__(self, "weights", _frozen(self.weights, np.float64))
        self._validate()

    @classmethod
    def from_edges(cls, n, edges, weights=None):
        """Build from a sequence of vertex collections.

        Vertex sets are sorted; duplicates inside one hyperedge are rejected.
        """
        edges = [list(e) for e in edges]
        sizes = np.array([len(e) for e in edges], dtype=np.int64)
        indptr = np.zeros(len(edges) + 1, dtype=np.int64)
        np.cumsum(sizes, out=indptr[1:])
        verts = np.array([v for e in edges for v in sorted(e)], dtype=np.int64)
        if weights is None:
            weights = np.ones(len(edges))
        return cls(int(n), indptr, verts, np.asarray(weights, dtype=np.float64))

    def _validate(self):
        if self.n < 1:
            raise InvalidArgument(f"vertex count must be positive, got {self.n}")
        k = len(self.indptr) - 1
        if k < 0 or self.indptr[0] != 0 or self.indptr[-1] != len(self.vertices):
            raise InvalidArgument("malformed hyperedge index pointer")
        if len(self.weights) != k:
            raise InvalidArgument(f"expected {k} weights, got {len(self.weights)}")
        sizes = np.diff(self.indptr)
        if k and sizes.min() < 2:
            bad = int(np.argmin(sizes))
            raise InvalidArgument(f"hyperedge {bad} has {sizes[bad]} vertices; need at least 2")
        if len(self.vertices) and (self.vertices.min() < 0 or self.vertices.max() >= self.n):
            raise InvalidArgument(f"vertex index out of range [0, {self.n})")
        if k:
            steps = np.diff(self.vertices)
            inner = np.ones(len(steps), dtype=bool)
            inner[self.indptr[1:-1] - 1] = False
            if np.any(steps[inner] <= 0):
                raise InvalidArgument("hyperedge vertex sets must be sorted and distinct")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise InvalidArgument("hyperedge weights must be finite and nonnegative")

    @property
    def k(self):
        return len(self.weights)

    @property
    def sizes(self):
        return np.diff(self.indptr)

    @property
    def rank(self):
        """Largest hyperedge cardinality (0 for an empty hypergraph)."""
        return int(self.sizes.max()) if self.k else 0

    def edge(self, e):
        return self.vertices[self.indptr[e]:self.indptr[e + 1]]

    def edges(self):
        return [self.edge(e) for e in range(self.k)]

    def drop_zero_weight(self):
        keep = self.weights > 0
        if keep.all():
            return self
        return GraphicalHypergraph.from_edges(
            self.n, [self.edge(e) for e in np.flatnonzero(keep)], self.weights[keep]
        )


@dataclass(frozen=True, eq=False)
class MatrixHypergraph:
    """Rows of a sparse ``m x n`` matrix partitioned into ``k`` groups.

    Attributes:
        rows: CSR matrix with sorted column indices and no explicit zeros.
        row_group: group id of every row; ids ``0..k-1`` all occur.
        group_weights: length-``k`` nonnegative weights, or ``None`` for a
            unit hypergraph.
    """

    rows: sp.csr_matrix
    row_group: np.ndarray
    group_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        A = sp.csr_matrix(self.rows, dtype=np.float64, copy=True)
        A.eliminate_zeros()
        A.sort_indices()
        for arr in (A.data, A.indices, A.indptr):
            arr.setflags(write=False)
        object.__setattr__(self, "rows", A)
        object.__setattr__(self, "row_group", _frozen(self.row_group, np.int64))
        if self.group_weights is not None:
            object.__setattr__(self, "group_weights", _frozen(self.group_weights, np.float64))
        k = self._validate()
        # stable ordering of rows by group, used by every per-group reduction
        order = np.argsort(self.row_group, kind="stable")
        ptr = np.zeros(k + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.row_group, minlength=k), out=ptr[1:])
        object.__setattr__(self, "_order", _frozen(order, np.int64))
        object.__setattr__(self, "_ptr", _frozen(ptr, np.int64))

    def _validate(self):
        m = self.rows.shape[0]
        if self.row_group.shape != (m,):
            raise InvalidArgument(f"row_group must have length m={m}")
        if not np.all(np.isfinite(self.rows.data)):
            raise InvalidArgument("matrix entries must be finite")
        if m and self.row_group.min() < 0:
            raise InvalidArgument("group ids must be nonnegative")
        k = int(self.row_group.max()) + 1 if m else 0
        counts = np.bincount(self.row_group, minlength=k)
        if np.any(counts == 0):
            raise InvalidArgument(f"group {int(np.argmin(counts))} is empty")
        empty_rows = np.flatnonzero(np.diff(self.rows.indptr) == 0)
        if len(empty_rows):
            raise InvalidArgument(f"row {int(empty_rows[0])} is all zero")
        if self.group_weights is not None:
            if self.group_weights.shape != (k,):
                raise InvalidArgument(f"expected {k} group weights, got {self.group_weights.shape}")
            if not np.all(np.isfinite(self.group_weights)) or np.any(self.group_weights < 0):
                raise InvalidArgument("group weights must be finite and nonnegative")
        return k

    @classmethod
    def from_groups(cls, rows, groups: Sequence[Sequence[int]], group_weights=None):
        """Build from an explicit list of row-index groups."""
        m = rows.shape[0]
        row_group = np.full(m, -1, dtype=np.int64)
        for i, g in enumerate(groups):
            g = np.asarray(g, dtype=np.int64)
            if np.any(row_group[g] != -1):
                raise InvalidArgument(f"group {i} overlaps an earlier group")
            row_group[g] = i
        if np.any(row_group == -1):
            raise InvalidArgument("groups do not cover every row")
        return cls(rows, row_group, group_weights)

    @property
    def m(self):
        return self.rows.shape[0]

    @property
    def n(self):
        return self.rows.shape[1]

    @property
    def k(self):
        return len(self._ptr) - 1

    @property
    def group_sizes(self):
        return np.diff(self._ptr)

    @property
    def rank(self):
        """Largest group size r."""
        return int(self.group_sizes.max()) if self.k else 0

    @property
    def is_unit(self):
        return self.group_weights is None

    @property
    def weights_or_ones(self):
        return np.ones(self.k) if self.group_weights is None else self.group_weights

    def group(self, i):
        """Row indices of group ``i`` in input order."""
        return self._order[self._ptr[i]:self._ptr[i + 1]]

    @property
    def groups(self):
        return [self.group(i) for i in range(self.k)]

    def group_sum(self, row_values):
        """Per-group sums of a length-``m`` vector."""
        return np.bincount(self.row_group, weights=row_values, minlength=self.k)

    def group_max(self, row_values):
        """Per-group maxima of a length-``m`` vector (or ``m x b`` array)."""
        row_values = np.asarray(row_values)
        if self.k == 0:
            return np.zeros((0,) + row_values.shape[1:])
        return np.maximum.reduceat(np.asarray(row_values)[self._order], self._ptr[:-1], axis=0)

    def with_weights(self, group_weights):
        return MatrixHypergraph(self.rows, self.row_group, group_weights)


@dataclass(frozen=True, eq=False)
class EnergyProfile:
    total: float
    per_group: np.ndarray
    argmax_row: np.ndarray


def _check_x(x, n):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise InvalidArgument(f"x must have shape ({n},), got {x.shape}")
    return x


def energy(G: MatrixHypergraph, x) -> EnergyProfile:
    """Per-group and total energy of ``x``; unit weights when ``G`` has none."""
    x = _check_x(x, G.n)
    sq = (G.rows @ x) ** 2
    sq_sorted = sq[G._order]
    starts = G._ptr[:-1]
    gmax = np.maximum.reduceat(sq_sorted, starts) if G.k else np.zeros(0)
    # first row (in group order) attaining the maximum
    pos = np.arange(G.m)
    hit = sq_sorted == np.repeat(gmax, G.group_sizes)
    first = np.minimum.reduceat(np.where(hit, pos, G.m), starts) if G.k else pos[:0]
    per_group = G.weights_or_ones * gmax
    per_group.setflags(write=False)
    argmax = G._order[first]
    return EnergyProfile(float(per_group.sum()), per_group, argmax)


def energy_batch(G: MatrixHypergraph, X):
    """Total energies for each column of the ``n x b`` array ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != G.n:
        raise InvalidArgument(f"X must have shape ({G.n}, b), got {X.shape}")
    sq = np.asarray(G.rows @ X) ** 2
    gmax = G.group_max(sq)
    return G.weights_or_ones @ gmax


def energy_graphical(G: GraphicalHypergraph, x) -> EnergyProfile:
    """Hypergraph energy computed from per-hyperedge spread ``max x - min x``."""
    x = _check_x(x, G.n)
    if G.k == 0:
        empty = np.zeros(0)
        return EnergyProfile(0.0, empty, np.zeros(0, dtype=np.int64))
    vals = x[G.vertices]
    starts = G.indptr[:-1]
    hi = np.maximum.reduceat(vals, starts)
    lo = np.minimum.reduceat(vals, starts)
    per_group = G.weights * (hi - lo) ** 2
    per_group.setflags(write=False)
    # report the clique-expansion row of the (first argmin, first argmax) pair
    sizes = G.sizes
    pos = np.arange(len(vals))
    end = len(vals)
    i_hi = np.minimum.reduceat(np.where(vals == np.repeat(hi, sizes), pos, end), starts) - starts
    i_lo = np.minimum.reduceat(np.where(vals == np.repeat(lo, sizes), pos, end), starts) - starts
    a = np.minimum(i_hi, i_lo)
    b = np.maximum(i_hi, i_lo)
    b = np.where(a == b, a + 1, b)
    pair_offsets = np.concatenate([[0], np.cumsum(sizes * (sizes - 1) // 2)[:-1]])
    argmax = pair_offsets + a * sizes - a * (a + 1) // 2 + (b - a - 1)
    return EnergyProfile(float(per_group.sum()), per_group, argmax)


def clique_expand(G: GraphicalHypergraph) -> MatrixHypergraph:
    """One row ``1_u - 1_v`` per pair ``u < v`` of every hyperedge.

    Pairs are emitted in lexicographic order within each hyperedge, and
    hyperedge ``e`` becomes group ``e`` with weight ``G.weights[e]``.
    """
    heads, tails, groups = [], [], []
    for e in range(G.k):
        verts = G.edge(e)
        iu, ju = np.triu_indices(len(verts), k=1)
        heads.append(verts[iu])
        tails.append(verts[ju])
        groups.append(np.full(len(iu), e, dtype=np.int64))
    return _incidence(G.n, heads, tails, groups, G.weights)


def default_centers(G: GraphicalHypergraph):
    """Lowest-index vertex of every hyperedge."""
    return G.vertices[G.indptr[:-1]].copy()


def star_expand(G: GraphicalHypergraph, centers=None) -> MatrixHypergraph:
    """Rows ``1_a - 1_c`` for every ``a != c`` of each hyperedge with center ``c``."""
    centers = default_centers(G) if centers is None else np.asarray(centers, dtype=np.int64)
    if centers.shape != (G.k,):
        raise InvalidArgument(f"need one center per hyperedge ({G.k}), got {centers.shape}")
    heads, tails, groups = [], [], []
    for e in range(G.k):
        verts = G.edge(e)
        c = centers[e]
        others = verts[verts != c]
        if len(others) == len(verts):
            raise InvalidArgument(f"center {c} is not in hyperedge {e}")
        heads.append(others)
        tails.append(np.full(len(others), c, dtype=np.int64))
        groups.append(np.full(len(others), e, dtype=np.int64))
    return _incidence(G.n, heads, tails, groups, G.weights)


def star_rows_in_clique(G: GraphicalHypergraph, centers=None):
    """Clique-expansion row index of every star-expansion row.

    Both expansions order rows hyperedge by hyperedge; the star row for
    ``(a, c)`` maps to the clique row of the pair ``{a, c}``.
    """
    centers = default_centers(G) if centers is None else np.asarray(centers, dtype=np.int64)
    out = []
    offset = 0
    for e in range(G.k):
        verts = G.edge(e)
        s = len(verts)
        c_pos = int(np.searchsorted(verts, centers[e]))
        for a_pos in range(s):
            if a_pos == c_pos:
                continue
            i, j = min(a_pos, c_pos), max(a_pos, c_pos)
            # index of pair (i, j) in row-major upper-triangular order
            out.append(offset + i * s - i * (i + 1) // 2 + (j - i - 1))
        offset += s * (s - 1) // 2
    return np.array(out, dtype=np.int64)


def _incidence(n, heads, tails, groups, weights):
    heads = np.concatenate(heads) if heads else np.zeros(0, dtype=np.int64)
    tails = np.concatenate(tails) if tails else np.zeros(0, dtype=np.int64)
    row_group = np.concatenate(groups) if groups else np.zeros(0, dtype=np.int64)
    m = len(heads)
    r = np.repeat(np.arange(m), 2)
    c = np.column_stack([heads, tails]).ravel()
    vals = np.tile([1.0, -1.0], m)
    A = sp.csr_matrix((vals, (r, c)), shape=(m, n))
    return MatrixHypergraph(A, row_group, np.asarray(weights, dtype=np.float64))


def unitize(G: MatrixHypergraph) -> MatrixHypergraph:
    """Fold group weights into the rows: ``a_j <- sqrt(v_i) a_j``.

    Zero-weight groups are dropped with their rows and the remaining groups
    renumbered in order.
    """
    if G.group_weights is None:
        return G
    v = G.group_weights
    keep_group = v > 0
    keep_row = keep_group[G.row_group]
    scale = np.sqrt(v)[G.row_group[keep_row]]
    A = sp.diags(scale) @ G.rows[keep_row]
    new_id = np.cumsum(keep_group) - 1
    return MatrixHypergraph(sp.csr_matrix(A), new_id[G.row_group[keep_row]], None)


def drop_groups(G: MatrixHypergraph, keep_group):
    """Sub-hypergraph of the groups flagged in ``keep_group``, renumbered in order."""
    keep_group = np.asarray(keep_group, dtype=bool)
    keep_row = keep_group[G.row_group]
    new_id = np.cumsum(keep_group) - 1
    gw = None if G.group_weights is None else G.group_weights[keep_group]
    return MatrixHypergraph(G.rows[keep_row], new_id[G.row_group[keep_row]], gw)
